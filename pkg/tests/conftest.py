import json

import numpy as np
import pytest

from regen_inventory import (
    CostParams,
    DelaySpec,
    Exponential,
    GammaDelay,
    KernelContext,
    LostClientPenalty,
    ModelParams,
    PointMass,
    Uniform,
)

# λ=1, N=3, N0=2, exponential(1) delay, c=(10, 1, 3, 2), c4(i) = 5i
GRID_CONFIG = {
    "model": {"lambda": 1.0, "N": 3, "N0": 2},
    "costs": {
        "c0": 10.0,
        "c1": 1.0,
        "c2": 3.0,
        "c3": 2.0,
        "c4": {"list": [], "affine_tail": {"base": 0.0, "slope": 5.0}},
    },
    "delay": {"family": "exponential", "rate": 1.0},
}

FAMILIES = {
    "point_mass": PointMass(1.0),
    "exponential": Exponential(rate=1.0),
    "gamma": GammaDelay(2.0, 0.5),
    "uniform": Uniform(0.5, 2.0),
}


@pytest.fixture
def grid_model():
    return ModelParams(1.0, 3, 2)


@pytest.fixture
def grid_costs():
    return CostParams(10.0, 1.0, 3.0, 2.0, LostClientPenalty((), 0.0, 5.0))


@pytest.fixture
def exp_delay():
    return DelaySpec(Exponential(rate=1.0))


@pytest.fixture
def grid_ctx(exp_delay):
    return KernelContext(1.0, exp_delay)


@pytest.fixture(params=sorted(FAMILIES))
def family(request):
    return FAMILIES[request.param]


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def grid_config_path(tmp_path):
    path = tmp_path / "grid.json"
    path.write_text(json.dumps(GRID_CONFIG), encoding="utf-8")
    return path


@pytest.fixture
def write_config(tmp_path):
    """Writes a config document (dict or raw text) and returns its path."""

    def write(data, name="config.json"):
        path = tmp_path / name
        path.write_text(data if isinstance(data, str) else json.dumps(data), encoding="utf-8")
        return path

    return write
