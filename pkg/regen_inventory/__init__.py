# coding=utf-8
# SPDX-License-Identifier: Apache-2.0
"""
regen_inventory: long-run profit of reorder policies in a regenerative inventory model.
"""

from .configuration import RunConfig, SimulationSettings
from .core.distributions import DelaySpec, Exponential, GammaDelay, PointMass, Uniform
from .core.kernels import KernelContext, Tolerances
from .core.policy import PolicyDistribution, argmax, argmin, mixed_value, scan
from .core.profit import (
    CostParams,
    Evaluation,
    FormulaVariant,
    LostClientPenalty,
    ModelParams,
    cycle_length,
    cycle_profit,
    efficiency,
)
from .simulation.simulator import SimulationReport, estimate

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "CostParams",
    "DelaySpec",
    "Evaluation",
    "Exponential",
    "FormulaVariant",
    "GammaDelay",
    "KernelContext",
    "LostClientPenalty",
    "ModelParams",
    "PointMass",
    "PolicyDistribution",
    "RunConfig",
    "SimulationReport",
    "SimulationSettings",
    "Tolerances",
    "Uniform",
    "argmax",
    "argmin",
    "cycle_length",
    "cycle_profit",
    "efficiency",
    "estimate",
    "mixed_value",
    "scan",
]
