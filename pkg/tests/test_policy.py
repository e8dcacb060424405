import time

import numpy as np
import pytest

from regen_inventory.core import kernels
from regen_inventory.core.distributions import DelaySpec, Exponential, GammaDelay, PointMass
from regen_inventory.core.policy import (
    PolicyDistribution,
    argmax,
    argmin,
    dominance_gap,
    mixed_value,
    scan,
)
from regen_inventory.core.profit import CostParams, Evaluation, LostClientPenalty, ModelParams, ProfitBreakdown, efficiency

ACCEPTANCE_MODEL = ModelParams(1.0, 4, 3)
ACCEPTANCE_COSTS = CostParams(10.0, 1.0, 3.0, 2.0, LostClientPenalty((), 0.0, 5.0))
ACCEPTANCE_DELAYS = [PointMass(1.0), Exponential(rate=1.0), GammaDelay(2.0, 0.5)]


def _ev(r, A, B):
    return Evaluation(r=r, A=A, B=B, I=A / B, breakdown=ProfitBreakdown(income=A), s_truncated_at=0, tail_bound=0.0)


def test_scan_covers_every_level_largest_first(grid_model, grid_costs, exp_delay):
    table = scan(grid_model, grid_costs, exp_delay)
    assert [e.r for e in table] == [3, 2, 1, 0, -1, -2]


def test_scan_matches_single_evaluations(grid_model, grid_costs, exp_delay, grid_ctx):
    table = scan(grid_model, grid_costs, exp_delay)
    for e in table:
        assert e == efficiency(grid_model, grid_costs, grid_ctx, e.r)


def test_threaded_scan_is_identical(grid_model, grid_costs, exp_delay):
    assert scan(grid_model, grid_costs, exp_delay, workers=4) == scan(grid_model, grid_costs, exp_delay)


def test_zero_costs_tie_everywhere(grid_model, exp_delay):
    result = argmax(scan(grid_model, CostParams(), exp_delay))
    assert result.r_star == 3
    assert result.I_star == 0.0
    assert result.ties == (3, 2, 1, 0, -1, -2)


def test_unique_maximum():
    table = [_ev(2, 1.0, 1.0), _ev(1, 5.0, 2.0), _ev(0, 2.0, 1.0), _ev(-1, -1.0, 3.0)]
    result = argmax(table)
    assert result.r_star == 1
    assert result.ties == (1,)
    assert result.I_star == 2.5
    assert result.sense == "max"


def test_ties_go_to_larger_level():
    table = [_ev(2, 1.0, 1.0), _ev(1, 3.0, 1.0), _ev(0, 3.0, 1.0), _ev(-1, 3.0 * (1 + 1e-14), 1.0)]
    result = argmax(table)
    assert result.ties == (1, 0, -1)
    assert result.r_star == 1


def test_argmin_reports_worst_level():
    table = [_ev(2, 1.0, 1.0), _ev(1, -3.0, 1.0), _ev(0, -3.0, 1.0)]
    result = argmin(table)
    assert result.r_star == 1
    assert result.ties == (1, 0)
    assert result.sense == "min"


def test_empty_table_rejected():
    with pytest.raises(ValueError):
        argmax([])


def test_argmax_matches_brute_force(grid_model, grid_costs, exp_delay, grid_ctx):
    result = argmax(scan(grid_model, grid_costs, exp_delay))
    values = {r: efficiency(grid_model, grid_costs, grid_ctx, r).I for r in grid_model.levels}
    best = max(values.values())
    assert result.I_star == best
    assert values[result.r_star] == best
    assert result.to_dict()["r_star"] == result.r_star


@pytest.mark.parametrize("family", ACCEPTANCE_DELAYS)
def test_mixed_strategies_never_beat_best_level(family):
    table = scan(ACCEPTANCE_MODEL, ACCEPTANCE_COSTS, DelaySpec(family))
    best = argmax(table)
    levels = ACCEPTANCE_MODEL.levels
    rng = np.random.default_rng(2024)
    alphas = [PolicyDistribution.random(levels, rng) for _ in range(1000)]
    assert dominance_gap(table, alphas) <= 1e-9
    assert mixed_value(table, PolicyDistribution.degenerate(levels, best.r_star)) == best.I_star


def test_degenerate_strategy_recovers_each_level(grid_model, grid_costs, exp_delay):
    table = scan(grid_model, grid_costs, exp_delay)
    for e in table:
        assert mixed_value(table, PolicyDistribution.degenerate(grid_model.levels, e.r)) == e.I


def test_uniform_strategy_with_equal_ratios():
    table = [_ev(r, 0.7 * B, B) for r, B in zip((2, 1, 0, -1), (1.0, 2.5, 4.0, 7.5))]
    alpha = PolicyDistribution.uniform((2, 1, 0, -1))
    assert mixed_value(table, alpha) == pytest.approx(0.7, rel=1e-14)


def test_mixed_value_is_ratio_of_weighted_sums():
    table = [_ev(1, 4.0, 2.0), _ev(0, 1.0, 1.0)]
    alpha = PolicyDistribution((1, 0), [0.25, 0.75])
    assert mixed_value(table, alpha) == pytest.approx((0.25 * 4.0 + 0.75 * 1.0) / (0.25 * 2.0 + 0.75 * 1.0))


def test_mixed_value_requires_same_levels():
    table = [_ev(1, 4.0, 2.0), _ev(0, 1.0, 1.0)]
    with pytest.raises(ValueError, match="covers"):
        mixed_value(table, PolicyDistribution.uniform((1, 0, -1)))


@pytest.mark.parametrize(
    "levels, alpha, match",
    [
        ((1, 0), [0.5, 0.6], "sum to 1"),
        ((1, 0), [1.5, -0.5], ">= 0"),
        ((1, 0), [1.0], "entries"),
        ((1, 1), [0.5, 0.5], "distinct"),
    ],
)
def test_policy_distribution_validated(levels, alpha, match):
    with pytest.raises(ValueError, match=match):
        PolicyDistribution(levels, alpha)


def test_degenerate_rejects_unknown_level():
    with pytest.raises(ValueError):
        PolicyDistribution.degenerate((1, 0), 5)


def test_scaling_costs_scales_ratios_and_keeps_optimum(grid_model, grid_costs, exp_delay):
    base = scan(grid_model, grid_costs, exp_delay)
    scaled = scan(grid_model, grid_costs.scaled(10.0), exp_delay)
    for a, b in zip(base, scaled):
        assert b.I == pytest.approx(10.0 * a.I, rel=1e-8, abs=1e-10)
    assert argmax(scaled).r_star == argmax(base).r_star


def test_random_strategies_are_valid_distributions(rng):
    alpha = PolicyDistribution.random((3, 2, 1), rng)
    assert alpha.alpha.sum() == pytest.approx(1.0, abs=1e-12)
    assert np.all(alpha.alpha >= 0.0)
    assert alpha.weight(2) == alpha.alpha[1]


def test_full_scan_of_two_hundred_levels_is_fast(family):
    model = ModelParams(1.0, 150, 50)
    kernels._cached_table.cache_clear()
    start = time.perf_counter()
    table = scan(model, ACCEPTANCE_COSTS, DelaySpec(family))
    elapsed = time.perf_counter() - start
    assert len(table) == 201
    assert not any(e.flagged for e in table)
    assert elapsed < 1.0
