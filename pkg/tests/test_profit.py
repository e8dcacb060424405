import math

import numpy as np
import pytest

from regen_inventory.core import profit
from regen_inventory.core.distributions import DelaySpec, Exponential, GammaDelay, PointMass, Uniform
from regen_inventory.core.kernels import KernelContext, Tolerances, mixture_prob, residual_tau
from regen_inventory.core.profit import (
    CaseKey,
    CostParams,
    Evaluation,
    FormulaVariant,
    LostClientPenalty,
    ModelParams,
    ProfitBreakdown,
    case_label,
    case_partition,
    case_terms,
    consumption_time,
    cycle_length,
    cycle_profit,
    efficiency,
    expected_units_sold,
    term_profit,
)
from regen_inventory.errors import DispatchError

SHAPES = [(1, 1), (3, 2), (5, 3), (2, 4), (4, 1)]


def _walk(N, N0, r, s):
    """Replays one cycle with ``s`` delay arrivals and tallies the level sums."""
    before = list(range(N, r, -1))
    level, delay_levels, lost = r, [], 0
    for _ in range(s):
        delay_levels.append(level)
        if level > -N0:
            level -= 1
        else:
            lost += 1
    return {
        "sold": N - level,
        "stock_before_delay": sum(max(x, 0) for x in before),
        "deficit_before_delay": sum(max(-x, 0) for x in before),
        "stock_in_delay": sum(max(x, 0) for x in delay_levels),
        "deficit_in_delay": sum(max(-x, 0) for x in delay_levels),
        "stock_after_last": max(level, 0),
        "deficit_after_last": max(-level, 0),
        "lost": lost,
    }


@pytest.mark.parametrize("N, N0", SHAPES)
def test_case_ranges_partition_every_count(N, N0):
    model = ModelParams(1.0, N, N0)
    s = np.arange(10 * (N + N0) + 1)
    for r in model.levels:
        _, masks = case_partition(model, r, s)
        claimed = sum(m.astype(int) for m in masks.values())
        assert np.all(claimed == 1)


@pytest.mark.parametrize("N, N0", SHAPES)
def test_case_coefficients_match_replayed_cycles(N, N0):
    model = ModelParams(1.0, N, N0)
    counts = np.arange(3 * (N + N0) + 2)
    for r in model.levels:
        vectorized = case_terms(model, r, counts)
        for s in counts:
            expected = _walk(N, N0, r, int(s))
            scalar = case_terms(model, r, int(s))
            for field, value in expected.items():
                assert getattr(scalar, field) == value, (r, int(s), field)
                assert getattr(vectorized, field)[s] == value, (r, int(s), field)


def test_missing_case_range_is_reported(monkeypatch):
    patched = []
    for name, pred, cases in profit._DISPATCH:
        if name == "order_at_zero":
            cases = tuple(c for c in cases if c[0] != "backlog_full")
        patched.append((name, pred, cases))
    monkeypatch.setattr(profit, "_DISPATCH", tuple(patched))
    model = ModelParams(1.0, 3, 2)
    with pytest.raises(DispatchError, match="s=2"):
        case_partition(model, 0, np.arange(10))
    # other variants are untouched
    case_partition(model, 1, np.arange(10))


def test_overlapping_variant_is_reported(monkeypatch):
    extra = ("order_anywhere", lambda r, N, N0: True, profit._STOCKED_CASES)
    monkeypatch.setattr(profit, "_DISPATCH", profit._DISPATCH + (extra,))
    with pytest.raises(DispatchError, match="2 variants"):
        case_terms(ModelParams(1.0, 3, 2), 1, 0)


@pytest.mark.parametrize(
    "r, s, expected",
    [
        (3, 0, CaseKey("order_at_full", "idle")),
        (3, 2, CaseKey("order_at_full", "selling")),
        (3, 3, CaseKey("order_at_full", "sold_out")),
        (1, 2, CaseKey("order_positive", "backlog")),
        (1, 3, CaseKey("order_positive", "backlog_full")),
        (0, 9, CaseKey("order_at_zero", "lost_sales")),
        (-1, 1, CaseKey("order_in_backlog", "backlog_full")),
        (-2, 4, CaseKey("order_at_cap", "lost_sales")),
    ],
)
def test_case_label(r, s, expected):
    assert case_label(ModelParams(1.0, 3, 2), r, s) == expected


def test_only_income_at_backlog_cap_sells_every_unit(grid_ctx):
    model = ModelParams(1.0, 3, 2)
    costs = CostParams(c0=1.0)
    A, breakdown, trunc = cycle_profit(model, costs, grid_ctx, -2)
    assert A == pytest.approx(5.0, rel=1e-8)
    assert breakdown.income == A
    assert not trunc.flagged


@pytest.mark.parametrize("family", [Exponential(rate=1.0), GammaDelay(2.0, 0.5), Uniform(0.5, 2.0), PointMass(1.0)])
def test_units_sold_identity(family):
    model = ModelParams(1.3, 4, 3)
    ctx = KernelContext(model.lam, DelaySpec(family))
    costs = CostParams(c0=2.0)
    for r in model.levels:
        A, _, _ = cycle_profit(model, costs, ctx, r)
        assert A == pytest.approx(2.0 * expected_units_sold(model, ctx, r), rel=1e-8)


def test_units_sold_against_geometric_series(grid_ctx):
    model = ModelParams(1.0, 3, 2)
    costs = CostParams(c0=1.0)
    s = np.arange(400)
    geometric = 0.5 ** (s + 1)
    for r in model.levels:
        expected = model.N - r + float(np.sum(np.minimum(s, r + model.N0) * geometric))
        A, _, _ = cycle_profit(model, costs, grid_ctx, r)
        assert A == pytest.approx(expected, rel=1e-8)


def test_purchase_cost_strictly_lowers_profit(grid_model, grid_costs, grid_ctx):
    dearer = CostParams(grid_costs.c0, grid_costs.c1, grid_costs.c2 + 0.5, grid_costs.c3, grid_costs.c4)
    for r in grid_model.levels:
        cheap = efficiency(grid_model, grid_costs, grid_ctx, r)
        dear = efficiency(grid_model, dearer, grid_ctx, r)
        assert dear.A < cheap.A
        assert dear.I < cheap.I


@pytest.mark.parametrize(
    "costs",
    [
        CostParams(c1=1.0),
        CostParams(c2=1.0),
        CostParams(c3=0.5, c4=LostClientPenalty((1.0, 2.0))),
        CostParams(c1=1.0, c2=2.0, c3=3.0, c4=LostClientPenalty((), 0.0, 5.0)),
    ],
)
def test_costs_without_income_lose_money(grid_model, grid_ctx, costs):
    for r in grid_model.levels:
        A, _, _ = cycle_profit(grid_model, costs, grid_ctx, r)
        assert A < 0.0


def test_zero_costs_give_zero_everywhere(grid_model, grid_ctx):
    for r in grid_model.levels:
        ev = efficiency(grid_model, CostParams(), grid_ctx, r)
        assert ev.A == 0.0
        assert ev.I == 0.0
        assert not ev.flagged


def test_printed_idle_term_at_full_stock():
    model = ModelParams(1.0, 3, 2)
    ctx = KernelContext(1.0, DelaySpec(Exponential(rate=1.0)))
    costs = CostParams(c1=1.0)
    value, breakdown = term_profit(model, costs, ctx, 3, 0, FormulaVariant.PRINTED)
    # -c1 * N * mean_delay * P(A_0)
    assert value == pytest.approx(-3.0 * 1.0 * 0.5, rel=1e-12)
    assert breakdown.holding == pytest.approx(1.5, rel=1e-12)

    exact, _ = term_profit(model, costs, ctx, 3, 0, FormulaVariant.EXACT)
    assert exact == pytest.approx(-3.0 * residual_tau(ctx, 0), rel=1e-12)


def test_printed_and_exact_agree_for_point_mass_idle_term():
    model = ModelParams(1.0, 3, 2)
    ctx = KernelContext(1.0, DelaySpec(PointMass(0.7)))
    costs = CostParams(c1=1.0, c3=1.0)
    for r in (3, 2, -1, -2):
        printed, _ = term_profit(model, costs, ctx, r, 0, "printed")
        exact, _ = term_profit(model, costs, ctx, r, 0, "exact")
        assert printed == pytest.approx(exact, rel=1e-12)


def test_exact_terms_weight_every_segment_by_residual(grid_model, grid_ctx):
    costs = CostParams(c1=1.0, c3=1.0)
    r, s = 1, 4
    terms = case_terms(grid_model, r, s)
    P, tau = mixture_prob(grid_ctx, s), residual_tau(grid_ctx, s)
    expected_holding = terms.stock_before_delay / grid_model.lam * P + (terms.stock_in_delay + terms.stock_after_last) * tau
    expected_deficit = (terms.deficit_before_delay / grid_model.lam * P
                        + (terms.deficit_in_delay + terms.deficit_after_last) * tau)
    _, breakdown = term_profit(grid_model, costs, grid_ctx, r, s)
    assert breakdown.holding == pytest.approx(expected_holding, rel=1e-12)
    assert breakdown.deficit == pytest.approx(expected_deficit, rel=1e-12)


def test_vanishing_delay_sells_the_consumption_phase_only():
    model = ModelParams(1.0, 5, 2)
    ctx = KernelContext(1.0, DelaySpec(PointMass(1e-9)))
    costs = CostParams(c0=10.0, c2=4.0)
    A, _, _ = cycle_profit(model, costs, ctx, 2)
    assert A == pytest.approx(18.0, rel=1e-6)
    ev = efficiency(model, costs, ctx, 2)
    assert ev.I == pytest.approx(6.0, rel=1e-6)


def test_series_sums_terms(grid_model, grid_costs, grid_ctx):
    for r in grid_model.levels:
        A, breakdown, trunc = cycle_profit(grid_model, grid_costs, grid_ctx, r)
        terms = [term_profit(grid_model, grid_costs, grid_ctx, r, s)[0] for s in range(trunc.s_truncated_at + 1)]
        assert A == pytest.approx(math.fsum(terms), rel=1e-12, abs=1e-12)
        assert breakdown.total == A
        assert trunc.s_truncated_at > grid_model.N + grid_model.N0
        assert not trunc.flagged


def test_flagged_when_cap_is_too_short(grid_model, grid_costs, caplog):
    tight = Tolerances(cap_sigmas=0.5, cap_padding=0)
    ctx = KernelContext(1.0, DelaySpec(Exponential(rate=0.05)), tolerances=tight)
    with caplog.at_level("WARNING"):
        ev = efficiency(grid_model, grid_costs, ctx, 0)
    assert ev.flagged
    assert ev.tail_bound > 0.0
    assert "hard cap" in caplog.text


@pytest.mark.parametrize(
    "lam, N, N0, r, T, expected",
    [(2.0, 5, 2, 2, 3.0, 4.5), (1.0, 3, 2, -2, 1.0, 6.0), (1.0, 3, 2, 3, 1.7, 1.7)],
)
def test_cycle_length(lam, N, N0, r, T, expected):
    model = ModelParams(lam, N, N0)
    ctx = KernelContext(lam, DelaySpec(PointMass(T)))
    assert cycle_length(model, ctx, r) == pytest.approx(expected, rel=1e-15)
    assert consumption_time(model, r) == (N - r) / lam


def test_efficiency_is_ratio(grid_model, grid_costs, grid_ctx):
    for r in grid_model.levels:
        ev = efficiency(grid_model, grid_costs, grid_ctx, r)
        assert ev.I == ev.A / ev.B
        assert ev.B > 0.0
        assert ev.formula == "exact"


def test_evaluation_dict_round_trip(grid_model, grid_costs, grid_ctx):
    ev = efficiency(grid_model, grid_costs, grid_ctx, 1, "printed")
    assert Evaluation.from_dict(ev.to_dict()) == ev
    assert ev.formula == "printed"


def test_breakdown_total():
    b = ProfitBreakdown(10.0, 1.0, 2.0, 3.0, 0.5)
    assert b.total == 3.5
    assert (b + b).total == 7.0


def test_reorder_level_validated(grid_model, grid_costs, grid_ctx):
    with pytest.raises(ValueError, match=r"\[-2, 3\]"):
        efficiency(grid_model, grid_costs, grid_ctx, 4)
    with pytest.raises(ValueError):
        term_profit(grid_model, grid_costs, grid_ctx, 0, -1)


@pytest.mark.parametrize("kwargs", [{"lam": 0.0, "N": 3, "N0": 2}, {"lam": 1.0, "N": 0, "N0": 2},
                                    {"lam": 1.0, "N": 3, "N0": 0}, {"lam": 1.0, "N": 2.5, "N0": 1}])
def test_model_params_validated(kwargs):
    with pytest.raises(ValueError):
        ModelParams(**kwargs)


def test_lost_client_penalty_tail():
    c4 = LostClientPenalty((5.0, 10.0))
    assert [c4(i) for i in range(5)] == [0.0, 5.0, 10.0, 15.0, 20.0]
    np.testing.assert_array_equal(c4.evaluate(np.array([0, 1, 2, 3, 4])), [0.0, 5.0, 10.0, 15.0, 20.0])

    affine = LostClientPenalty((), 1.0, 2.0)
    assert affine(3) == 7.0
    assert affine.growth_bound() == (1.0, 2.0)
    assert LostClientPenalty.from_dict(affine.to_dict()) == affine


@pytest.mark.parametrize(
    "values, base, slope",
    [((3.0, 1.0), None, None), ((), 1.0, -1.0), ((-1.0,), None, None), ((), 1.0, None)],
)
def test_lost_client_penalty_rejects(values, base, slope):
    with pytest.raises(ValueError):
        LostClientPenalty(values, base, slope)


def test_formula_variant_parse():
    assert FormulaVariant.parse("printed") is FormulaVariant.PRINTED
    with pytest.raises(ValueError, match="Supported"):
        FormulaVariant.parse("verbatim")
