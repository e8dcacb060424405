# coding=utf-8
# SPDX-License-Identifier: Apache-2.0
"""
Expected profit and length of one regeneration period, and their ratio.

A cycle starts with ``N`` units on hand. Demand arrives as a Poisson flow;
after ``N - r`` sales the order is placed, and during the random delay that
follows customers are served from stock, then backlogged up to ``N0``, then
lost. The expected cycle profit is a series over the number ``s`` of delay
arrivals. Each term is picked from a dispatch table keyed on the reorder-level
variant and the range ``s`` falls in, and is assembled from ``P(A_s)``,
``tau_s`` and the mean delay.
"""
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Dict, Mapping, NamedTuple, Optional, Tuple, Union

import numpy as np

from ..errors import DispatchError
from .kernels import KernelContext, KernelTable, hard_cap, kernel_table

logger = logging.getLogger(__name__)

IntOrArray = Union[int, np.ndarray]


class FormulaVariant(str, Enum):
    """How holding and deficit time is weighted inside the delay period.

    EXACT weights every delay segment by ``tau_s``, the joint expectation of a
    segment length with ``A_s``. PRINTED keeps the coefficients of the closed
    forms as they are usually written: segments before the last arrival weighted
    by ``P(A_s)/lam`` and, when the level never changes during the delay, the
    whole delay weighted by ``mean_delay * P(A_s)``.
    """

    EXACT = "exact"
    PRINTED = "printed"

    @classmethod
    def parse(cls, value: Union[str, "FormulaVariant"]) -> "FormulaVariant":
        if isinstance(value, cls):
            return value
        try:
            return cls(value)
        except ValueError:
            raise ValueError(
                f"Unsupported formula: {value!r}. Supported: {sorted(v.value for v in cls)}"
            ) from None


def _require_int(name: str, value: Any, minimum: int) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)) or value < minimum:
        raise ValueError(f"{name} must be an integer >= {minimum} (got {value!r})")
    return int(value)


def _require_nonnegative(name: str, value: Any) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value) or value < 0:
        raise ValueError(f"{name} must be a finite number >= 0 (got {value!r})")
    return float(value)


@dataclass(frozen=True)
class ModelParams:
    """Demand rate, replenishment level and backlog cap."""

    lam: float  # demand rate, 1/time
    N: int  # units on hand after each replenishment
    N0: int  # maximum deferred demand, units

    def __post_init__(self):
        lam = self.lam
        if isinstance(lam, bool) or not isinstance(lam, (int, float)) or not math.isfinite(lam) or lam <= 0:
            raise ValueError(f"lambda must be a finite number > 0 (got {lam!r})")
        object.__setattr__(self, "lam", float(lam))
        object.__setattr__(self, "N", _require_int("N", self.N, 1))
        object.__setattr__(self, "N0", _require_int("N0", self.N0, 1))

    @property
    def levels(self) -> Tuple[int, ...]:
        """Admissible reorder levels, largest first."""
        return tuple(range(self.N, -self.N0 - 1, -1))

    def validate_r(self, r: Any) -> int:
        if isinstance(r, bool) or not isinstance(r, (int, np.integer)) or not -self.N0 <= r <= self.N:
            raise ValueError(f"r must be an integer in [-N0, N] = [{-self.N0}, {self.N}] (got {r!r})")
        return int(r)

    def to_dict(self) -> Dict[str, Any]:
        return {"lambda": self.lam, "N": self.N, "N0": self.N0}


@dataclass(frozen=True)
class LostClientPenalty:
    """Cost c4(i) of losing ``i`` clients in one cycle.

    ``values[i-1]`` is used for ``i <= len(values)``, ``base + slope * i`` past
    the list. Without an explicit tail the slope is the last difference of the
    list and the base continues the line through its last entry.
    """

    values: Tuple[float, ...] = ()
    base: Optional[float] = None
    slope: Optional[float] = None

    def __post_init__(self):
        values = tuple(_require_nonnegative(f"c4.list[{i}]", v) for i, v in enumerate(self.values))
        object.__setattr__(self, "values", values)
        if (self.base is None) != (self.slope is None):
            raise ValueError("c4.affine_tail needs both base and slope")
        if self.base is None:
            slope = values[-1] - values[-2] if len(values) >= 2 else 0.0
            base = values[-1] - slope * len(values) if values else 0.0
        else:
            base, slope = self.base, self.slope
            for name, value in (("base", base), ("slope", slope)):
                if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
                    raise ValueError(f"c4.affine_tail.{name} must be a finite number (got {value!r})")
        if slope < 0:
            raise ValueError(f"c4 tail slope must be >= 0 (got {slope!r})")
        if base + slope * (len(values) + 1) < 0:
            raise ValueError(f"c4 tail is negative past the list (base={base!r}, slope={slope!r})")
        object.__setattr__(self, "base", float(base))
        object.__setattr__(self, "slope", float(slope))

    def __call__(self, i: int) -> float:
        if i <= 0:
            return 0.0
        if i <= len(self.values):
            return self.values[i - 1]
        return self.base + self.slope * i

    def evaluate(self, lost: np.ndarray) -> np.ndarray:
        lost = np.asarray(lost)
        tail = self.base + self.slope * lost
        if self.values:
            table = np.asarray(self.values)
            listed = table[np.clip(lost - 1, 0, len(self.values) - 1)]
            tail = np.where(lost <= len(self.values), listed, tail)
        return np.where(lost <= 0, 0.0, tail)

    def growth_bound(self) -> Tuple[float, float]:
        """``(a, b)`` with ``c4(i) <= a + b*i`` for every ``i >= 1``."""
        a = max(self.base, 0.0)
        for i, v in enumerate(self.values, start=1):
            a = max(a, v - self.slope * i)
        return a, self.slope

    def scaled(self, k: float) -> "LostClientPenalty":
        return LostClientPenalty(tuple(k * v for v in self.values), k * self.base, k * self.slope)

    def to_dict(self) -> Dict[str, Any]:
        return {"list": list(self.values), "affine_tail": {"base": self.base, "slope": self.slope}}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "LostClientPenalty":
        if not isinstance(data, Mapping):
            raise ValueError(f"c4 must be an object with 'list' and optional 'affine_tail' (got {data!r})")
        unknown = sorted(set(data) - {"list", "affine_tail"})
        if unknown:
            raise ValueError(f"Unsupported c4 key(s): {unknown}. Supported: ['affine_tail', 'list']")
        values = data.get("list", [])
        if not isinstance(values, (list, tuple)):
            raise ValueError(f"c4.list must be an array (got {values!r})")
        tail = data.get("affine_tail")
        if tail is None:
            return cls(tuple(values))
        if not isinstance(tail, Mapping) or set(tail) != {"base", "slope"}:
            raise ValueError(f"c4.affine_tail must be {{'base': ..., 'slope': ...}} (got {tail!r})")
        return cls(tuple(values), tail["base"], tail["slope"])


@dataclass(frozen=True)
class CostParams:
    """Money parameters of the model."""

    c0: float = 0.0  # income per unit sold
    c1: float = 0.0  # holding cost per unit per time
    c2: float = 0.0  # purchase cost per unit
    c3: float = 0.0  # deficit penalty per backlogged unit per time
    c4: LostClientPenalty = field(default_factory=LostClientPenalty)  # lost-client penalty per cycle

    def __post_init__(self):
        for name in ("c0", "c1", "c2", "c3"):
            object.__setattr__(self, name, _require_nonnegative(name, getattr(self, name)))

    def scaled(self, k: float) -> "CostParams":
        return CostParams(k * self.c0, k * self.c1, k * self.c2, k * self.c3, self.c4.scaled(k))

    def to_dict(self) -> Dict[str, Any]:
        return {"c0": self.c0, "c1": self.c1, "c2": self.c2, "c3": self.c3, "c4": self.c4.to_dict()}


@dataclass(frozen=True)
class ProfitBreakdown:
    """Expected money per cycle split by cost category."""

    income: float = 0.0
    holding: float = 0.0
    purchase: float = 0.0
    deficit: float = 0.0
    lost_client: float = 0.0

    @property
    def total(self) -> float:
        return self.income - self.holding - self.purchase - self.deficit - self.lost_client

    def __add__(self, other: "ProfitBreakdown") -> "ProfitBreakdown":
        return ProfitBreakdown(
            self.income + other.income,
            self.holding + other.holding,
            self.purchase + other.purchase,
            self.deficit + other.deficit,
            self.lost_client + other.lost_client,
        )

    def to_dict(self) -> Dict[str, float]:
        return {
            "income": self.income,
            "holding": self.holding,
            "purchase": self.purchase,
            "deficit": self.deficit,
            "lost_client": self.lost_client,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, float]) -> "ProfitBreakdown":
        return cls(**{k: float(data[k]) for k in ("income", "holding", "purchase", "deficit", "lost_client")})


@dataclass(frozen=True)
class Evaluation:
    """A(r), B(r) and I_r = A/B for one reorder level, with truncation diagnostics."""

    r: int
    A: float  # money per cycle
    B: float  # time per cycle
    I: float  # money per time
    breakdown: ProfitBreakdown
    s_truncated_at: int  # last s included in the series
    tail_bound: float  # bound on the dropped terms, money per cycle
    flagged: bool = False  # tail bound above tolerance at the hard cap
    formula: str = FormulaVariant.EXACT.value

    def to_dict(self) -> Dict[str, Any]:
        return {
            "r": self.r,
            "A": self.A,
            "B": self.B,
            "I": self.I,
            "breakdown": self.breakdown.to_dict(),
            "s_truncated_at": self.s_truncated_at,
            "tail_bound": self.tail_bound,
            "flagged": self.flagged,
            "formula": self.formula,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "Evaluation":
        return cls(
            r=int(data["r"]),
            A=float(data["A"]),
            B=float(data["B"]),
            I=float(data["I"]),
            breakdown=ProfitBreakdown.from_dict(data["breakdown"]),
            s_truncated_at=int(data["s_truncated_at"]),
            tail_bound=float(data["tail_bound"]),
            flagged=bool(data["flagged"]),
            formula=str(data["formula"]),
        )


@dataclass(frozen=True)
class CaseTerms:
    """Integer coefficients of one (r, s) case.

    Level sums count each inter-event gap once at the stock (or deficit) level
    held during it; the consumption phase has ``N - r`` gaps, the delay ``s``
    gaps before the last arrival plus the stretch after it.
    """

    sold: IntOrArray
    stock_before_delay: IntOrArray
    deficit_before_delay: IntOrArray
    stock_in_delay: IntOrArray  # delay gaps before the last arrival
    deficit_in_delay: IntOrArray
    stock_after_last: IntOrArray  # level from the last arrival to replenishment
    deficit_after_last: IntOrArray
    lost: IntOrArray


class CaseKey(NamedTuple):
    variant: str
    case: str


def _tri(n):
    return n * (n + 1) // 2


# Case functions return the nonzero delay-period coefficients only; the
# consumption-phase sums depend on r alone and are filled in by case_terms.

# r >= 0: stock is still positive when the order goes out.

def _stocked_idle(N, N0, r, s):
    return {"sold": N - r, "stock_after_last": r}


def _stocked_selling(N, N0, r, s):
    return {"sold": N - r + s, "stock_in_delay": s * (2 * r - s + 1) // 2, "stock_after_last": r - s}


def _stocked_sold_out(N, N0, r, s):
    return {"sold": N, "stock_in_delay": _tri(r)}


def _stocked_backlog(N, N0, r, s):
    return {
        "sold": N - r + s,
        "stock_in_delay": _tri(r),
        "deficit_in_delay": (s - r) * (s - r - 1) // 2,
        "deficit_after_last": s - r,
    }


def _stocked_backlog_full(N, N0, r, s):
    return {
        "sold": N + N0,
        "stock_in_delay": _tri(r),
        "deficit_in_delay": N0 * (N0 - 1) // 2,
        "deficit_after_last": N0,
    }


def _stocked_lost_sales(N, N0, r, s):
    return {
        "sold": N + N0,
        "stock_in_delay": _tri(r),
        "deficit_in_delay": N0 * (2 * s - 2 * r - N0 - 1) // 2,
        "deficit_after_last": N0,
        "lost": s - r - N0,
    }


# r < 0: the order goes out with -r units already backlogged.

def _backlogged_idle(N, N0, r, s):
    return {"sold": N - r, "deficit_after_last": -r}


def _backlogged_backlog(N, N0, r, s):
    return {"sold": N - r + s, "deficit_in_delay": s * (s - 1 - 2 * r) // 2, "deficit_after_last": s - r}


def _backlogged_backlog_full(N, N0, r, s):
    return {"sold": N + N0, "deficit_in_delay": (N0 * (N0 - 1) - r * (r + 1)) // 2, "deficit_after_last": N0}


def _backlogged_lost_sales(N, N0, r, s):
    return {
        "sold": N + N0,
        "deficit_in_delay": (N0 * (N0 - 1) - r * (r + 1)) // 2 + N0 * (s - N0 - r),
        "deficit_after_last": N0,
        "lost": s - r - N0,
    }


CaseFn = Callable[[int, int, int, np.ndarray], Dict[str, Any]]
CaseRange = Tuple[str, Callable[[np.ndarray, int, int], np.ndarray], CaseFn]

_STOCKED_CASES: Tuple[CaseRange, ...] = (
    ("idle", lambda s, r, N0: s == 0, _stocked_idle),
    ("selling", lambda s, r, N0: (1 <= s) & (s < r), _stocked_selling),
    ("sold_out", lambda s, r, N0: s == r, _stocked_sold_out),
    ("backlog", lambda s, r, N0: (r < s) & (s < r + N0), _stocked_backlog),
    ("backlog_full", lambda s, r, N0: s == r + N0, _stocked_backlog_full),
    ("lost_sales", lambda s, r, N0: s > r + N0, _stocked_lost_sales),
)

_DISPATCH: Tuple[Tuple[str, Callable[[int, int, int], bool], Tuple[CaseRange, ...]], ...] = (
    ("order_at_full", lambda r, N, N0: r == N, _STOCKED_CASES),
    ("order_positive", lambda r, N, N0: 1 <= r < N, _STOCKED_CASES),
    (
        "order_at_zero",
        lambda r, N, N0: r == 0,
        (
            ("idle", lambda s, r, N0: s == 0, _stocked_idle),
            ("backlog", lambda s, r, N0: (1 <= s) & (s < N0), _stocked_backlog),
            ("backlog_full", lambda s, r, N0: s == N0, _stocked_backlog_full),
            ("lost_sales", lambda s, r, N0: s > N0, _stocked_lost_sales),
        ),
    ),
    (
        "order_in_backlog",
        lambda r, N, N0: -N0 < r <= -1,
        (
            ("idle", lambda s, r, N0: s == 0, _backlogged_idle),
            ("backlog", lambda s, r, N0: (1 <= s) & (s < N0 + r), _backlogged_backlog),
            ("backlog_full", lambda s, r, N0: s == N0 + r, _backlogged_backlog_full),
            ("lost_sales", lambda s, r, N0: s > N0 + r, _backlogged_lost_sales),
        ),
    ),
    (
        "order_at_cap",
        lambda r, N, N0: r == -N0,
        (
            ("idle", lambda s, r, N0: s == 0, _backlogged_idle),
            ("lost_sales", lambda s, r, N0: s > 0, _backlogged_lost_sales),
        ),
    ),
)


def _case_table(model: ModelParams, r: int) -> Tuple[str, Tuple[CaseRange, ...]]:
    matches = [(name, cases) for name, pred, cases in _DISPATCH if pred(r, model.N, model.N0)]
    if len(matches) != 1:
        raise DispatchError(f"reorder level r={r} matches {len(matches)} variants for N={model.N}, N0={model.N0}")
    return matches[0]


def case_partition(model: ModelParams, r: int, s: np.ndarray) -> Tuple[str, Dict[str, np.ndarray]]:
    """Boolean masks of every declared case range over the counts ``s``.

    Raises:
        DispatchError: If some ``s`` lies in no range or in more than one.
    """
    variant, cases = _case_table(model, r)
    s = np.asarray(s)
    masks = {name: np.asarray(pred(s, r, model.N0), dtype=bool) & np.ones(s.shape, dtype=bool)
             for name, pred, _ in cases}
    hits = sum(m.astype(int) for m in masks.values())
    bad = np.flatnonzero(hits != 1)
    if bad.size:
        s_bad = int(np.ravel(s)[bad[0]])
        raise DispatchError(f"(r={r}, s={s_bad}) is claimed by {int(np.ravel(hits)[bad[0]])} case ranges ({variant})")
    return variant, masks


def case_label(model: ModelParams, r: int, s: int) -> CaseKey:
    """Names of the reorder-level variant and of the s-range that ``(r, s)`` falls in."""
    r = model.validate_r(r)
    if s < 0:
        raise ValueError(f"s must be >= 0 (got {s})")
    variant, masks = case_partition(model, r, np.array([s]))
    return CaseKey(variant, next(name for name, m in masks.items() if m[0]))


def case_terms(model: ModelParams, r: int, s: IntOrArray) -> CaseTerms:
    """Coefficients of the dispatched case for ``(r, s)``; ``s`` may be an array."""
    scalar = np.ndim(s) == 0
    s_arr = np.atleast_1d(np.asarray(s, dtype=np.int64))
    if np.any(s_arr < 0):
        raise ValueError("s must be >= 0")
    _, cases = _case_table(model, r)
    _, masks = case_partition(model, r, s_arr)
    out = {f: np.zeros(s_arr.shape, dtype=np.int64) for f in CaseTerms.__dataclass_fields__}
    stock0, deficit0 = consumption_sums(model, r)
    out["stock_before_delay"][:] = stock0
    out["deficit_before_delay"][:] = deficit0
    for name, _, fn in cases:
        mask = masks[name]
        if not mask.any():
            continue
        for f, value in fn(model.N, model.N0, r, s_arr[mask]).items():
            out[f][mask] = value
    if scalar:
        return CaseTerms(**{f: int(v[0]) for f, v in out.items()})
    return CaseTerms(**out)


def consumption_sums(model: ModelParams, r: int) -> Tuple[int, int]:
    """Stock and deficit level sums over the ``N - r`` gaps before the order."""
    N = model.N
    if r >= 0:
        return (N - r) * (N + r + 1) // 2, 0
    return _tri(N), r * (r + 1) // 2


def consumption_time(model: ModelParams, r: int) -> float:
    """Expected length of the phase before the order, (N - r) / lambda."""
    return (model.N - r) / model.lam


def _component_arrays(model: ModelParams, costs: CostParams, table: KernelTable, r: int, s: np.ndarray,
                      variant: FormulaVariant) -> Dict[str, np.ndarray]:
    lam = model.lam
    mean = table.family.mean()
    terms = case_terms(model, r, s)
    P = table.probs[s]
    tau = table.probs[s + 1] / lam

    if variant is FormulaVariant.EXACT:
        gap_w, last_w = tau, tau
    else:
        constant_level = (s == 0) | (r == -model.N0)
        gap_w = np.where(constant_level, 0.0, P / lam)
        last_w = np.where(constant_level, mean * P, tau)

    holding_time = (terms.stock_before_delay / lam * P
                    + terms.stock_in_delay * gap_w + terms.stock_after_last * last_w)
    deficit_time = (terms.deficit_before_delay / lam * P
                    + terms.deficit_in_delay * gap_w + terms.deficit_after_last * last_w)
    return {
        "income": costs.c0 * terms.sold * P,
        "purchase": costs.c2 * terms.sold * P,
        "holding": costs.c1 * holding_time,
        "deficit": costs.c3 * deficit_time,
        "lost_client": costs.c4.evaluate(terms.lost) * P,
    }


def term_profit(model: ModelParams, costs: CostParams, ctx: KernelContext, r: int, s: int,
                variant: Union[str, FormulaVariant] = FormulaVariant.EXACT) -> Tuple[float, ProfitBreakdown]:
    """Expected cycle profit jointly with exactly ``s`` delay arrivals.

    Returns:
        ``(E[profit; A_s], breakdown)``, where the breakdown splits the value by cost category.

    Raises:
        ValueError: If ``r`` is outside ``[-N0, N]`` or ``s < 0``.
        DispatchError: If the case table does not claim ``(r, s)`` exactly once.
    """
    r = model.validate_r(r)
    if s < 0:
        raise ValueError(f"s must be >= 0 (got {s})")
    variant = FormulaVariant.parse(variant)
    ctx_r = ctx.at(r)
    table = kernel_table(ctx_r, s + 1)
    parts = _component_arrays(model, costs, table, r, np.array([s]), variant)
    breakdown = ProfitBreakdown(**{k: float(v[0]) for k, v in parts.items()})
    return breakdown.total, breakdown


class Truncation(NamedTuple):
    s_truncated_at: int
    tail_bound: float
    flagged: bool


def _tail_bound(model: ModelParams, costs: CostParams, table: KernelTable, r: int, s: np.ndarray) -> np.ndarray:
    # Past the last case boundary every term is a lost-sales term, bounded by
    # P_s * (K_P' + C4b*s) plus delay-time terms that the tail moments absorb.
    lam, N, N0 = model.lam, model.N, model.N0
    mean = table.family.mean()
    H0, D0 = consumption_sums(model, r)
    r_pos = max(r, 0)
    c4a, c4b = costs.c4.growth_bound()
    k_p = ((costs.c0 + costs.c2) * (N + N0) + (costs.c1 * H0 + costs.c3 * D0) / lam + c4a
           + (costs.c1 * (_tri(r_pos) + r_pos) + costs.c3 * N0) / lam + costs.c3 * N0 * mean)
    k_m = c4b + 2.0 * costs.c3 * N0 / lam
    p_tail = np.maximum(1.0 - table.cum_mass[s], 0.0)
    m_tail = np.maximum(lam * mean - table.cum_first[s], 0.0)
    return k_p * p_tail + k_m * m_tail


def cycle_profit(model: ModelParams, costs: CostParams, ctx: KernelContext, r: int,
                 variant: Union[str, FormulaVariant] = FormulaVariant.EXACT) -> Tuple[float, ProfitBreakdown, Truncation]:
    """Expected profit over one regeneration period, A(r), as a truncated series over s.

    The series stops at the first ``S`` past every case boundary whose tail
    bound falls below ``truncation_tol * max(1, |A|)``. If no such ``S`` exists
    up to the hard cap the result is returned with ``flagged=True``.

    Returns:
        ``(A, breakdown, truncation)``.
    """
    r = model.validate_r(r)
    variant = FormulaVariant.parse(variant)
    ctx_r = ctx.at(r)
    boundary = model.N + model.N0
    cap = hard_cap(ctx_r, boundary + 1)
    table = kernel_table(ctx_r, cap + 1)
    s = np.arange(cap + 1)
    parts = _component_arrays(model, costs, table, r, s, variant)
    totals = parts["income"] - parts["holding"] - parts["purchase"] - parts["deficit"] - parts["lost_client"]
    partial = np.cumsum(totals)
    bound = _tail_bound(model, costs, table, r, s)
    tol = ctx.tolerances.truncation_tol
    done = (s > boundary) & (bound < tol * np.maximum(1.0, np.abs(partial)))

    if done.any():
        stop, flagged = int(np.argmax(done)), False
    else:
        stop, flagged = cap, True
        logger.warning("Series for r=%d reached the hard cap s=%d with tail bound %.3e above tolerance",
                       r, cap, bound[cap])
    breakdown = ProfitBreakdown(**{k: float(np.sum(v[: stop + 1])) for k, v in parts.items()})
    return breakdown.total, breakdown, Truncation(stop, float(bound[stop]), flagged)


def cycle_length(model: ModelParams, ctx: KernelContext, r: int) -> float:
    """Expected regeneration period B(r) = (N - r)/lambda + mean delay."""
    r = model.validate_r(r)
    length = consumption_time(model, r) + ctx.at(r).family.mean()
    if not length > 0:
        raise ValueError(f"cycle length must be positive (got {length!r} for r={r})")
    return length


def efficiency(model: ModelParams, costs: CostParams, ctx: KernelContext, r: int,
               variant: Union[str, FormulaVariant] = FormulaVariant.EXACT) -> Evaluation:
    """Average profit per unit time I_r = A(r) / B(r) of the policy that reorders at ``r``."""
    variant = FormulaVariant.parse(variant)
    A, breakdown, trunc = cycle_profit(model, costs, ctx, r, variant)
    B = cycle_length(model, ctx, r)
    return Evaluation(
        r=int(r),
        A=A,
        B=B,
        I=A / B,
        breakdown=breakdown,
        s_truncated_at=trunc.s_truncated_at,
        tail_bound=trunc.tail_bound,
        flagged=trunc.flagged,
        formula=variant.value,
    )


def expected_units_sold(model: ModelParams, ctx: KernelContext, r: int, S: Optional[int] = None) -> float:
    """``E[N - r + min(s, r + N0)]`` summed directly over the mixture probabilities."""
    r = model.validate_r(r)
    ctx_r = ctx.at(r)
    if S is None:
        S = hard_cap(ctx_r, model.N + model.N0 + 1)
    probs = kernel_table(ctx_r, S).probs[: S + 1]
    s = np.arange(S + 1)
    return float(np.sum((model.N - r + np.minimum(s, r + model.N0)) * probs))
