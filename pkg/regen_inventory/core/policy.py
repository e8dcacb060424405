# coding=utf-8
# SPDX-License-Identifier: Apache-2.0
"""Policy scan over every reorder level, optimal level selection and mixed strategies."""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .distributions import DelaySpec
from .kernels import KernelContext, Tolerances
from .profit import CostParams, Evaluation, FormulaVariant, ModelParams, efficiency

logger = logging.getLogger(__name__)

ALPHA_SUM_TOL = 1e-12
TIE_RTOL = 1e-12


@dataclass(frozen=True, eq=False)
class PolicyDistribution:
    """Probability of choosing each reorder level; ``levels`` is ordered largest first."""

    levels: Tuple[int, ...]
    alpha: np.ndarray

    def __post_init__(self):
        levels = tuple(int(r) for r in self.levels)
        alpha = np.array(self.alpha, dtype=float)
        if alpha.shape != (len(levels),):
            raise ValueError(f"alpha has {alpha.size} entries for {len(levels)} reorder levels")
        if len(set(levels)) != len(levels):
            raise ValueError(f"reorder levels must be distinct (got {levels})")
        if not np.all(np.isfinite(alpha)) or np.any(alpha < 0):
            raise ValueError("alpha entries must be finite and >= 0")
        if abs(alpha.sum() - 1.0) > ALPHA_SUM_TOL:
            raise ValueError(f"alpha must sum to 1 (got {alpha.sum()!r})")
        alpha.setflags(write=False)
        object.__setattr__(self, "levels", levels)
        object.__setattr__(self, "alpha", alpha)

    @classmethod
    def degenerate(cls, levels: Sequence[int], r: int) -> "PolicyDistribution":
        if r not in levels:
            raise ValueError(f"r={r} is not one of the reorder levels {tuple(levels)}")
        return cls(tuple(levels), [1.0 if level == r else 0.0 for level in levels])

    @classmethod
    def uniform(cls, levels: Sequence[int]) -> "PolicyDistribution":
        n = len(levels)
        return cls(tuple(levels), np.full(n, 1.0 / n))

    @classmethod
    def random(cls, levels: Sequence[int], rng: np.random.Generator) -> "PolicyDistribution":
        alpha = rng.dirichlet(np.ones(len(levels)))
        return cls(tuple(levels), alpha / alpha.sum())

    def weight(self, r: int) -> float:
        return float(self.alpha[self.levels.index(r)])


@dataclass(frozen=True)
class OptimizationResult:
    """Best (or worst) deterministic reorder level with the full table it was chosen from."""

    r_star: int
    I_star: float
    table: Tuple[Evaluation, ...]
    ties: Tuple[int, ...]
    sense: str = "max"

    def to_dict(self) -> Dict[str, Any]:
        return {
            "r_star": self.r_star,
            "I_star": self.I_star,
            "sense": self.sense,
            "ties": list(self.ties),
            "table": [e.to_dict() for e in self.table],
        }


def scan(model: ModelParams, costs: CostParams, delay: DelaySpec, tolerances: Optional[Tolerances] = None,
         variant: Union[str, FormulaVariant] = FormulaVariant.EXACT, workers: int = 1) -> List[Evaluation]:
    """Evaluates I_r for every admissible reorder level, largest r first.

    Args:
        model: Demand rate and stock limits.
        costs: Money parameters.
        delay: Lead-time law.
        tolerances: Numerical tolerances; defaults when omitted.
        variant: Delay-time weighting of the profit terms.
        workers: Threads used to evaluate levels concurrently. The result does
            not depend on this value.

    Returns:
        One ``Evaluation`` per ``r`` in ``model.levels``. Flagged truncations are kept.
    """
    ctx = KernelContext(model.lam, delay, tolerances=tolerances or Tolerances())
    variant = FormulaVariant.parse(variant)

    def evaluate(r: int) -> Evaluation:
        return efficiency(model, costs, ctx, r, variant)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            table = list(pool.map(evaluate, model.levels))
    else:
        table = [evaluate(r) for r in model.levels]
    flagged = [e.r for e in table if e.flagged]
    if flagged:
        logger.warning("Truncation flagged for r in %s", flagged)
    return table


def _extremum(table: Sequence[Evaluation], sense: str, rtol: float) -> OptimizationResult:
    if not table:
        raise ValueError("cannot optimize over an empty table")
    values = [e.I for e in table]
    best = max(values) if sense == "max" else min(values)
    slack = rtol * max(1.0, abs(best))
    if sense == "max":
        ties = tuple(e.r for e in table if e.I >= best - slack)
    else:
        ties = tuple(e.r for e in table if e.I <= best + slack)
    r_star = max(ties)
    logger.info("Optimal reorder level (%s): r*=%d, I*=%.10g, ties=%s", sense, r_star, best, list(ties))
    return OptimizationResult(r_star=r_star, I_star=best, table=tuple(table), ties=ties, sense=sense)


def argmax(table: Sequence[Evaluation], rtol: float = TIE_RTOL) -> OptimizationResult:
    """Reorder level with the largest I_r; ties go to the larger r and are all reported."""
    return _extremum(table, "max", rtol)


def argmin(table: Sequence[Evaluation], rtol: float = TIE_RTOL) -> OptimizationResult:
    """Reorder level with the smallest I_r, with the same tie rule as ``argmax``."""
    return _extremum(table, "min", rtol)


def mixed_value(table: Sequence[Evaluation], alpha: PolicyDistribution) -> float:
    """Long-run average profit of the randomized policy, sum(A*alpha) / sum(B*alpha).

    Raises:
        ValueError: If ``alpha`` and the table do not cover the same reorder levels.
    """
    if sorted(e.r for e in table) != sorted(alpha.levels):
        raise ValueError(f"alpha covers {alpha.levels}, table covers {tuple(e.r for e in table)}")
    weights = np.array([alpha.weight(e.r) for e in table])
    A = np.array([e.A for e in table])
    B = np.array([e.B for e in table])
    denominator = float(np.dot(B, weights))
    if not denominator > 0:
        raise ValueError(f"mixed cycle length must be positive (got {denominator!r})")
    return float(np.dot(A, weights)) / denominator


def dominance_gap(table: Sequence[Evaluation], alphas: Iterable[PolicyDistribution]) -> float:
    """Largest excess of a mixed strategy over the best deterministic level (<= 0 up to rounding)."""
    best = argmax(table).I_star
    return max(mixed_value(table, alpha) - best for alpha in alphas)
