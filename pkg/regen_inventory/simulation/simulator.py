# coding=utf-8
# SPDX-License-Identifier: Apache-2.0
"""
Monte Carlo simulation of the regenerative inventory process.

Cycles are generated in fixed-size chunks, each driven by its own PCG64DXSM
stream spawned from the master seed, so the report does not depend on how
many worker processes share the chunks. Within a chunk every cycle is
advanced event by event (one exponential inter-arrival gap at a time) with
exact piecewise-constant accounting of stock and deficit over time.
"""
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, NamedTuple, Optional, Tuple

import numpy as np
from tqdm import tqdm

from ..core.distributions import DelayFamily, DelaySpec
from ..core.profit import CostParams, ModelParams, ProfitBreakdown

logger = logging.getLogger(__name__)

WORKERS_ENV = "REGENINV_WORKERS"
DEFAULT_CHUNK_SIZE = 16384
LOW_SAMPLE_CYCLES = 100


@dataclass(frozen=True)
class CycleOutcome:
    """Realized quantities of one regeneration period."""

    duration: float  # consumption span + delay
    profit: float
    breakdown: ProfitBreakdown
    s: int  # arrivals during the delay
    lost: int  # clients turned away
    residual_after_last: float  # delay left after the last delay arrival
    consumption: float  # span from replenishment to the order
    delay: float


@dataclass(frozen=True, eq=False)
class CycleBatch:
    """Column arrays of many simulated cycles."""

    consumption: np.ndarray
    delay: np.ndarray
    income: np.ndarray
    holding: np.ndarray
    purchase: np.ndarray
    deficit: np.ndarray
    lost_client: np.ndarray
    s: np.ndarray
    lost: np.ndarray
    residual: np.ndarray

    def __len__(self) -> int:
        return self.delay.size

    @property
    def duration(self) -> np.ndarray:
        return self.consumption + self.delay

    @property
    def profit(self) -> np.ndarray:
        return self.income - self.holding - self.purchase - self.deficit - self.lost_client

    def outcome(self, i: int) -> CycleOutcome:
        breakdown = ProfitBreakdown(
            float(self.income[i]),
            float(self.holding[i]),
            float(self.purchase[i]),
            float(self.deficit[i]),
            float(self.lost_client[i]),
        )
        return CycleOutcome(
            duration=float(self.duration[i]),
            profit=breakdown.total,
            breakdown=breakdown,
            s=int(self.s[i]),
            lost=int(self.lost[i]),
            residual_after_last=float(self.residual[i]),
            consumption=float(self.consumption[i]),
            delay=float(self.delay[i]),
        )


def simulate_cycles(rng: np.random.Generator, model: ModelParams, costs: CostParams, family: DelayFamily,
                    r: int, n: int) -> CycleBatch:
    """Generates ``n`` independent regeneration periods for reorder level ``r``."""
    r = model.validate_r(r)
    lam, N, N0 = model.lam, model.N, model.N0
    scale = 1.0 / lam

    # Consumption phase: N - r arrivals take the stock from N down to r.
    k = N - r
    if k > 0:
        gaps = rng.exponential(scale, size=(n, k))
        levels = N - np.arange(k)
        consumption = gaps.sum(axis=1)
        stock_time = gaps @ np.maximum(levels, 0).astype(float)
        deficit_time = gaps @ np.maximum(-levels, 0).astype(float)
    else:
        consumption = np.zeros(n)
        stock_time = np.zeros(n)
        deficit_time = np.zeros(n)

    delay = family.sample(rng, n)

    # Delay phase: serve from stock, then backlog down to -N0, then lose.
    level = np.full(n, r, dtype=np.int64)
    clock = np.zeros(n)
    s = np.zeros(n, dtype=np.int64)
    lost = np.zeros(n, dtype=np.int64)
    residual = np.zeros(n)
    active = np.arange(n)
    while active.size:
        t_next = clock[active] + rng.exponential(scale, size=active.size)
        inside = t_next < delay[active]

        done = active[~inside]
        tail = delay[done] - clock[done]
        stock_time[done] += np.maximum(level[done], 0) * tail
        deficit_time[done] += np.maximum(-level[done], 0) * tail
        residual[done] = tail

        hit = active[inside]
        segment = t_next[inside] - clock[hit]
        held = level[hit]
        stock_time[hit] += np.maximum(held, 0) * segment
        deficit_time[hit] += np.maximum(-held, 0) * segment
        clock[hit] = t_next[inside]
        s[hit] += 1
        accepted = held > -N0
        level[hit] = np.where(accepted, held - 1, held)
        lost[hit] += ~accepted
        active = hit

    sold = N - level
    return CycleBatch(
        consumption=consumption,
        delay=delay,
        income=costs.c0 * sold,
        holding=costs.c1 * stock_time,
        purchase=costs.c2 * sold,
        deficit=costs.c3 * deficit_time,
        lost_client=costs.c4.evaluate(lost),
        s=s,
        lost=lost,
        residual=residual,
    )


def simulate_cycle(rng: np.random.Generator, model: ModelParams, costs: CostParams, delay: DelaySpec,
                   r: int) -> CycleOutcome:
    """One regeneration period for reorder level ``r``."""
    return simulate_cycles(rng, model, costs, delay.for_r(r), r, 1).outcome(0)


class Estimate(NamedTuple):
    mean: float
    se: float


@dataclass(frozen=True)
class SBucket:
    """Joint statistics of the cycles with exactly ``s`` delay arrivals."""

    hits: int
    prob: Estimate  # P(A_s)
    profit: Estimate  # E[profit * 1{A_s}]
    residual: Estimate  # E[residual * 1{A_s}]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "hits": self.hits,
            "prob": self.prob.mean,
            "prob_se": self.prob.se,
            "profit": self.profit.mean,
            "profit_se": self.profit.se,
            "residual": self.residual.mean,
            "residual_se": self.residual.se,
        }


@dataclass(frozen=True)
class SimulationReport:
    """Regenerative ratio estimate of the long-run average profit for one reorder level."""

    r: int
    cycles: int
    seed: int
    mean_profit: Estimate
    mean_duration: Estimate
    ratio: Estimate
    mean_s: Estimate
    breakdown: ProfitBreakdown
    per_s: Dict[int, SBucket] = field(default_factory=dict)
    low_sample: bool = False

    def to_dict(self) -> Dict[str, Any]:
        return {
            "r": self.r,
            "cycles": self.cycles,
            "seed": self.seed,
            "mean_profit": self.mean_profit.mean,
            "mean_profit_se": self.mean_profit.se,
            "mean_duration": self.mean_duration.mean,
            "mean_duration_se": self.mean_duration.se,
            "ratio": self.ratio.mean,
            "ratio_se": self.ratio.se,
            "mean_s": self.mean_s.mean,
            "mean_s_se": self.mean_s.se,
            "breakdown": self.breakdown.to_dict(),
            "low_sample": self.low_sample,
            "per_s": {str(s): bucket.to_dict() for s, bucket in sorted(self.per_s.items())},
        }


@dataclass
class _Sums:
    """Raw moment sums of one chunk; chunks combine by addition."""

    n: int = 0
    profit: float = 0.0
    profit_sq: float = 0.0
    duration: float = 0.0
    duration_sq: float = 0.0
    cross: float = 0.0
    s: float = 0.0
    s_sq: float = 0.0
    parts: np.ndarray = field(default_factory=lambda: np.zeros(5))
    hits: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    s_profit: np.ndarray = field(default_factory=lambda: np.zeros(0))
    s_profit_sq: np.ndarray = field(default_factory=lambda: np.zeros(0))
    s_residual: np.ndarray = field(default_factory=lambda: np.zeros(0))
    s_residual_sq: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @classmethod
    def of(cls, batch: CycleBatch) -> "_Sums":
        p, d, s = batch.profit, batch.duration, batch.s
        res = batch.residual
        width = int(s.max()) + 1
        return cls(
            n=len(batch),
            profit=float(p.sum()),
            profit_sq=float(np.dot(p, p)),
            duration=float(d.sum()),
            duration_sq=float(np.dot(d, d)),
            cross=float(np.dot(p, d)),
            s=float(s.sum()),
            s_sq=float(np.dot(s, s)),
            parts=np.array([batch.income.sum(), batch.holding.sum(), batch.purchase.sum(),
                            batch.deficit.sum(), batch.lost_client.sum()]),
            hits=np.bincount(s, minlength=width),
            s_profit=np.bincount(s, weights=p, minlength=width),
            s_profit_sq=np.bincount(s, weights=p * p, minlength=width),
            s_residual=np.bincount(s, weights=res, minlength=width),
            s_residual_sq=np.bincount(s, weights=res * res, minlength=width),
        )

    def __iadd__(self, other: "_Sums") -> "_Sums":
        for name in ("n", "profit", "profit_sq", "duration", "duration_sq", "cross", "s", "s_sq"):
            setattr(self, name, getattr(self, name) + getattr(other, name))
        self.parts = self.parts + other.parts
        for name in ("hits", "s_profit", "s_profit_sq", "s_residual", "s_residual_sq"):
            mine, theirs = getattr(self, name), getattr(other, name)
            width = max(mine.size, theirs.size)
            setattr(self, name, np.pad(mine, (0, width - mine.size)) + np.pad(theirs, (0, width - theirs.size)))
        return self


def _run_chunk(args: Tuple[ModelParams, CostParams, DelayFamily, int, int, np.random.SeedSequence]) -> _Sums:
    model, costs, family, r, n, seed_seq = args
    rng = np.random.Generator(np.random.PCG64DXSM(seed_seq))
    return _Sums.of(simulate_cycles(rng, model, costs, family, r, n))


def _mean_se(total: float, total_sq: float, n: int) -> Estimate:
    mean = total / n
    var = max(total_sq - n * mean * mean, 0.0) / (n - 1)
    return Estimate(mean, math.sqrt(var / n))


def resolve_workers(workers: Optional[int] = None, default: int = 1) -> int:
    """Worker count from the argument, else ``$REGENINV_WORKERS``, else ``default``."""
    if workers is None:
        raw = os.environ.get(WORKERS_ENV)
        if raw is None or raw.strip() == "":
            return default
        try:
            workers = int(raw)
        except ValueError:
            raise ValueError(f"{WORKERS_ENV} must be an integer >= 1 (got {raw!r})") from None
    if workers < 1:
        raise ValueError(f"workers must be >= 1 (got {workers})")
    return workers


def estimate(model: ModelParams, costs: CostParams, delay: DelaySpec, r: int, n_cycles: int, seed: int,
             chunk_size: int = DEFAULT_CHUNK_SIZE, workers: Optional[int] = None,
             progress: bool = True) -> SimulationReport:
    """Estimates the long-run average profit of reorder level ``r`` from ``n_cycles`` cycles.

    Args:
        model: Demand rate and stock limits.
        costs: Money parameters.
        delay: Lead-time law.
        r: Reorder level.
        n_cycles: Number of regeneration periods to simulate (at least 2).
        seed: Master seed; the same seed and inputs give an identical report.
        chunk_size: Cycles per random stream.
        workers: Processes sharing the chunks; see ``resolve_workers``.
        progress: Show a progress bar over chunks.

    Returns:
        A ``SimulationReport`` with the ratio standard error from the delta method.
    """
    r = model.validate_r(r)
    if n_cycles < 2:
        raise ValueError(f"n_cycles must be >= 2 (got {n_cycles})")
    if chunk_size < 1:
        raise ValueError(f"chunk_size must be >= 1 (got {chunk_size})")
    low_sample = n_cycles < LOW_SAMPLE_CYCLES
    if low_sample:
        logger.warning("Only %d cycles simulated; standard errors are unreliable below %d",
                       n_cycles, LOW_SAMPLE_CYCLES)
    workers = resolve_workers(workers)

    sizes = [chunk_size] * (n_cycles // chunk_size)
    if n_cycles % chunk_size:
        sizes.append(n_cycles % chunk_size)
    family = delay.for_r(r)
    streams = np.random.SeedSequence(seed).spawn(len(sizes))
    jobs = [(model, costs, family, r, size, stream) for size, stream in zip(sizes, streams)]

    totals = _Sums()
    bar = dict(total=len(jobs), desc=f"Simulating r={r}", unit="chunk", disable=not progress)
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for sums in tqdm(pool.map(_run_chunk, jobs), **bar):
                totals += sums
    else:
        for job in tqdm(jobs, **bar):
            totals += _run_chunk(job)
    return _report(totals, r, seed, low_sample)


def _report(t: _Sums, r: int, seed: int, low_sample: bool) -> SimulationReport:
    n = t.n
    profit = _mean_se(t.profit, t.profit_sq, n)
    duration = _mean_se(t.duration, t.duration_sq, n)
    ratio = profit.mean / duration.mean
    # Delta method for a ratio of means: Var(P - R*D) / (n * mean(D)^2)
    cov = (t.cross - n * profit.mean * duration.mean) / (n - 1)
    var_p = max(t.profit_sq - n * profit.mean ** 2, 0.0) / (n - 1)
    var_d = max(t.duration_sq - n * duration.mean ** 2, 0.0) / (n - 1)
    var_ratio = max(var_p - 2.0 * ratio * cov + ratio ** 2 * var_d, 0.0)
    ratio_se = math.sqrt(var_ratio / n) / duration.mean

    per_s = {}
    for s in np.flatnonzero(t.hits):
        hits = int(t.hits[s])
        p = hits / n
        per_s[int(s)] = SBucket(
            hits=hits,
            prob=Estimate(p, math.sqrt(p * (1.0 - p) / (n - 1))),
            profit=_mean_se(float(t.s_profit[s]), float(t.s_profit_sq[s]), n),
            residual=_mean_se(float(t.s_residual[s]), float(t.s_residual_sq[s]), n),
        )
    return SimulationReport(
        r=r,
        cycles=n,
        seed=seed,
        mean_profit=profit,
        mean_duration=duration,
        ratio=Estimate(ratio, ratio_se),
        mean_s=_mean_se(t.s, t.s_sq, n),
        breakdown=ProfitBreakdown(*(float(v) / n for v in t.parts)),
        per_s=per_s,
        low_sample=low_sample,
    )
