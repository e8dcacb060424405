# coding=utf-8
# SPDX-License-Identifier: Apache-2.0
"""
Integral kernels of the delay period.

``P(A_s)`` is the probability that exactly ``s`` customers arrive while the
replenishment is in transit, and ``tau_s`` is the expected time left in the
delay after the last of those arrivals, taken jointly with ``A_s``. Both are
read from a ``KernelTable`` that is built once per (delay family, demand rate)
from the closed-form mixture law and cached.
"""
import dataclasses
import functools
import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
from scipy import integrate, special

from ..errors import QuadratureError
from .distributions import (
    DEFAULT_QUAD_ATOL,
    DEFAULT_QUAD_RTOL,
    DelayFamily,
    DelaySpec,
    PointMass,
    Uniform,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Tolerances:
    """Numerical knobs shared by the kernels and the profit series."""

    quad_rtol: float = DEFAULT_QUAD_RTOL  # relative tolerance for adaptive quadrature
    quad_atol: float = DEFAULT_QUAD_ATOL  # absolute floor for quadrature
    truncation_tol: float = 1e-9  # relative tail bound accepted when truncating the s-series
    cap_sigmas: float = 12.0  # standard deviations of s covered by the hard cap
    cap_padding: int = 64  # extra terms past the cap estimate

    def __post_init__(self):
        for name in ("quad_rtol", "quad_atol", "truncation_tol", "cap_sigmas"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, float)) or not value > 0:
                raise ValueError(f"{name} must be > 0 (got {value!r})")
            object.__setattr__(self, name, float(value))
        if isinstance(self.cap_padding, bool) or not isinstance(self.cap_padding, int) or self.cap_padding < 0:
            raise ValueError(f"cap_padding must be an integer >= 0 (got {self.cap_padding!r})")


@dataclass(frozen=True)
class KernelContext:
    """Demand rate plus the lead-time law, looked up at reorder level ``r``."""

    lam: float  # demand rate, 1/time
    delay: DelaySpec
    r: int = 0
    tolerances: Tolerances = field(default_factory=Tolerances)

    def __post_init__(self):
        lam = float(self.lam)
        if not math.isfinite(lam) or lam <= 0.0:
            raise ValueError(f"lambda must be a finite number > 0 (got {self.lam!r})")
        object.__setattr__(self, "lam", lam)

    @property
    def family(self) -> DelayFamily:
        return self.delay.for_r(self.r)

    def at(self, r: int) -> "KernelContext":
        return dataclasses.replace(self, r=r)


@dataclass(frozen=True, eq=False)
class KernelTable:
    """``P(A_s)`` for ``s = 0..s_top`` under one delay family and demand rate."""

    lam: float
    family: DelayFamily
    probs: np.ndarray
    cum_mass: np.ndarray = field(init=False, repr=False)
    cum_first: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=float)
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)
        cum_mass = np.cumsum(probs)
        cum_first = np.cumsum(np.arange(probs.size) * probs)
        cum_mass.setflags(write=False)
        cum_first.setflags(write=False)
        object.__setattr__(self, "cum_mass", cum_mass)
        object.__setattr__(self, "cum_first", cum_first)

    @property
    def s_top(self) -> int:
        return self.probs.size - 1

    @property
    def taus(self) -> np.ndarray:
        """``tau_s`` for ``s = 0..s_top-1``."""
        return self.probs[1:] / self.lam

    def tail(self, S: int) -> Tuple[float, float]:
        mean_count = self.lam * self.family.mean()
        if S < 0:
            return 1.0, mean_count
        p_tail = 1.0 - self.cum_mass[S]
        m_tail = mean_count - self.cum_first[S]
        return max(p_tail, 0.0), max(m_tail, 0.0)


@functools.lru_cache(maxsize=128)
def _cached_table(family: DelayFamily, lam: float, s_top: int) -> KernelTable:
    probs = family.mixture_pmf(lam, np.arange(s_top + 1))
    bad = ~np.isfinite(probs) | (probs < 0.0)
    if bad.any():
        first = int(np.flatnonzero(bad)[0])
        raise QuadratureError(f"P(A_s) under {family}", float(probs[first]),
                              f"invalid mixture probability at s={first}")
    logger.info("Built kernel table for %s (lambda=%g): s=0..%d", family, lam, s_top)
    return KernelTable(lam=lam, family=family, probs=probs)


def hard_cap(ctx: KernelContext, floor: int = 0) -> int:
    """Largest arrival count the profit series may reach before it is flagged.

    The count ``s`` has mean ``lam*m`` and variance ``lam*m + lam**2*v`` for a
    delay with mean ``m`` and variance ``v``.
    """
    family = ctx.family
    tol = ctx.tolerances
    mean_count = ctx.lam * family.mean()
    sd_count = math.sqrt(mean_count + ctx.lam ** 2 * family.var())
    return max(int(math.ceil(mean_count + tol.cap_sigmas * sd_count)) + tol.cap_padding, floor)


def kernel_table(ctx: KernelContext, s_top: int = 0) -> KernelTable:
    """Cached ``P(A_s)`` table covering at least ``s = 0..s_top`` and the hard cap.

    Raises:
        QuadratureError: If a mixture probability comes out non-finite or negative.
    """
    return _cached_table(ctx.family, ctx.lam, max(hard_cap(ctx) + 1, s_top))


def mixture_prob(ctx: KernelContext, s: int) -> float:
    """Probability of exactly ``s`` arrivals during the delay, P(A_s)."""
    if s < 0:
        raise ValueError(f"s must be >= 0 (got {s})")
    return float(kernel_table(ctx, s).probs[s])


def residual_tau(ctx: KernelContext, s: int) -> float:
    """Expected delay time remaining after the ``s``-th delay arrival, jointly with A_s.

    Integrating the inner variable out of the double integral leaves
    ``(1/lam) * E[(lam*D)^(s+1) / (s+1)! * exp(-lam*D)]``, which is ``P(A_{s+1}) / lam``.
    The same quantity is the joint expectation of any single inter-arrival gap
    of the delay period, since the ``s`` arrival instants are uniform order
    statistics given the count.
    """
    if s < 0:
        raise ValueError(f"s must be >= 0 (got {s})")
    return float(kernel_table(ctx, s + 1).probs[s + 1]) / ctx.lam


def tail_mass(ctx: KernelContext, S: int) -> Tuple[float, float]:
    """Probability and first moment of the arrival count beyond ``S``.

    Returns:
        ``(sum_{s>S} P(A_s), sum_{s>S} s*P(A_s))``, both clipped at zero. ``S < 0``
        denotes the empty prefix.
    """
    return kernel_table(ctx, max(S, 0)).tail(S)


def residual_tau_literal(ctx: KernelContext, s: int, rtol: Optional[float] = None) -> float:
    """Slow reference for ``residual_tau``: the double integral evaluated as written.

    ``tau_s = int_0^inf (lam^s/s!) int_x^inf (z-x)^s exp(-lam z) dH(z) dx``
    """
    if s < 0:
        raise ValueError(f"s must be >= 0 (got {s})")
    rtol = ctx.tolerances.quad_rtol if rtol is None else rtol
    lam = ctx.lam
    family = ctx.family
    log_norm = s * math.log(lam) - math.lgamma(s + 1.0)

    def checked(func, lo, hi, what, eps=rtol):
        result = integrate.quad(func, lo, hi, epsabs=0.0, epsrel=eps, limit=500, full_output=1)
        if len(result) > 3:
            raise QuadratureError(what, result[1], result[3])
        return result[0]

    if isinstance(family, PointMass):
        T = family.T

        def outer_atom(x):
            return math.exp(log_norm + special.xlogy(s, T - x) - lam * T)

        return checked(outer_atom, 0.0, T, "literal tau_s (outer)")

    def inner(x):
        def integrand(z):
            log_pdf = family.logpdf(z)
            if log_pdf == -math.inf:
                return 0.0
            return math.exp(log_norm + special.xlogy(s, z - x) - lam * z + log_pdf)

        if isinstance(family, Uniform):
            lo = max(x, family.a)
            return checked(integrand, lo, family.b, "literal tau_s (inner)", 0.1 * rtol) if lo < family.b else 0.0
        split = x + (s + 1.0) / lam + family.mean()
        return (checked(integrand, x, split, "literal tau_s (inner)", 0.1 * rtol)
                + checked(integrand, split, np.inf, "literal tau_s (inner)", 0.1 * rtol))

    if isinstance(family, Uniform):
        return checked(inner, 0.0, family.b, "literal tau_s (outer)")
    split = family.mean()
    return checked(inner, 0.0, split, "literal tau_s (outer)") + checked(inner, split, np.inf, "literal tau_s (outer)")
