# coding=utf-8
# SPDX-License-Identifier: Apache-2.0
"""
Delivery-delay distributions and the Stieltjes expectations taken against them.

A delay family is a small frozen dataclass. Besides its moments it knows how to
draw samples, how to build the scipy.stats object used for adaptive
quadrature, and the closed form of the Poisson count mixed over the delay
(see ``mixture_pmf``), which is what the kernel tables are built from.
"""
import logging
import math
from dataclasses import dataclass
from typing import Any, Callable, ClassVar, Dict, Mapping, Optional, Tuple, Union

import numpy as np
from scipy import integrate, special, stats

from ..errors import QuadratureError

logger = logging.getLogger(__name__)

DEFAULT_QUAD_RTOL = 1e-10
DEFAULT_QUAD_ATOL = 1e-14
DEFAULT_QUAD_LIMIT = 200


def _require_positive(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value) or value <= 0.0:
        raise ValueError(f"{name} must be a finite number > 0 (got {value!r})")
    return value


@dataclass(frozen=True)
class PointMass:
    """Deterministic lead time ``T``."""

    family: ClassVar[str] = "point_mass"
    T: float  # time

    def __post_init__(self):
        object.__setattr__(self, "T", _require_positive("T", self.T))

    def mean(self) -> float:
        return self.T

    def var(self) -> float:
        return 0.0

    def frozen(self):
        return None

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return np.full(size, self.T)

    def mixture_pmf(self, lam: float, s: np.ndarray) -> np.ndarray:
        # A single atom: the mixture is the Poisson(lam*T) law itself.
        return stats.poisson.pmf(s, lam * self.T)

    def to_dict(self) -> Dict[str, Any]:
        return {"family": self.family, "T": self.T}


@dataclass(frozen=True)
class GammaDelay:
    """Gamma lead time with the given ``shape`` and ``scale`` (mean = shape * scale)."""

    family: ClassVar[str] = "gamma"
    shape: float  # dimensionless
    scale: float  # time

    def __post_init__(self):
        object.__setattr__(self, "shape", _require_positive("shape", self.shape))
        object.__setattr__(self, "scale", _require_positive("scale", self.scale))

    def mean(self) -> float:
        return self.shape * self.scale

    def var(self) -> float:
        return self.shape * self.scale ** 2

    def frozen(self):
        return stats.gamma(a=self.shape, scale=self.scale)

    def logpdf(self, y: float) -> float:
        if y <= 0.0:
            return -math.inf
        k, theta = self.shape, self.scale
        return (k - 1.0) * math.log(y) - y / theta - math.lgamma(k) - k * math.log(theta)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return rng.gamma(self.shape, self.scale, size)

    def mixture_pmf(self, lam: float, s: np.ndarray) -> np.ndarray:
        """P(A_s) under a gamma delay: negative binomial with success probability ``1/(1 + lam*scale)``."""
        return stats.nbinom.pmf(s, self.shape, 1.0 / (1.0 + lam * self.scale))

    def to_dict(self) -> Dict[str, Any]:
        return {"family": self.family, "shape": self.shape, "scale": self.scale}


@dataclass(frozen=True, init=False)
class Exponential(GammaDelay):
    """Exponential lead time with the given ``rate``; a gamma law of shape one.

    ``Exponential(2.0)`` and ``Exponential(rate=2.0)`` are the same law. The
    mean may be given instead through the keyword-only ``scale``.
    """

    family: ClassVar[str] = "exponential"
    rate: float = 1.0  # 1/time

    def __init__(self, rate: Optional[float] = None, *, scale: Optional[float] = None):
        if rate is None:
            rate = 1.0 if scale is None else 1.0 / _require_positive("scale", scale)
        rate = _require_positive("rate", rate)
        if scale is not None and not math.isclose(rate * scale, 1.0, rel_tol=1e-12):
            raise ValueError(f"exponential rate {rate!r} and scale {scale!r} disagree")
        object.__setattr__(self, "rate", rate)
        object.__setattr__(self, "shape", 1.0)
        object.__setattr__(self, "scale", 1.0 / rate)
        super().__post_init__()

    def frozen(self):
        return stats.expon(scale=self.scale)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return rng.exponential(self.scale, size)

    def to_dict(self) -> Dict[str, Any]:
        return {"family": self.family, "rate": self.rate}


@dataclass(frozen=True)
class Uniform:
    """Lead time uniform on ``[a, b]`` with ``0 <= a < b``."""

    family: ClassVar[str] = "uniform"
    a: float  # time
    b: float  # time

    def __post_init__(self):
        a, b = float(self.a), float(self.b)
        if not (math.isfinite(a) and math.isfinite(b)) or a < 0.0 or b <= a:
            raise ValueError(f"uniform delay needs 0 <= a < b (got a={self.a!r}, b={self.b!r})")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    def mean(self) -> float:
        return 0.5 * (self.a + self.b)

    def var(self) -> float:
        return (self.b - self.a) ** 2 / 12.0

    def frozen(self):
        return stats.uniform(loc=self.a, scale=self.b - self.a)

    def logpdf(self, y: float) -> float:
        if y < self.a or y > self.b:
            return -math.inf
        return -math.log(self.b - self.a)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return rng.uniform(self.a, self.b, size)

    def mixture_pmf(self, lam: float, s: np.ndarray) -> np.ndarray:
        """P(A_s) = (P(s+1, lam*b) - P(s+1, lam*a)) / (lam*(b-a)), P the regularized lower gamma.

        Where the lower values are already close to one the upper functions are
        differenced instead, so the small differences keep their digits.
        """
        s1 = np.asarray(s, dtype=float) + 1.0
        lo, hi = lam * self.a, lam * self.b
        lower_lo = special.gammainc(s1, lo)
        diff = np.where(
            lower_lo > 0.5,
            special.gammaincc(s1, lo) - special.gammaincc(s1, hi),
            special.gammainc(s1, hi) - lower_lo,
        )
        return np.maximum(diff, 0.0) / (hi - lo)

    def to_dict(self) -> Dict[str, Any]:
        return {"family": self.family, "a": self.a, "b": self.b}


DelayFamily = Union[PointMass, Exponential, GammaDelay, Uniform]

_FAMILY_FIELDS = {
    PointMass.family: (PointMass, ("T",)),
    Exponential.family: (Exponential, ("rate",)),
    GammaDelay.family: (GammaDelay, ("shape", "scale")),
    Uniform.family: (Uniform, ("a", "b")),
}
SUPPORTED_FAMILIES = tuple(sorted(_FAMILY_FIELDS))


def delay_family_from_dict(data: Mapping[str, Any]) -> DelayFamily:
    """Builds a delay family from ``{"family": name, <params>}``.

    Raises:
        ValueError: On an unknown family, missing or extra parameters, or bad values.
    """
    if not isinstance(data, Mapping):
        raise ValueError(f"delay family must be an object (got {type(data).__name__})")
    name = data.get("family")
    if name not in _FAMILY_FIELDS:
        raise ValueError(f"Unsupported delay family: {name!r}. Supported: {sorted(SUPPORTED_FAMILIES)}")
    cls, fields = _FAMILY_FIELDS[name]
    given = set(data) - {"family", "r"}
    missing = [f for f in fields if f not in given]
    extra = sorted(given - set(fields))
    if missing:
        raise ValueError(f"{name} delay is missing parameter(s): {missing}")
    if extra:
        raise ValueError(f"Unsupported {name} parameter(s): {extra}. Supported: {sorted(fields)}")
    values = {}
    for f in fields:
        value = data[f]
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ValueError(f"{name}.{f} must be a number (got {value!r})")
        values[f] = float(value)
    return cls(**values)


@dataclass(frozen=True)
class DelaySpec:
    """The lead-time law H_r: one family for every r, optionally overridden per r."""

    family: DelayFamily
    per_r_override: Tuple[Tuple[int, DelayFamily], ...] = ()

    def __post_init__(self):
        seen = set()
        for r, _ in self.per_r_override:
            if r in seen:
                raise ValueError(f"duplicate per-r delay override for r={r}")
            seen.add(r)
        object.__setattr__(self, "per_r_override", tuple(sorted(self.per_r_override, key=lambda item: -item[0])))

    @property
    def overrides(self) -> Dict[int, DelayFamily]:
        return dict(self.per_r_override)

    def for_r(self, r: int) -> DelayFamily:
        return self.overrides.get(r, self.family)

    def to_dict(self) -> Dict[str, Any]:
        data = self.family.to_dict()
        if self.per_r_override:
            data["per_r"] = [{"r": r, **fam.to_dict()} for r, fam in self.per_r_override]
        return data

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "DelaySpec":
        if not isinstance(data, Mapping):
            raise ValueError(f"delay must be an object (got {type(data).__name__})")
        base = {k: v for k, v in data.items() if k != "per_r"}
        overrides = []
        for item in data.get("per_r", []) or []:
            if not isinstance(item, Mapping) or "r" not in item:
                raise ValueError(f"per_r entries need an integer 'r' (got {item!r})")
            r = item["r"]
            if isinstance(r, bool) or not isinstance(r, int):
                raise ValueError(f"per_r.r must be an integer (got {r!r})")
            overrides.append((r, delay_family_from_dict(item)))
        return cls(family=delay_family_from_dict(base), per_r_override=tuple(overrides))


def _checked_quad(func: Callable[[float], float], lo: float, hi: float, what: str,
                  rtol: float, atol: float, limit: int) -> Tuple[float, float]:
    result = integrate.quad(func, lo, hi, epsabs=atol, epsrel=rtol, limit=limit, full_output=1)
    value, abserr = result[0], result[1]
    logger.debug("Quadrature for %s on [%g, %g]: %.12g (error estimate %.2e)", what, lo, hi, value, abserr)
    if len(result) > 3:
        raise QuadratureError(what, abserr, result[3])
    return value, abserr


def _integrate_density(family: DelayFamily, integrand: Callable[[float], float], what: str,
                       rtol: float, atol: float, limit: int) -> float:
    if isinstance(family, Uniform):
        value, _ = _checked_quad(integrand, family.a, family.b, what, rtol, atol, limit)
        return value
    # Semi-infinite support: a finite piece up to the mean plus the mapped tail on [mean, inf).
    split = family.mean()
    head, _ = _checked_quad(integrand, 0.0, split, what, rtol, atol, limit)
    tail, _ = _checked_quad(integrand, split, np.inf, what, rtol, atol, limit)
    return head + tail


def expect_g(spec: DelaySpec, r: int, g: Callable[[float], float],
             rtol: float = DEFAULT_QUAD_RTOL, atol: float = DEFAULT_QUAD_ATOL,
             limit: int = DEFAULT_QUAD_LIMIT) -> float:
    """Computes the Stieltjes integral of ``g`` against H_r.

    Args:
        spec: Delay specification.
        r: Reorder level, used for the per-r lookup.
        g: Real function finite on the support of H_r.
        rtol: Relative tolerance handed to the adaptive rule.
        atol: Absolute tolerance floor.
        limit: Maximum number of subintervals per adaptive pass.

    Returns:
        ``E[g(D)]`` for ``D ~ H_r``. Point masses evaluate ``g`` at the atom.

    Raises:
        QuadratureError: If the adaptive rule fails to converge.
    """
    family = spec.for_r(r)
    if isinstance(family, PointMass):
        return float(g(family.T))
    dist = family.frozen()
    return _integrate_density(family, lambda y: g(y) * dist.pdf(y), f"E[g] under {family}", rtol, atol, limit)


def mean_delay(spec: DelaySpec, r: int) -> float:
    """Mean lead time for reorder level ``r``."""
    return spec.for_r(r).mean()


def survival_integral(spec: DelaySpec, r: int, rtol: float = DEFAULT_QUAD_RTOL,
                      atol: float = DEFAULT_QUAD_ATOL, limit: int = DEFAULT_QUAD_LIMIT) -> float:
    """Quadrature of the survival function, the integral of 1 - H_r over [0, inf)."""
    family = spec.for_r(r)
    if isinstance(family, PointMass):
        return family.T
    dist = family.frozen()
    if isinstance(family, Uniform):
        head = family.a
        body, _ = _checked_quad(dist.sf, family.a, family.b, f"survival of {family}", rtol, atol, limit)
        return head + body
    return _integrate_density(family, dist.sf, f"survival of {family}", rtol, atol, limit)
