# coding=utf-8
# SPDX-License-Identifier: Apache-2.0
"""
Run configuration: JSON document <-> dataclass tree, with field-level validation.

See ``doc/config_reference.md`` for every field and its unit.
"""
import dataclasses
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Mapping, Optional, Tuple, Union

from .core.distributions import DelaySpec, delay_family_from_dict
from .core.kernels import KernelContext, Tolerances
from .core.profit import CostParams, FormulaVariant, LostClientPenalty, ModelParams
from .errors import ConfigParseError, ConfigValidationError

logger = logging.getLogger(__name__)

_SECTIONS = ("model", "costs", "delay", "tolerances", "formula", "simulation")


@dataclass(frozen=True)
class SimulationSettings:
    """Monte Carlo settings used by the ``simulate`` command."""

    cycles: int = 100000  # regeneration periods per estimate
    seed: int = 20240601  # master seed
    chunk_size: int = 16384  # cycles per random stream
    workers: int = 1  # worker processes; $REGENINV_WORKERS overrides

    def __post_init__(self):
        for name, minimum in (("cycles", 2), ("seed", 0), ("chunk_size", 1), ("workers", 1)):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, int) or value < minimum:
                raise ValueError(f"{name} must be an integer >= {minimum} (got {value!r})")


@dataclass(frozen=True)
class RunConfig:
    r"""
    Everything one run needs.

    Args:
        model (`ModelParams`):
            Demand rate ``lambda``, replenishment level ``N`` and backlog cap ``N0``.
        costs (`CostParams`):
            ``c0``..``c3`` and the lost-client penalty ``c4``.
        delay (`DelaySpec`):
            Lead-time law, optionally overridden per reorder level.
        tolerances (`Tolerances`, *optional*):
            Quadrature and series-truncation tolerances.
        formula (`FormulaVariant`, *optional*, defaults to `"exact"`):
            Delay-time weighting used by the profit terms.
        simulation (`SimulationSettings`, *optional*):
            Cycle count, seed, chunk size and worker count for ``simulate``.
    """

    model: ModelParams
    costs: CostParams
    delay: DelaySpec
    tolerances: Tolerances = field(default_factory=Tolerances)
    formula: FormulaVariant = FormulaVariant.EXACT
    simulation: SimulationSettings = field(default_factory=SimulationSettings)

    def kernel_context(self) -> KernelContext:
        return KernelContext(self.model.lam, self.delay, tolerances=self.tolerances)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "model": self.model.to_dict(),
            "costs": self.costs.to_dict(),
            "delay": self.delay.to_dict(),
            "tolerances": dataclasses.asdict(self.tolerances),
            "formula": self.formula.value,
            "simulation": dataclasses.asdict(self.simulation),
        }

    def to_json_file(self, path: Union[str, Path]) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n", encoding="utf-8")

    @classmethod
    def from_dict(cls, data: Any) -> "RunConfig":
        """Builds a config from parsed JSON.

        Raises:
            ConfigParseError: If ``data`` is not an object.
            ConfigValidationError: With one entry per offending field.
        """
        if not isinstance(data, Mapping):
            raise ConfigParseError(f"config must be a JSON object (got {type(data).__name__})")
        issues: List[Tuple[str, str]] = []
        for key in sorted(set(data) - set(_SECTIONS)):
            issues.append((key, f"Unsupported section. Supported: {sorted(_SECTIONS)}"))
        for key in ("model", "costs", "delay"):
            if key not in data:
                issues.append((key, "required section is missing"))

        model = _parse_model(data.get("model"), issues) if "model" in data else None
        costs = _parse_costs(data.get("costs"), issues) if "costs" in data else None
        delay = _parse_delay(data.get("delay"), model, issues) if "delay" in data else None
        tolerances = _parse_section(Tolerances, "tolerances", data.get("tolerances", {}), issues)
        simulation = _parse_section(SimulationSettings, "simulation", data.get("simulation", {}), issues)
        formula = _capture(issues, "formula", lambda: FormulaVariant.parse(data.get("formula", "exact")))

        if issues:
            raise ConfigValidationError(issues)
        return cls(model=model, costs=costs, delay=delay, tolerances=tolerances, formula=formula,
                   simulation=simulation)

    @classmethod
    def from_json_string(cls, text: str, source: str = "<string>") -> "RunConfig":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigParseError(f"{source}: invalid JSON ({e})") from e
        return cls.from_dict(data)

    @classmethod
    def from_json_file(cls, path: Union[str, Path]) -> "RunConfig":
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except (OSError, UnicodeDecodeError) as e:
            raise ConfigParseError(f"cannot read config {path}: {e}") from e
        config = cls.from_json_string(text, source=str(path))
        logger.debug("Loaded config from %s", path)
        return config


def _capture(issues: List[Tuple[str, str]], where: str, build: Callable[[], Any]) -> Any:
    try:
        return build()
    except ValueError as e:
        issues.append((where, str(e)))
        return None


def _expect_object(value: Any, where: str, issues: List[Tuple[str, str]]) -> Optional[Mapping[str, Any]]:
    if not isinstance(value, Mapping):
        issues.append((where, f"must be an object (got {value!r})"))
        return None
    return value


def _number(value: Any) -> bool:
    return not isinstance(value, bool) and isinstance(value, (int, float)) and math.isfinite(value)


def _parse_model(value: Any, issues: List[Tuple[str, str]]) -> Optional[ModelParams]:
    data = _expect_object(value, "model", issues)
    if data is None:
        return None
    before = len(issues)
    for key in sorted(set(data) - {"lambda", "N", "N0"}):
        issues.append((f"model.{key}", "Unsupported field. Supported: ['N', 'N0', 'lambda']"))
    checks = {
        "lambda": (lambda v: _number(v) and v > 0, "must be a number > 0"),
        "N": (lambda v: not isinstance(v, bool) and isinstance(v, int) and v >= 1, "must be an integer >= 1"),
        "N0": (lambda v: not isinstance(v, bool) and isinstance(v, int) and v >= 1,
               "must be an integer >= 1 (N0 = 0 is not supported)"),
    }
    for key, (ok, message) in checks.items():
        if key not in data:
            issues.append((f"model.{key}", "required field is missing"))
        elif not ok(data[key]):
            issues.append((f"model.{key}", f"{message} (got {data[key]!r})"))
    if len(issues) > before:
        return None
    return _capture(issues, "model", lambda: ModelParams(data["lambda"], data["N"], data["N0"]))


def _parse_costs(value: Any, issues: List[Tuple[str, str]]) -> Optional[CostParams]:
    data = _expect_object(value, "costs", issues)
    if data is None:
        return None
    before = len(issues)
    for key in sorted(set(data) - {"c0", "c1", "c2", "c3", "c4"}):
        issues.append((f"costs.{key}", "Unsupported field. Supported: ['c0', 'c1', 'c2', 'c3', 'c4']"))
    for key in ("c0", "c1", "c2", "c3"):
        v = data.get(key, 0.0)
        if not (_number(v) and v >= 0):
            issues.append((f"costs.{key}", f"must be a number >= 0 (got {v!r})"))
    c4 = _capture(issues, "costs.c4", lambda: LostClientPenalty.from_dict(data.get("c4", {"list": []})))
    if len(issues) > before:
        return None
    return _capture(issues, "costs", lambda: CostParams(
        data.get("c0", 0.0), data.get("c1", 0.0), data.get("c2", 0.0), data.get("c3", 0.0), c4))


def _parse_delay(value: Any, model: Optional[ModelParams], issues: List[Tuple[str, str]]) -> Optional[DelaySpec]:
    data = _expect_object(value, "delay", issues)
    if data is None:
        return None
    before = len(issues)
    _capture(issues, "delay", lambda: delay_family_from_dict({k: v for k, v in data.items() if k != "per_r"}))
    per_r = data.get("per_r", [])
    if not isinstance(per_r, list):
        issues.append(("delay.per_r", f"must be an array (got {per_r!r})"))
        return None
    for i, item in enumerate(per_r):
        where = f"delay.per_r[{i}]"
        item = _expect_object(item, where, issues)
        if item is None:
            continue
        r = item.get("r")
        if isinstance(r, bool) or not isinstance(r, int):
            issues.append((f"{where}.r", f"must be an integer (got {r!r})"))
        elif model is not None and not -model.N0 <= r <= model.N:
            issues.append((f"{where}.r", f"must lie in [-N0, N] = [{-model.N0}, {model.N}] (got {r})"))
        _capture(issues, where, lambda: delay_family_from_dict(item))
    if len(issues) > before:
        return None
    return _capture(issues, "delay", lambda: DelaySpec.from_dict(data))


def _parse_section(cls, name: str, value: Any, issues: List[Tuple[str, str]]):
    data = _expect_object(value, name, issues)
    if data is None:
        return None
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - known)
    for key in unknown:
        issues.append((f"{name}.{key}", f"Unsupported field. Supported: {sorted(known)}"))
    if unknown:
        return None
    before = len(issues)
    for key, v in data.items():
        _capture(issues, f"{name}.{key}", lambda: cls(**{key: v}))
    if len(issues) > before:
        return None
    return _capture(issues, name, lambda: cls(**data))
