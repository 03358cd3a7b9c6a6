"""Scenario files: a flat TOML table of settings plus paths to trace files.

Relative paths resolve against the directory holding the scenario file.
"""

from __future__ import annotations

import dataclasses
import math
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import GreenDCError

POLICIES = ("gsa", "hs")
PREDICTORS = ("svr", "persistence", "oracle")


class ConfigInvalid(GreenDCError):
    pass


@dataclass
class ScenarioConfig:
    cluster: str = "cluster.csv"
    interactive_trace: str = "interactive.csv"
    batch_trace: str = "batch.csv"
    irradiance: str = "solar_autumn.csv"
    policy: str = "gsa"
    predictor: str = "oracle"
    dt: float = 300.0
    horizon: int = 288
    seed: int = 0
    t_sup: float = 25.0
    panel_kw: float = 1.63
    pv_efficiency: float = 1.0
    standby_watts: float = 0.0
    migration_wh: float = 0.0
    tu_up: float = 0.8
    tu_low: float = 0.2
    epsilon_batch: float = 0.27
    num_thr: float = 60.0
    defer_always: bool = False
    follow_renewables: bool = True
    scaling_cadence: int = 12
    request_window: int = 3
    service_rate: float = 60.0
    target_rt: float = 0.5
    rt_penalty_factor: float = 10.0
    n_microservices: int = 20
    optional_fraction: float = 0.3
    microservices_per_vm: int = 2
    svr_c: float = 4.0
    svr_epsilon: float = 0.0
    train_split: float = 0.8
    base_dir: Path = field(default=Path("."), compare=False, repr=False)
    name: str = field(default="scenario", compare=False)

    def path(self, key: str) -> Path:
        p = Path(getattr(self, key))
        return p if p.is_absolute() else self.base_dir / p

    def settings(self) -> dict[str, Any]:
        """Plain dict of every setting (no base_dir), suitable for JSON."""
        return {f.name: getattr(self, f.name) for f in dataclasses.fields(self) if f.name not in ("base_dir",)}

    def check(self) -> list[str]:
        """Constraint violations among the scalar settings."""
        errs = []
        if self.horizon < 1:
            errs.append(f"horizon must be >= 1 (got {self.horizon})")
        if not self.dt > 0:
            errs.append(f"dt must be > 0 (got {self.dt})")
        if self.policy not in POLICIES:
            errs.append(f"policy must be one of {POLICIES} (got {self.policy!r})")
        if self.predictor not in PREDICTORS:
            errs.append(f"predictor must be one of {PREDICTORS} (got {self.predictor!r})")
        if not 0 < self.tu_low < self.tu_up < 1:
            errs.append(f"need 0 < tu_low < tu_up < 1 (got tu_low={self.tu_low}, tu_up={self.tu_up})")
        if not 0 <= self.epsilon_batch < 1:
            errs.append(f"epsilon_batch must be in [0, 1) (got {self.epsilon_batch})")
        if self.num_thr <= 0:
            errs.append(f"num_thr must be > 0 (got {self.num_thr})")
        if self.scaling_cadence < 1 or self.request_window < 1:
            errs.append("scaling_cadence and request_window must be >= 1")
        if self.target_rt <= 0 or self.service_rate <= 1.0 / self.target_rt:
            errs.append(f"service_rate must exceed 1/target_rt (got {self.service_rate}, 1/rt={1.0 / self.target_rt:g})")
        if self.panel_kw < 0 or not 0 <= self.pv_efficiency <= 1:
            errs.append("panel_kw must be >= 0 and pv_efficiency in [0, 1]")
        if not 0 <= self.optional_fraction <= 1 or self.n_microservices < 1 or self.microservices_per_vm < 1:
            errs.append("microservice layout invalid")
        if not 0 < self.train_split < 1:
            errs.append("train_split must be in (0, 1)")
        if self.rt_penalty_factor < 1:
            errs.append("rt_penalty_factor must be >= 1")
        if self.standby_watts < 0 or self.migration_wh < 0:
            errs.append("standby_watts and migration_wh must be >= 0")
        return errs


_FIELDS = {f.name: f for f in dataclasses.fields(ScenarioConfig) if f.name not in ("base_dir",)}


def _coerce(key: str, value: Any) -> Any:
    if key not in _FIELDS:
        raise ConfigInvalid(f"unknown setting {key!r}")
    default = _FIELDS[key].default
    try:
        if isinstance(default, bool):
            if isinstance(value, str):
                return value.lower() in ("1", "true", "yes")
            return bool(value)
        if isinstance(default, int):
            if isinstance(value, float) and not value.is_integer():
                raise ValueError(value)
            return int(value)
        if isinstance(default, float):
            v = float(value)
            if math.isnan(v):
                raise ValueError(value)
            return v
        return str(value)
    except (TypeError, ValueError):
        raise ConfigInvalid(f"{key}: cannot interpret {value!r} as {type(default).__name__}") from None


def parse_overrides(pairs: list[str]) -> dict[str, Any]:
    out = {}
    for pair in pairs:
        if "=" not in pair:
            raise ConfigInvalid(f"override {pair!r} is not key=value")
        k, v = pair.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def load_scenario(path: str | Path, overrides: dict[str, Any] | None = None) -> ScenarioConfig:
    path = Path(path)
    try:
        with path.open("rb") as fh:
            raw = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigInvalid(f"{path}: no such file") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigInvalid(f"{path}: {exc}") from None
    values = {}
    for k, v in raw.items():
        if isinstance(v, dict):
            raise ConfigInvalid(f"{path}: nested table [{k}] not supported; use flat keys")
        values[k] = _coerce(k, v)
    for k, v in (overrides or {}).items():
        values[k] = _coerce(k, v)
    cfg = ScenarioConfig(**values, base_dir=path.parent.resolve(), name=path.stem)
    errs = cfg.check()
    if errs:
        raise ConfigInvalid(f"{path}: " + "; ".join(errs))
    return cfg


def bundled_scenario(name: str = "reference") -> Path:
    """Path of a scenario shipped with the package (``reference``, ``longdeadline``, ``summer``)."""
    p = Path(str(resources.files("greendc") / "data" / f"{name}.toml"))
    if not p.exists():
        raise ConfigInvalid(f"no bundled scenario {name!r}")
    return p
