"""
Run configuration: a flat ``key = value`` text file whose keys are exactly the
:class:`RunConfig` field names.  Model parameters are written inline::

    model = kitaev
    params_initial = t1=1, delta=0.9, mu_r=0.25, gamma=0.5
    params_final = t1=1, delta=0.9, mu_r=1.7, gamma=0.5
    n_momenta = 2000
    t_max = 6
    diagnostics = rate, self_normal_rate, dtop, fisher, pkt
    half_bz = true
"""

from __future__ import annotations

import configparser
import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from biodqpt.dynamics import DEFAULT_DT
from biodqpt.errors import ConfigError
from biodqpt.model import ModelParams

MODELS = ("kitaev", "kitaev_nnn")
DIAGNOSTICS = ("rate", "self_normal_rate", "dtop", "fisher", "pkt", "phase_boundary")
_SECTION = "run"


@dataclass(frozen=True)
class RunConfig:
    params_initial: ModelParams
    params_final: ModelParams
    model: str = "kitaev"
    n_momenta: int = 2000
    t_max: float = 6.0
    n_times: int | None = None
    diagnostics: tuple[str, ...] = ("rate", "self_normal_rate", "dtop", "fisher", "pkt")
    n_max: int = 3
    half_bz: bool = False
    output_dir: str = "out"
    seed: int = 0

    def __post_init__(self):
        if self.model not in MODELS:
            raise ConfigError(f"model must be one of {MODELS}, got {self.model!r}")
        if self.model == "kitaev" and (self.params_initial.t2 != 0.0 or self.params_final.t2 != 0.0):
            raise ConfigError("model = kitaev requires t2 = 0; use kitaev_nnn")
        if self.n_momenta < 64 or self.n_momenta % 2:
            raise ConfigError("n_momenta must be even and >= 64")
        if not (self.t_max > 0 and math.isfinite(self.t_max)):
            raise ConfigError("t_max must be positive")
        if self.n_times is None:
            object.__setattr__(self, "n_times", int(math.ceil(self.t_max / DEFAULT_DT)) + 1)
        if self.n_times < 2:
            raise ConfigError("n_times must be >= 2")
        unknown = set(self.diagnostics) - set(DIAGNOSTICS)
        if unknown:
            raise ConfigError(f"unknown diagnostics {sorted(unknown)}; choose from {DIAGNOSTICS}")
        if self.n_max < 0:
            raise ConfigError("n_max must be >= 0")

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        out["diagnostics"] = list(self.diagnostics)
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def parse_params(text: str) -> ModelParams:
    """Parse ``"t1=1, delta=0.9, mu_r=0.25, gamma=0.5[, t2=0.7]"``."""
    values = {}
    for item in text.split(","):
        if not item.strip():
            continue
        if "=" not in item:
            raise ConfigError(f"expected name=value in model parameters, got {item.strip()!r}")
        name, value = (s.strip() for s in item.split("=", 1))
        if name not in ("t1", "t2", "delta", "mu_r", "gamma"):
            raise ConfigError(f"unknown model parameter {name!r}")
        values[name] = _float(value, name)
    missing = {"t1", "delta", "mu_r", "gamma"} - set(values)
    if missing:
        raise ConfigError(f"missing model parameters {sorted(missing)}")
    return ModelParams(**values)


def _float(value, name):
    try:
        return float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{name}: expected a number, got {value!r}") from None


def _int(value, name):
    try:
        return int(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{name}: expected an integer, got {value!r}") from None


def _bool(value, name):
    lowered = str(value).strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"{name}: expected a boolean, got {value!r}")


_CONVERT = {
    "model": lambda v, n: v.strip(),
    "params_initial": lambda v, n: parse_params(v),
    "params_final": lambda v, n: parse_params(v),
    "n_momenta": _int,
    "t_max": _float,
    "n_times": _int,
    "diagnostics": lambda v, n: tuple(s.strip() for s in v.split(",") if s.strip()),
    "n_max": _int,
    "half_bz": _bool,
    "output_dir": lambda v, n: v.strip(),
    "seed": _int,
}


def config_from_mapping(raw: dict) -> RunConfig:
    unknown = set(raw) - set(_CONVERT)
    if unknown:
        raise ConfigError(f"unknown config keys {sorted(unknown)}")
    for required in ("params_initial", "params_final"):
        if required not in raw:
            raise ConfigError(f"missing required key {required!r}")
    kwargs = {key: _CONVERT[key](value, key) if isinstance(value, str) else value for key, value in raw.items()}
    return RunConfig(**kwargs)


def parse_config(text: str) -> dict:
    """Flat ``key = value`` text to a raw string mapping."""
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        parser.read_string(f"[{_SECTION}]\n{text}")
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    return dict(parser[_SECTION])


def load_config(path, overrides: dict | None = None) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    raw = parse_config(text)
    raw.update({k: v for k, v in (overrides or {}).items() if v is not None})
    return config_from_mapping(raw)
