"""Strict ``key=value`` run configuration.

One assignment per line; blank lines and lines starting with ``#`` are
ignored.  Every key must be known, appear at most once and parse as its
declared type.  Scenario parameters are written ``scenario.<param>`` and are
checked against the preset's signature.
"""

from __future__ import annotations

import inspect
import math
from dataclasses import dataclass, field, fields, replace


class ConfigError(ValueError):
    """Malformed, unknown or out-of-range configuration entry."""


def _bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _opt_float(s: str):
    return None if s.strip().lower() in ("", "none") else float(s)


def _floats(s: str) -> tuple:
    return tuple(float(x) for x in s.split(",") if x.strip())


@dataclass(frozen=True)
class Monitors:
    """Optional monitors of a run; all cheap monitors are on by default."""

    mass: bool = True
    decay: bool = True
    positivity: bool = True
    ae_order: bool = True
    weighted: bool = True
    mass_identity: bool = True
    entropy: bool = False
    heat: bool = False
    noncollapse: bool = False
    k_max: int = 1
    sigma_prime: float | None = None
    mass_tol: float = 0.01
    decay_t_min: float = 1.0
    taus: tuple = (1.0, 10.0, 100.0, 1000.0)
    radii: tuple = (0.5, 1.0, 2.0)
    eta_radius: float = 1.0


@dataclass(frozen=True)
class Config:
    n: int = 3
    sigma: float = 1.0
    grid_N: int = 2000
    grid_L: float = 6.0
    r_max: float = 1000.0
    cfl: float = 0.2
    t_end: float = 50.0
    snapshot_dt: float | None = None
    method: str = "bdf"
    scenario: str = "positive_R_bump"
    scenario_params: dict = field(default_factory=dict)
    monitors: Monitors = field(default_factory=Monitors)

    def to_dict(self) -> dict:
        out = {
            "n": self.n,
            "sigma": self.sigma,
            "grid.N": self.grid_N,
            "grid.L": self.grid_L,
            "r_max": self.r_max,
            "cfl": self.cfl,
            "t_end": self.t_end,
            "snapshot_dt": self.snapshot_dt,
            "method": self.method,
            "scenario": self.scenario,
        }
        out.update({f"scenario.{k}": v for k, v in sorted(self.scenario_params.items())})
        for f in fields(Monitors):
            v = getattr(self.monitors, f.name)
            out[f"monitors.{f.name}"] = list(v) if isinstance(v, tuple) else v
        return out

    def to_text(self) -> str:
        """Config file text that parses back to an equal config."""
        lines = []
        for k, v in self.to_dict().items():
            if v is None:
                v = "none"
            elif isinstance(v, list):
                v = ",".join(repr(float(x)) for x in v)
            elif isinstance(v, bool):
                v = "true" if v else "false"
            elif isinstance(v, float):
                v = repr(v)
            lines.append(f"{k}={v}")
        return "\n".join(lines) + "\n"

    def with_value(self, key: str, value) -> "Config":
        """Copy with one key overridden; ``value`` may be text or a Python value."""
        return _apply(self, key, value if isinstance(value, str) else _to_text(value))


_TOP = {
    "n": ("n", int),
    "sigma": ("sigma", float),
    "grid.N": ("grid_N", int),
    "grid.L": ("grid_L", float),
    "r_max": ("r_max", float),
    "cfl": ("cfl", float),
    "t_end": ("t_end", float),
    "snapshot_dt": ("snapshot_dt", _opt_float),
    "method": ("method", str),
    "scenario": ("scenario", str),
}


def _monitor_parser(name: str):
    default = getattr(Monitors(), name)
    if isinstance(default, bool):
        return _bool
    if isinstance(default, int):
        return int
    if isinstance(default, tuple):
        return _floats
    if default is None:
        return _opt_float
    return float


def _to_text(v) -> str:
    if isinstance(v, (list, tuple)):
        return ",".join(repr(float(x)) for x in v)
    if isinstance(v, bool):
        return "true" if v else "false"
    if v is None:
        return "none"
    return repr(v) if isinstance(v, float) else str(v)


def _scenario_param(scenario: str, key: str, text: str):
    from .presets import PRESETS

    if scenario not in PRESETS:
        raise ConfigError(f"unknown scenario {scenario!r}; choose from {sorted(PRESETS)}")
    sig = inspect.signature(PRESETS[scenario])
    if key not in sig.parameters or key == "n":
        allowed = sorted(p for p in sig.parameters if p != "n")
        raise ConfigError(f"unknown parameter scenario.{key} for {scenario}; allowed: {allowed}")
    default = sig.parameters[key].default
    if isinstance(default, int) and not isinstance(default, bool):
        return int(text)
    return float(text)


def _apply(cfg: Config, key: str, text: str) -> Config:
    text = text.strip()
    try:
        if key in _TOP:
            attr, conv = _TOP[key]
            return replace(cfg, **{attr: conv(text)})
        if key.startswith("monitors."):
            name = key[len("monitors."):]
            if name not in {f.name for f in fields(Monitors)}:
                raise ConfigError(f"unknown key {key!r}")
            mon = replace(cfg.monitors, **{name: _monitor_parser(name)(text)})
            return replace(cfg, monitors=mon)
        if key.startswith("scenario."):
            pname = key[len("scenario."):]
            params = dict(cfg.scenario_params)
            params[pname] = _scenario_param(cfg.scenario, pname, text)
            return replace(cfg, scenario_params=params)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {text!r} ({exc})") from None
    raise ConfigError(f"unknown key {key!r}")


def validate_config(cfg: Config) -> Config:
    """Range checks; raises :class:`ConfigError`."""
    from .presets import PRESETS

    if cfg.n < 3:
        raise ConfigError(f"dimension n must be at least 3, got {cfg.n}")
    if not (cfg.sigma > 0 and math.isfinite(cfg.sigma)):
        raise ConfigError("sigma must be positive")
    if cfg.grid_N < 16:
        raise ConfigError("grid.N must be at least 16")
    if cfg.grid_L <= 0 or cfg.r_max <= 0:
        raise ConfigError("grid.L and r_max must be positive")
    if not (0 < cfg.cfl <= 1):
        raise ConfigError("cfl must lie in (0, 1]")
    if cfg.t_end < 0:
        raise ConfigError("t_end must be non-negative")
    if cfg.snapshot_dt is not None and cfg.snapshot_dt <= 0:
        raise ConfigError("snapshot_dt must be positive")
    if cfg.method not in ("bdf", "rk4"):
        raise ConfigError("method must be 'bdf' or 'rk4'")
    if cfg.scenario not in PRESETS:
        raise ConfigError(f"unknown scenario {cfg.scenario!r}; choose from {sorted(PRESETS)}")
    sig = inspect.signature(PRESETS[cfg.scenario])
    for k in cfg.scenario_params:
        if k not in sig.parameters or k == "n":
            raise ConfigError(f"unknown parameter scenario.{k} for {cfg.scenario}")
    if cfg.monitors.k_max < 0:
        raise ConfigError("monitors.k_max must be non-negative")
    return cfg


def parse_config(text: str, base: Config | None = None) -> Config:
    """Parse ``key=value`` text into a :class:`Config`.

    ``scenario`` is applied before any ``scenario.<param>`` line regardless
    of their order in the file.

    Raises
    ------
    ConfigError
        On syntax errors, unknown or repeated keys, bad values or ranges.
    """
    cfg = base or Config()
    entries = []
    seen = set()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        if key in seen:
            raise ConfigError(f"line {lineno}: repeated key {key!r}")
        seen.add(key)
        entries.append((lineno, key, value))
    scen = [e for e in entries if e[1] == "scenario"]
    if scen and scen[0][2] != cfg.scenario:
        cfg = replace(cfg, scenario=scen[0][2], scenario_params={})
    for lineno, key, value in entries:
        if key == "scenario":
            continue
        try:
            cfg = _apply(cfg, key, value)
        except ConfigError as exc:
            raise ConfigError(f"line {lineno}: {exc}") from None
    return validate_config(cfg)


def load_config(path) -> Config:
    with open(path) as fh:
        return parse_config(fh.read())
