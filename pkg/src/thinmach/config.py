"""Plain-text experiment configuration: ``key = value`` lines with dotted keys.

Values may be numbers (``1/8`` fractions allowed), booleans, bare or quoted
strings, or bracketed lists of numbers.  ``#`` starts a comment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace
from fractions import Fraction

from .errors import ConfigError

MODES = ("fixed_mu", "vanishing_mu")
FAMILIES = ("benchmark", "rest", "acoustic")

# key -> (attribute, type); defaults live on ExperimentConfig
SCHEMA = {
    "grid.L": ("L", float),
    "grid.N": ("N", int),
    "grid.M": ("M", int),
    "law.A": ("A", float),
    "law.gamma": ("gamma", float),
    "schedule.mode": ("mode", str),
    "schedule.delta0": ("delta0", float),
    "schedule.beta": ("beta", float),
    "schedule.mu": ("mu", float),
    "schedule.mu0": ("mu0", float),
    "schedule.theta": ("theta", float),
    "eps": ("eps", list),
    "time.T": ("T", float),
    "time.samples": ("samples", int),
    "time.cfl": ("cfl", float),
    "data.family": ("family", str),
    "data.vortex_amp": ("vortex_amp", float),
    "data.vortex_sigma": ("vortex_sigma", float),
    "data.vortex_sep": ("vortex_sep", float),
    "data.pulse_amp": ("pulse_amp", float),
    "data.pulse_sigma": ("pulse_sigma", float),
    "data.rho_amp": ("rho_amp", float),
    "data.rho_sigma": ("rho_sigma", float),
    "data.z_amp": ("z_amp", float),
    "data.noise_amp": ("noise_amp", float),
    "data.spike_amp": ("spike_amp", float),
    "data.spike_width": ("spike_width", float),
    "data.spike_shift": ("spike_shift", float),
    "diag.eta": ("eta", float),
    "diag.window_lo": ("window_lo", float),
    "diag.window_hi": ("window_hi", float),
    "diag.kappa_out": ("kappa_out", float),
    "diag.rel_energy": ("rel_energy", bool),
    "run.seed": ("seed", int),
    "run.out": ("out", str),
    "run.checkpoints": ("checkpoints", bool),
}


@dataclass(frozen=True)
class ExperimentConfig:
    L: float = 2 * math.pi * 8
    N: int = 64
    M: int = 1
    A: float = 1.0
    gamma: float = 2.0
    mode: str = "fixed_mu"
    delta0: float = 1.0
    beta: float = 1.0
    mu: float = 0.05
    mu0: float = 1.0
    theta: float = 0.5
    eps: tuple = (0.25, 0.125, 0.0625, 0.03125)
    T: float = 1.0
    samples: int = 16
    cfl: float = 0.4
    family: str = "benchmark"
    vortex_amp: float = 4.0
    vortex_sigma: float = 3.0
    vortex_sep: float = 6.0
    pulse_amp: float = 3.0
    pulse_sigma: float = 3.0
    rho_amp: float = 1.0
    rho_sigma: float = 3.0
    z_amp: float = 0.0
    noise_amp: float = 0.0
    spike_amp: float = 0.0
    spike_width: float = 24.0
    spike_shift: float = 0.125
    eta: float = 0.0
    window_lo: float = 0.25
    window_hi: float = 0.75
    kappa_out: float = 0.75
    rel_energy: bool = True
    seed: int = 0
    out: str = "runs"
    checkpoints: bool = True

    def delta(self, eps):
        return min(1.0, self.delta0 * eps**self.beta)

    def viscosity(self, eps):
        if self.mode == "fixed_mu":
            return self.mu
        return self.mu0 * eps**self.theta

    def as_dict(self):
        out = {}
        for key, (attr, _) in SCHEMA.items():
            val = getattr(self, attr)
            out[key] = list(val) if isinstance(val, tuple) else val
        return out

    def with_overrides(self, **kw):
        cfg = replace(self, **kw)
        validate(cfg)
        return cfg


def _number(text, key):
    try:
        return float(Fraction(text.strip()))
    except (ValueError, ZeroDivisionError):
        pass
    try:
        return float(text)
    except ValueError:
        raise ConfigError(key, f"not a number: {text!r}") from None


def _coerce(raw, typ, key):
    raw = raw.strip()
    if typ is list:
        body = raw[1:-1] if raw.startswith("[") and raw.endswith("]") else raw
        items = [s for s in body.replace(",", " ").split() if s]
        if not items:
            raise ConfigError(key, "empty list")
        return tuple(_number(s, key) for s in items)
    if typ is bool:
        low = raw.lower()
        if low in ("true", "yes", "1", "on"):
            return True
        if low in ("false", "no", "0", "off"):
            return False
        raise ConfigError(key, f"not a boolean: {raw!r}")
    if typ is int:
        val = _number(raw, key)
        if val != int(val):
            raise ConfigError(key, f"not an integer: {raw!r}")
        return int(val)
    if typ is float:
        return _number(raw, key)
    if len(raw) >= 2 and raw[0] == raw[-1] and raw[0] in "\"'":
        return raw[1:-1]
    return raw


def validate(cfg: ExperimentConfig):
    if not cfg.gamma > 1.5:
        raise ConfigError("law.gamma", f"gamma > 3/2 required, got {cfg.gamma}")
    if not cfg.A > 0:
        raise ConfigError("law.A", "must be positive")
    if cfg.N < 8 or cfg.N % 2:
        raise ConfigError("grid.N", "must be an even integer >= 8")
    if cfg.M < 1:
        raise ConfigError("grid.M", "must be >= 1")
    if not cfg.L > 0:
        raise ConfigError("grid.L", "must be positive")
    eps = cfg.eps
    if any(not 0 < e <= 1 for e in eps):
        raise ConfigError("eps", "values must lie in (0, 1]")
    if any(b >= a for a, b in zip(eps, eps[1:])):
        raise ConfigError("eps", "list must be strictly decreasing")
    if cfg.beta < 0:
        raise ConfigError("schedule.beta", "must be >= 0")
    if not cfg.delta0 > 0:
        raise ConfigError("schedule.delta0", "must be positive")
    if cfg.mode not in MODES:
        raise ConfigError("schedule.mode", f"must be one of {MODES}")
    if cfg.mode == "fixed_mu" and not cfg.mu > 0:
        raise ConfigError("schedule.mu", "fixed viscosity must be positive")
    if cfg.mode == "vanishing_mu" and not cfg.theta > 0:
        raise ConfigError("schedule.theta", "must be positive for vanishing viscosity")
    if cfg.mode == "vanishing_mu" and not cfg.mu0 > 0:
        raise ConfigError("schedule.mu0", "must be positive")
    if not cfg.T > 0:
        raise ConfigError("time.T", "must be positive")
    if cfg.samples < 2 or cfg.samples % 2:
        raise ConfigError("time.samples", "must be an even integer >= 2")
    if not 0 < cfg.cfl <= 1:
        raise ConfigError("time.cfl", "must lie in (0, 1]")
    if cfg.family not in FAMILIES:
        raise ConfigError("data.family", f"must be one of {FAMILIES}")
    if cfg.eta < 0 or cfg.eta >= 1:
        raise ConfigError("diag.eta", "must lie in [0, 1); 0 disables mollification")
    if not 0 <= cfg.window_lo < cfg.window_hi <= 1:
        raise ConfigError("diag.window_lo", "window must satisfy 0 <= lo < hi <= 1")
    if not 0.5 < cfg.kappa_out < 1:
        raise ConfigError("diag.kappa_out", "must lie in (1/2, 1)")
    if cfg.spike_amp < 0 or cfg.spike_width <= 0:
        raise ConfigError("data.spike_amp", "spike amplitude >= 0 and width > 0 required")
    return cfg


def parse_config(text, base: ExperimentConfig | None = None):
    """Parse a configuration document; unknown keys and invalid values raise ``ConfigError``."""
    kw = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}", f"expected 'key = value', got {line!r}")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in SCHEMA:
            raise ConfigError(key, "unknown key")
        attr, typ = SCHEMA[key]
        kw[attr] = _coerce(raw, typ, key)
    cfg = replace(base or ExperimentConfig(), **kw)
    return validate(cfg)


def load_config(path, base=None):
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read(), base)


def dump_config(cfg: ExperimentConfig):
    lines = []
    for key, val in cfg.as_dict().items():
        if isinstance(val, list):
            val = "[" + ", ".join(repr(float(v)) for v in val) + "]"
        elif isinstance(val, bool):
            val = "true" if val else "false"
        lines.append(f"{key} = {val}")
    return "\n".join(lines) + "\n"


CONFIG_KEYS = tuple(SCHEMA)
_FIELDS = {f.name for f in fields(ExperimentConfig)}
assert all(attr in _FIELDS for attr, _ in SCHEMA.values())
