"""Pipeline configuration: defaults, TOML parsing and validation.

The configuration is a small TOML document with ``reservoir``, ``ip``,
``extraction``, ``clustering`` and ``io`` sections.  Defaults follow the
reference setup: 10 neurons, spectral radius 0.9, Gaussian target N(0, 0.1^2),
5 tuning epochs, 50 settling iterations, 3 classes.  Command-line flags
override file values, and the effective configuration is echoed into every
output directory.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, fields

from .errors import ConfigError

if sys.version_info >= (3, 11):
    import tomllib as _toml
else:
    import tomli as _toml


@dataclass
class PipelineConfig:
    # [reservoir]
    n_r: int = 10
    spectral_radius: float = 0.9
    seed: int = 36
    # [ip]
    mu_target: float = 0.0
    sigma_target: float = 0.1
    eta: float = 2e-5
    n_ip: int = 5
    # [extraction]
    n_it: int = 50
    tol: float = 1e-6
    # [clustering]
    method: str = "kmeans"
    k: int = 3
    cluster_seed: int = 0
    n_init: int = 10
    fcm_m: float = 2.0
    subtractive_ra: float = 0.4
    otsu_bins: int = 64
    # [io]
    out_dir: str = "out"


# (section, key, field, type, validator, requirement text)
_SCHEMA = [
    ("reservoir", "n_r", "n_r", int, lambda v: v >= 1, ">= 1"),
    ("reservoir", "spectral_radius", "spectral_radius", float, lambda v: v > 0, "> 0"),
    ("reservoir", "seed", "seed", int, lambda v: True, ""),
    ("ip", "mu_target", "mu_target", float, lambda v: True, ""),
    ("ip", "sigma_target", "sigma_target", float, lambda v: v > 0, "> 0"),
    ("ip", "eta", "eta", float, lambda v: v >= 0, ">= 0"),
    ("ip", "n_ip", "n_ip", int, lambda v: v >= 1, ">= 1"),
    ("extraction", "n_it", "n_it", int, lambda v: v >= 1, ">= 1"),
    ("extraction", "tol", "tol", float, lambda v: v > 0, "> 0"),
    ("clustering", "method", "method", str,
     lambda v: v in ("kmeans", "fcm", "subtractive", "hard", "otsu"),
     "one of kmeans/fcm/subtractive/hard/otsu"),
    ("clustering", "k", "k", int, lambda v: v >= 1, ">= 1"),
    ("clustering", "seed", "cluster_seed", int, lambda v: True, ""),
    ("clustering", "n_init", "n_init", int, lambda v: v >= 1, ">= 1"),
    ("clustering", "fcm_m", "fcm_m", float, lambda v: v > 1, "> 1"),
    ("clustering", "subtractive_ra", "subtractive_ra", float, lambda v: v > 0, "> 0"),
    ("clustering", "otsu_bins", "otsu_bins", int, lambda v: v >= 2, ">= 2"),
    ("io", "out_dir", "out_dir", str, lambda v: True, ""),
]


def _check(section, key, value, want, pred, req):
    name = f"{section}.{key}"
    if want is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"config field {name} must be a number, got {value!r}")
        value = float(value)
    elif want is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"config field {name} must be an integer, got {value!r}")
    elif not isinstance(value, want):
        raise ConfigError(f"config field {name} must be a {want.__name__}, got {value!r}")
    if not pred(value):
        raise ConfigError(f"config field {name} must be {req}, got {value!r}")
    return value


def validate_config(cfg: PipelineConfig) -> PipelineConfig:
    for section, key, attr, want, pred, req in _SCHEMA:
        setattr(cfg, attr, _check(section, key, getattr(cfg, attr), want, pred, req))
    return cfg


def load_config(path) -> PipelineConfig:
    """Read a TOML config file; unknown keys are an error naming the key."""
    with open(path, "rb") as fh:
        try:
            doc = _toml.load(fh)
        except _toml.TOMLDecodeError as exc:
            raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    cfg = PipelineConfig()
    known = {(s, k) for s, k, *_ in _SCHEMA}
    for section, table in doc.items():
        if not isinstance(table, dict):
            raise ConfigError(f"config field {section} must be a table")
        for key, value in table.items():
            if (section, key) not in known:
                raise ConfigError(f"unknown config field {section}.{key}")
            for s, k, attr, want, pred, req in _SCHEMA:
                if (s, k) == (section, key):
                    setattr(cfg, attr, _check(s, k, value, want, pred, req))
    return validate_config(cfg)


def _toml_value(v):
    if isinstance(v, str):
        return '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(v, float):
        return repr(v)
    return str(v)


def config_to_toml(cfg: PipelineConfig) -> str:
    lines = []
    current = None
    for section, key, attr, *_ in _SCHEMA:
        if section != current:
            if current is not None:
                lines.append("")
            lines.append(f"[{section}]")
            current = section
        lines.append(f"{key} = {_toml_value(getattr(cfg, attr))}")
    return "\n".join(lines) + "\n"


def apply_overrides(cfg: PipelineConfig, **overrides) -> PipelineConfig:
    """Apply non-None keyword overrides (CLI flags beat file values)."""
    valid = {f.name for f in fields(PipelineConfig)}
    for name, value in overrides.items():
        if name not in valid:
            raise ConfigError(f"unknown config override {name}")
        if value is not None:
            setattr(cfg, name, value)
    return validate_config(cfg)
