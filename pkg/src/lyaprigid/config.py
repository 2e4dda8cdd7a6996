"""Experiment configuration: an INI file with fixed sections and keys.

Example::

    [run]
    seed = 12345
    output_dir = out

    [group]
    kind = schottky
    half_width_deg = 44.9

    [metric]
    epsilon = 0.0
    bumps = 0 0 0.8 0.5

    [rigidity]
    epsilons = 0, 0.01, 0.02, 0.04

Bumps are ``x y radius amplitude`` quadruples separated by ``;``.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field

from .errors import ConfigError

SCHEMA = {
    "run": {"seed": int, "output_dir": str, "threads": int},
    "group": {"kind": str, "half_width_deg": float, "separation": float},
    "metric": {"base_curvature": float, "epsilon": float, "bumps": str, "profile": str},
    "integrator": {"rtol": float, "atol": float, "residual_tol": float, "shooting_tol": float,
                   "fd_step": float, "oracle_periods": int},
    "census": {"max_word_length": int},
    "rigidity": {"epsilons": str, "max_word_length": int, "grid_resolution": int},
    "entropy": {"mc_samples": int, "horizon": float, "max_word_length": int},
    "riccati": {"profile": str, "value": float, "diagonal": str, "mean": float, "cos": str,
                "sin": str, "period": float, "path": str, "oracle_periods": int},
}


@dataclass
class ExperimentConfig:
    seed: int = 0
    output_dir: str = "out"
    threads: int = 1
    group_kind: str = "schottky"
    half_width_deg: float = 44.9
    separation: float = 1e-3
    base_curvature: float = -1.0
    epsilon: float = 0.0
    bumps: list = field(default_factory=lambda: [(0.0, 0.0, 0.8, 0.5)])
    metric_profile: str = "poly"
    rtol: float = 1e-12
    atol: float = 1e-13
    residual_tol: float = 1e-6
    shooting_tol: float = 1e-10
    fd_step: float = 1e-6
    oracle_periods: int = 500
    census_max_word_length: int = 4
    epsilons: list = field(default_factory=lambda: [0.0])
    rigidity_max_word_length: int = 4
    grid_resolution: int = 200
    mc_samples: int = 200
    horizon: float = 50.0
    entropy_max_word_length: int = 6
    riccati: dict = field(default_factory=dict)


def _floats(key, text):
    try:
        return [float(x) for x in text.replace(",", " ").split()]
    except ValueError:
        raise ConfigError(key, f"expected numbers, got {text!r}") from None


def _bumps(text):
    out = []
    for chunk in text.split(";"):
        if not chunk.strip():
            continue
        vals = _floats("metric.bumps", chunk)
        if len(vals) != 4:
            raise ConfigError("metric.bumps", "each bump needs x y radius amplitude")
        out.append(tuple(vals))
    return out


def _read(parser):
    raw = {}
    for sect in parser.sections():
        if sect not in SCHEMA:
            raise ConfigError(sect, "unknown section")
        for key, text in parser.items(sect):
            full = f"{sect}.{key}"
            typ = SCHEMA[sect].get(key)
            if typ is None:
                raise ConfigError(full, "unknown key")
            try:
                raw[full] = typ(text.strip())
            except ValueError:
                raise ConfigError(full, f"cannot parse {text!r} as {typ.__name__}") from None
    return raw


def load_config(path, seed=None, output_dir=None):
    """Parse and validate ``path``; ``seed`` and ``output_dir`` override the file."""
    parser = configparser.ConfigParser(interpolation=None, default_section="__none__")
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except FileNotFoundError:
        raise ConfigError("--config", f"file not found: {path}") from None
    except configparser.Error as exc:
        raise ConfigError("--config", str(exc).splitlines()[0]) from None
    raw = _read(parser)
    cfg = ExperimentConfig()
    simple = {
        "run.seed": "seed", "run.output_dir": "output_dir", "run.threads": "threads",
        "group.kind": "group_kind", "group.half_width_deg": "half_width_deg",
        "group.separation": "separation", "metric.base_curvature": "base_curvature",
        "metric.epsilon": "epsilon", "metric.profile": "metric_profile",
        "integrator.rtol": "rtol", "integrator.atol": "atol",
        "integrator.residual_tol": "residual_tol", "integrator.shooting_tol": "shooting_tol",
        "integrator.fd_step": "fd_step", "integrator.oracle_periods": "oracle_periods",
        "census.max_word_length": "census_max_word_length",
        "rigidity.max_word_length": "rigidity_max_word_length",
        "rigidity.grid_resolution": "grid_resolution",
        "entropy.mc_samples": "mc_samples", "entropy.horizon": "horizon",
        "entropy.max_word_length": "entropy_max_word_length",
    }
    for key, attr in simple.items():
        if key in raw:
            setattr(cfg, attr, raw[key])
    if "metric.bumps" in raw:
        cfg.bumps = _bumps(raw["metric.bumps"])
    if "rigidity.epsilons" in raw:
        cfg.epsilons = _floats("rigidity.epsilons", raw["rigidity.epsilons"])
    cfg.riccati = {k.split(".", 1)[1]: v for k, v in raw.items() if k.startswith("riccati.")}
    if seed is not None:
        cfg.seed = seed
    if output_dir is not None:
        cfg.output_dir = output_dir
    validate(cfg)
    return cfg


def validate(cfg):
    for key in ("rtol", "atol", "residual_tol", "shooting_tol", "fd_step", "separation"):
        val = getattr(cfg, key)
        if not (val > 0 and math.isfinite(val)):
            raise ConfigError(key, "tolerances must be positive")
    if cfg.epsilons != sorted(cfg.epsilons):
        raise ConfigError("rigidity.epsilons", "epsilon ladder must be sorted ascending")
    if any(e < 0 for e in cfg.epsilons) or cfg.epsilon < 0:
        raise ConfigError("metric.epsilon", "epsilon must be non-negative")
    if cfg.group_kind not in ("schottky", "surface_genus2", "genus2"):
        raise ConfigError("group.kind", f"unknown group kind {cfg.group_kind!r}")
    if not 0 < cfg.half_width_deg < 45:
        raise ConfigError("group.half_width_deg", "must lie in (0, 45)")
    if cfg.metric_profile not in ("poly", "smooth"):
        raise ConfigError("metric.profile", "must be poly or smooth")
    if cfg.base_curvature >= 0:
        raise ConfigError("metric.base_curvature", "must be negative")
    for key in ("census_max_word_length", "rigidity_max_word_length", "entropy_max_word_length"):
        if getattr(cfg, key) < 0:
            raise ConfigError(key, "word length must be non-negative")
    if cfg.mc_samples < 0:
        raise ConfigError("entropy.mc_samples", "must be non-negative")
    if cfg.horizon <= 0:
        raise ConfigError("entropy.horizon", "must be positive")
    if cfg.threads < 1:
        raise ConfigError("run.threads", "must be at least 1")
    for b in cfg.bumps:
        if b[2] <= 0:
            raise ConfigError("metric.bumps", "bump radius must be positive")
    kind = cfg.riccati.get("profile")
    if kind is not None and kind not in ("constant", "fourier", "sampled", "matrix"):
        raise ConfigError("riccati.profile", f"unknown profile kind {kind!r}")
