"""Run configuration: one TOML file drives every CLI command.

Relative paths in the file are resolved against the file's directory.
Any section may be omitted; omitted values take the library defaults.
Seeds default to the top-level ``seed``.
"""

import hashlib
import json
import os
import sys
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .data import DEFAULT_RANGES, ResidualSpec, Schema, SplitSpec, check_ranges
from .errors import ConfigError, FOHybridError
from .gpr import GPBounds
from .hybrid import GPOptions
from .physics import PhysicsConfig
from .point import FEATURES
from .uq import DEFAULT_CV, StepPolicy, check_correlation, correlation_from_pairs, cv_vector


@dataclass
class GenerateOptions:
    n: int = 2974
    noise_cv: float = 0.002
    seed: int = 0
    ranges: dict = field(default_factory=lambda: dict(DEFAULT_RANGES))
    residual: ResidualSpec = field(default_factory=ResidualSpec)


@dataclass
class UQOptions:
    cv: dict = field(default_factory=lambda: dict(DEFAULT_CV))
    corr: Optional[np.ndarray] = None
    n_samples: int = 1000
    n_points: int = 20
    seed: int = 0
    step: StepPolicy = field(default_factory=StepPolicy)


@dataclass
class RunConfig:
    seed: int = 0
    out_dir: str = "runs"
    data_path: str = "data/synthetic.csv"
    schema: Schema = field(default_factory=Schema)
    model_path: Optional[str] = None
    generate: GenerateOptions = field(default_factory=GenerateOptions)
    split: SplitSpec = field(default_factory=SplitSpec)
    physics: PhysicsConfig = field(default_factory=PhysicsConfig)
    gp: GPOptions = field(default_factory=GPOptions)
    uq: UQOptions = field(default_factory=UQOptions)
    sensitivity_points: Optional[int] = None

    @property
    def model_file(self):
        return self.model_path or os.path.join(self.out_dir, "model.json")

    def to_dict(self):
        """JSON-compatible view of the fully resolved configuration."""
        g, u = self.generate, self.uq
        return {
            "seed": self.seed,
            "out_dir": self.out_dir,
            "data": {"path": self.data_path, "columns": dict(self.schema.columns),
                     "units": dict(self.schema.units)},
            "model_path": self.model_file,
            "generate": {
                "n": g.n, "noise_cv": g.noise_cv, "seed": g.seed,
                "ranges": {k: list(v) for k, v in g.ranges.items()},
                "residual": {"amplitude": g.residual.amplitude,
                             "features": list(g.residual.features),
                             "frequencies": list(g.residual.frequencies)},
            },
            "split": {"n_train": self.split.n_train, "mode": self.split.mode,
                      "seed": self.split.seed},
            "physics": self.physics.to_dict(),
            "gp": {"restarts": self.gp.restarts, "seed": self.gp.seed,
                   "max_fev": self.gp.max_fev,
                   "log_length_scale": list(self.gp.bounds.log_length_scale),
                   "log_signal_variance": list(self.gp.bounds.log_signal_variance),
                   "log_noise_variance": list(self.gp.bounds.log_noise_variance)},
            "uq": {"cv": dict(u.cv),
                   "correlation": None if u.corr is None else np.asarray(u.corr).tolist(),
                   "n_samples": u.n_samples, "n_points": u.n_points, "seed": u.seed,
                   "step_rel": u.step.rel, "step_floor": u.step.floor},
            "sensitivity": {"n_points": self.sensitivity_points},
        }

    def sha256(self):
        text = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()


def _take(section, name, kind, default):
    if name not in section:
        return default
    value = section.pop(name)
    try:
        if kind is int and isinstance(value, float) and not value.is_integer():
            raise ValueError
        return kind(value)
    except (TypeError, ValueError):
        raise ConfigError(f"option {name!r}: cannot interpret {value!r} as {kind.__name__}") from None


def _no_leftovers(section, where):
    if section:
        raise ConfigError(f"unknown option(s) in [{where}]: {sorted(section)}")


def _pair(value, name):
    try:
        lo, hi = value
        return float(lo), float(hi)
    except (TypeError, ValueError):
        raise ConfigError(f"{name} must be a [low, high] pair, got {value!r}") from None


def config_from_dict(raw, base_dir="."):
    raw = json.loads(json.dumps(raw))  # deep copy of plain data
    resolve = lambda p: p if os.path.isabs(p) else os.path.normpath(os.path.join(base_dir, p))  # noqa: E731

    seed = _take(raw, "seed", int, 0)
    cfg = RunConfig(seed=seed)
    cfg.out_dir = resolve(_take(raw, "out_dir", str, "runs"))
    model_path = _take(raw, "model_path", str, None)
    cfg.model_path = resolve(model_path) if model_path else None

    data = raw.pop("data", {})
    cfg.data_path = resolve(_take(data, "path", str, "data/synthetic.csv"))
    try:
        cfg.schema = Schema(columns=dict(data.pop("columns", {})), units=dict(data.pop("units", {})))
    except FOHybridError as exc:
        raise ConfigError(f"[data] schema: {exc}") from None
    _no_leftovers(data, "data")

    gen = raw.pop("generate", {})
    ranges = dict(DEFAULT_RANGES)
    for f, v in gen.pop("ranges", {}).items():
        if f not in FEATURES:
            raise ConfigError(f"[generate.ranges] unknown feature {f!r}")
        ranges[f] = _pair(v, f"[generate.ranges] {f}")
    res = gen.pop("residual", {})
    residual = ResidualSpec(
        amplitude=_take(res, "amplitude", float, 0.1),
        features=tuple(res.pop("features", ("A", "cd_in"))),
        frequencies=tuple(float(x) for x in res.pop("frequencies", (3.0, 2.0))),
    )
    _no_leftovers(res, "generate.residual")
    cfg.generate = GenerateOptions(
        n=_take(gen, "n", int, 2974),
        noise_cv=_take(gen, "noise_cv", float, 0.002),
        seed=_take(gen, "seed", int, seed),
        ranges=check_ranges(ranges),
        residual=residual,
    )
    if cfg.generate.noise_cv < 0:
        raise ConfigError("[generate] noise_cv must be >= 0")
    _no_leftovers(gen, "generate")

    sp = raw.pop("split", {})
    cfg.split = SplitSpec(
        n_train=_take(sp, "n_train", int, 120),
        seed=_take(sp, "seed", int, seed),
        mode=_take(sp, "mode", str, "seeded-shuffle"),
    )
    _no_leftovers(sp, "split")

    try:
        cfg.physics = PhysicsConfig.from_dict(raw.pop("physics", {}))
    except TypeError as exc:
        raise ConfigError(f"[physics] {exc}") from None

    gp = raw.pop("gp", {})
    bounds = GPBounds(
        log_length_scale=_pair(gp.pop("log_length_scale", (-3.0, 4.0)), "log_length_scale"),
        log_signal_variance=_pair(gp.pop("log_signal_variance", (-12.0, 4.0)), "log_signal_variance"),
        log_noise_variance=_pair(gp.pop("log_noise_variance", (-16.0, 0.0)), "log_noise_variance"),
    )
    cfg.gp = GPOptions(
        restarts=_take(gp, "restarts", int, 8),
        seed=_take(gp, "seed", int, seed),
        bounds=bounds,
        max_fev=_take(gp, "max_fev", int, None),
    )
    if cfg.gp.restarts < 1:
        raise ConfigError("[gp] restarts must be >= 1")
    _no_leftovers(gp, "gp")

    uq = raw.pop("uq", {})
    cv = dict(DEFAULT_CV)
    cv.update({k: float(v) for k, v in uq.pop("cv", {}).items()})
    corr_section = uq.pop("correlation", None)
    corr = None
    if corr_section is not None:
        if "matrix" in corr_section:
            corr = np.array(corr_section.pop("matrix"), dtype=float)
        elif "pairs" in corr_section:
            pairs = corr_section.pop("pairs")
            for a, b, _ in pairs:
                for f in (a, b):
                    if f not in FEATURES:
                        raise ConfigError(f"[uq.correlation] unknown feature {f!r}")
            corr = correlation_from_pairs(pairs)
        _no_leftovers(corr_section, "uq.correlation")
    try:
        cv_vector(cv)
        if corr is not None:
            corr = check_correlation(corr)
    except FOHybridError as exc:
        raise ConfigError(f"[uq] {exc}") from None
    cfg.uq = UQOptions(
        cv=cv,
        corr=corr,
        n_samples=_take(uq, "n_samples", int, 1000),
        n_points=_take(uq, "n_points", int, 20),
        seed=_take(uq, "seed", int, seed),
        step=StepPolicy(rel=_take(uq, "step_rel", float, 1e-4),
                        floor=_take(uq, "step_floor", float, 1e-4)),
    )
    if cfg.uq.n_samples < 2:
        raise ConfigError("[uq] n_samples must be >= 2")
    _no_leftovers(uq, "uq")

    sens = raw.pop("sensitivity", {})
    cfg.sensitivity_points = _take(sens, "n_points", int, None)
    _no_leftovers(sens, "sensitivity")

    _no_leftovers(raw, "top level")
    return cfg


def load_config(path=None):
    """Read a TOML run configuration; ``None`` gives all defaults."""
    if path is None:
        return config_from_dict({}, ".")
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return config_from_dict(raw, os.path.dirname(os.path.abspath(path)))
