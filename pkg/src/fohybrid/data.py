"""Datasets: CSV ingestion, splitting, standardization, synthetic generation."""

import csv
import math
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np

from .errors import (
    ConfigError,
    DegenerateFeatureError,
    ParseError,
    SchemaError,
    SolverError,
    ValidationError,
)
from .physics import PhysicsConfig, solve_physical_flux
from .point import FEATURE_INDEX, FEATURES, N_FEATURES, OperatingPoint, validate_features

TARGET = "jw"
COLUMNS = FEATURES + (TARGET,)

# Multiplicative factor taking a value in the named unit to SI (mol/L for
# concentrations, which the physics consumes directly).
UNIT_FACTORS = {
    "": 1.0,
    "-": 1.0,
    "si": 1.0,
    # flux / velocity
    "m/s": 1.0,
    "cm/s": 1e-2,
    "mm/s": 1e-3,
    "lmh": 1.0 / 3.6e6,
    "l/m2/h": 1.0 / 3.6e6,
    "l/(m2 h)": 1.0 / 3.6e6,
    # concentration ("M"/"mM"); also metre/millimetre for lengths, same factors
    "mol/l": 1.0,
    "m": 1.0,
    "mm": 1e-3,
    "mol/m3": 1e-3,
    # length
    "cm": 1e-2,
    "um": 1e-6,
    "micron": 1e-6,
    # permeability
    "m/(pa s)": 1.0,
    "m/(pa*s)": 1.0,
    "lmh/bar": 1.0 / 3.6e6 / 1e5,
}


def unit_factor(feature, unit):
    key = (unit or "").strip().lower()
    try:
        return UNIT_FACTORS[key]
    except KeyError:
        raise SchemaError(f"unknown unit {unit!r} for column {feature!r}") from None


@dataclass(frozen=True)
class Schema:
    """Column mapping for a CSV dataset.

    ``columns`` maps a feature (or ``"jw"``) to its header name and
    ``units`` maps it to the unit of the stored values.  Unlisted entries
    default to the feature name and SI units.
    """

    columns: Dict[str, str] = field(default_factory=dict)
    units: Dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        for mapping in (self.columns, self.units):
            unknown = set(mapping) - set(COLUMNS)
            if unknown:
                raise SchemaError(f"schema names unknown feature(s): {sorted(unknown)}")
        for feature, unit in self.units.items():
            unit_factor(feature, unit)

    def column(self, feature):
        return self.columns.get(feature, feature)

    def factor(self, feature):
        return unit_factor(feature, self.units.get(feature, ""))


@dataclass(frozen=True)
class Dataset:
    X: np.ndarray  # (n, 10) features in SI, order = FEATURES
    jw_measured: np.ndarray  # (n,) m/s
    provenance: str = "experimental"

    def __post_init__(self):
        X = np.atleast_2d(np.asarray(self.X, dtype=float))
        jw = np.asarray(self.jw_measured, dtype=float).reshape(-1)
        if X.shape[1] != N_FEATURES:
            raise ValidationError(f"expected {N_FEATURES} feature columns, got {X.shape[1]}")
        if len(X) != len(jw):
            raise ValidationError(f"{len(X)} points but {len(jw)} flux values")
        if not np.all(np.isfinite(jw)) or np.any(jw < 0):
            row = int(np.flatnonzero(~np.isfinite(jw) | (jw < 0))[0])
            raise ValidationError(f"row {row}: jw = {jw[row]!r} must be finite and >= 0")
        X.setflags(write=False)
        jw.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "jw_measured", jw)

    def __len__(self):
        return len(self.jw_measured)

    @property
    def points(self):
        return [OperatingPoint.from_array(z) for z in self.X]

    def subset(self, idx):
        idx = np.asarray(idx, dtype=int)
        return Dataset(self.X[idx], self.jw_measured[idx], self.provenance)


def _read_csv(path, names, schema):
    """Numeric columns ``names`` from a CSV file, converted to SI."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise SchemaError(f"{path}: empty file, header row required") from None
        positions = []
        for name in names:
            col = schema.column(name)
            if col not in header:
                raise SchemaError(f"{path}: missing column {col!r} (feature {name!r})")
            positions.append(header.index(col))
        rows = []
        for i, row in enumerate(reader):
            if not row or all(not cell.strip() for cell in row):
                continue
            values = []
            for name, pos in zip(names, positions):
                try:
                    v = float(row[pos])
                except (ValueError, IndexError):
                    cell = row[pos] if pos < len(row) else "<missing>"
                    raise ParseError(
                        f"{path}: row {i}: column {schema.column(name)!r} is not numeric ({cell!r})"
                    ) from None
                if not math.isfinite(v):
                    raise ParseError(
                        f"{path}: row {i}: column {schema.column(name)!r} is not finite ({v!r})"
                    )
                values.append(v)
            rows.append(values)
    data = np.array(rows, dtype=float).reshape(-1, len(names))
    return data * np.array([schema.factor(name) for name in names])


def load_dataset(path, schema=None):
    """Read a CSV dataset (10 features + measured flux) and convert to SI."""
    data = _read_csv(path, COLUMNS, schema or Schema())
    X, jw = data[:, :N_FEATURES], data[:, N_FEATURES]
    validate_features(X)
    return Dataset(X, jw, provenance="experimental")


def load_points(path, schema=None):
    """Read operating points (feature columns only) as an ``(n, 10)`` array."""
    X = _read_csv(path, FEATURES, schema or Schema())
    validate_features(X)
    return X


def write_dataset(dataset, path, schema=None):
    """Write a dataset as CSV; values use 17 significant digits."""
    schema = schema or Schema()
    factors = np.array([schema.factor(name) for name in COLUMNS])
    data = np.column_stack([dataset.X, dataset.jw_measured]) / factors
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([schema.column(name) for name in COLUMNS])
        for row in data:
            writer.writerow([format(v, ".17g") for v in row])


# -- splitting ---------------------------------------------------------------

SPLIT_MODES = ("deterministic-first-k", "seeded-shuffle")


@dataclass(frozen=True)
class SplitSpec:
    n_train: int = 120
    seed: int = 0
    mode: str = "seeded-shuffle"

    def __post_init__(self):
        if self.mode not in SPLIT_MODES:
            raise ConfigError(f"split mode must be one of {SPLIT_MODES}, got {self.mode!r}")


def split_indices(n, spec):
    if not 0 < spec.n_train < n:
        raise ConfigError(f"n_train = {spec.n_train} must satisfy 0 < n_train < {n}")
    if spec.mode == "deterministic-first-k":
        order = np.arange(n)
    else:
        order = np.random.default_rng(spec.seed).permutation(n)
    return order[: spec.n_train], order[spec.n_train:]


def split(dataset, spec=SplitSpec()):
    """Partition into (train, test) according to ``spec``."""
    train_idx, test_idx = split_indices(len(dataset), spec)
    return dataset.subset(train_idx), dataset.subset(test_idx)


# -- standardization ---------------------------------------------------------


@dataclass(frozen=True)
class StandardizationStats:
    mean: np.ndarray
    std: np.ndarray

    def standardize(self, X):
        return (np.asarray(X, dtype=float) - self.mean) / self.std

    def destandardize(self, Z):
        return np.asarray(Z, dtype=float) * self.std + self.mean


def fit_standardizer(train):
    """Per-feature mean and population standard deviation of the training rows."""
    X = train.X if isinstance(train, Dataset) else np.atleast_2d(np.asarray(train, float))
    if len(X) < 2:
        raise DegenerateFeatureError("at least 2 rows are needed to standardize")
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    for i, s in enumerate(std):
        if not s > 1e-14 * max(abs(mean[i]), np.finfo(float).tiny):
            raise DegenerateFeatureError(f"feature {FEATURES[i]!r} is constant over the training rows")
    return StandardizationStats(mean, std)


# -- synthetic data ----------------------------------------------------------

#: Default uniform sampling interval per feature (SI units).
DEFAULT_RANGES = {
    "cf_in": (0.01, 0.1),
    "cd_in": (0.5, 2.0),
    "uf_in": (0.1, 0.25),
    "ud_in": (0.1, 0.25),
    "A": (1.0e-12, 4.0e-12),
    "eps_psl": (0.5, 0.7),
    "tau": (1.8, 2.5),
    "t_psl": (80e-6, 120e-6),
    "L_x": (0.08, 0.12),
    "t_c": (1.5e-3, 2.5e-3),
}


@dataclass(frozen=True)
class ResidualSpec:
    """Smooth relative discrepancy ``amplitude * sin(f0 z0) * cos(f1 z1)``.

    ``z0``, ``z1`` are the named features standardized with the mean and
    standard deviation of their uniform sampling interval.
    """

    amplitude: float = 0.1
    features: Tuple[str, str] = ("A", "cd_in")
    frequencies: Tuple[float, float] = (3.0, 2.0)

    def __post_init__(self):
        if not 0 <= abs(self.amplitude) <= 0.15:
            raise ConfigError(f"|amplitude| must be <= 0.15, got {self.amplitude!r}")
        for f in self.features:
            if f not in FEATURE_INDEX:
                raise ConfigError(f"unknown feature {f!r} in residual spec")

    def __call__(self, X, ranges):
        X = np.atleast_2d(X)
        zs = []
        for f in self.features:
            lo, hi = ranges[f]
            mid, sd = 0.5 * (lo + hi), (hi - lo) / math.sqrt(12.0)
            zs.append((X[:, FEATURE_INDEX[f]] - mid) / (sd if sd > 0 else 1.0))
        f0, f1 = self.frequencies
        return self.amplitude * np.sin(f0 * zs[0]) * np.cos(f1 * zs[1])


NO_RESIDUAL = ResidualSpec(amplitude=0.0)


def check_ranges(ranges):
    ranges = {**DEFAULT_RANGES, **(ranges or {})}
    unknown = set(ranges) - set(FEATURES)
    if unknown:
        raise ConfigError(f"ranges name unknown feature(s): {sorted(unknown)}")
    lo = np.array([ranges[f][0] for f in FEATURES], dtype=float)
    hi = np.array([ranges[f][1] for f in FEATURES], dtype=float)
    if np.any(hi < lo):
        f = FEATURES[int(np.flatnonzero(hi < lo)[0])]
        raise ConfigError(f"range for {f!r} has upper < lower: {ranges[f]}")
    try:
        validate_features(np.vstack([lo, hi]))
    except ValidationError as exc:
        raise ConfigError(f"sampling range outside the feature domain: {exc}") from None
    return {f: (float(ranges[f][0]), float(ranges[f][1])) for f in FEATURES}


def generate_synthetic(
    n,
    ranges=None,
    residual_spec=ResidualSpec(),
    noise_cv=0.0,
    seed=0,
    physics_cfg=PhysicsConfig(),
    max_retries=100,
):
    """Sample a synthetic dataset around the physics model.

    ``jw = J_physical(z) * (1 + delta(z)) * (1 + eps)`` with features drawn
    uniformly from ``ranges`` and ``eps ~ N(0, noise_cv)``.
    """
    if n < 1:
        raise ConfigError(f"n must be >= 1, got {n}")
    if not noise_cv >= 0:
        raise ConfigError(f"noise_cv must be >= 0, got {noise_cv!r}")
    ranges = check_ranges(ranges)
    lo = np.array([ranges[f][0] for f in FEATURES])
    hi = np.array([ranges[f][1] for f in FEATURES])
    rng = np.random.default_rng(seed)

    X = np.empty((n, N_FEATURES))
    jw_phys = np.empty(n)
    for i in range(n):
        for _ in range(max_retries + 1):
            z = lo + (hi - lo) * rng.random(N_FEATURES)
            try:
                jw_phys[i] = solve_physical_flux(z, physics_cfg).jw
            except SolverError:
                continue
            X[i] = z
            break
        else:
            raise SolverError(f"physics solve failed {max_retries + 1} times for sample {i}")

    delta = residual_spec(X, ranges)
    noise = rng.normal(0.0, noise_cv, size=n) if noise_cv > 0 else np.zeros(n)
    jw = jw_phys * (1.0 + delta) * (1.0 + noise)
    jw = np.maximum(jw, 0.0)
    return Dataset(X, jw, provenance=f"synthetic(seed={seed})")
