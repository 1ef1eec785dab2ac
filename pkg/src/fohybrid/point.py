"""The 10-feature operating point of an FO cell."""

from dataclasses import astuple, dataclass

import numpy as np

from .errors import ValidationError

#: Feature order used for every array representation in the package.
FEATURES = (
    "cf_in",    # feed concentration, mol/L
    "cd_in",    # draw concentration, mol/L
    "uf_in",    # feed cross-flow velocity, m/s
    "ud_in",    # draw cross-flow velocity, m/s
    "A",        # water permeability, m/(Pa s)
    "eps_psl",  # support-layer porosity, -
    "tau",      # support-layer tortuosity, -
    "t_psl",    # support-layer thickness, m
    "L_x",      # channel length, m
    "t_c",      # channel height, m
)
N_FEATURES = len(FEATURES)
FEATURE_INDEX = {name: i for i, name in enumerate(FEATURES)}

# Lower/upper admissible values per feature and whether the lower bound is
# attainable.  Used for validation and to keep perturbed points in-domain.
LOWER = np.array([0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0])
UPPER = np.array([np.inf] * 5 + [1.0] + [np.inf] * 4)
LOWER_INCLUSIVE = np.array([True] + [False] * 5 + [True] + [False] * 3)


@dataclass(frozen=True)
class OperatingPoint:
    cf_in: float
    cd_in: float
    uf_in: float
    ud_in: float
    A: float
    eps_psl: float
    tau: float
    t_psl: float
    L_x: float
    t_c: float

    def to_array(self):
        return np.array(astuple(self), dtype=float)

    @classmethod
    def from_array(cls, z):
        z = np.asarray(z, dtype=float)
        if z.shape != (N_FEATURES,):
            raise ValueError(f"expected {N_FEATURES} features, got shape {z.shape}")
        return cls(*(float(v) for v in z))

    def replace(self, **changes):
        values = dict(zip(FEATURES, astuple(self)))
        values.update(changes)
        return OperatingPoint(**values)

    def validate(self):
        validate_features(self.to_array())
        return self


def as_array(point):
    """Accept an OperatingPoint or a 10-vector; return a float array."""
    if isinstance(point, OperatingPoint):
        return point.to_array()
    z = np.asarray(point, dtype=float)
    if z.shape != (N_FEATURES,):
        raise ValueError(f"expected {N_FEATURES} features, got shape {z.shape}")
    return z


def feature_violations(X):
    """Boolean mask (same shape as ``X``) of entries outside the feature domain."""
    X = np.asarray(X, dtype=float)
    below = np.where(LOWER_INCLUSIVE, X < LOWER, X <= LOWER)
    return ~np.isfinite(X) | below | (X > UPPER)


def validate_features(X, row_offset=0):
    """Raise :class:`ValidationError` for the first out-of-domain entry.

    ``X`` may be a single 10-vector or an ``(n, 10)`` array.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    bad = feature_violations(X)
    if bad.any():
        row, col = np.argwhere(bad)[0]
        name = FEATURES[col]
        lo = ">=" if LOWER_INCLUSIVE[col] else ">"
        bound = f"{lo} {LOWER[col]:g}"
        if np.isfinite(UPPER[col]):
            bound += f" and <= {UPPER[col]:g}"
        raise ValidationError(
            f"row {row + row_offset}: {name} = {X[row, col]!r} violates {name} {bound}"
        )
