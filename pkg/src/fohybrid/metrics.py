"""Accuracy metrics, Jacobian sensitivities and variance decomposition."""

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .errors import FOHybridError, MetricUndefinedError, UndefinedShareError
from .point import FEATURES, as_array
from .uq import StepPolicy, hybrid_jacobian


@dataclass(frozen=True)
class MetricsReport:
    r2: float
    rmse: float  # m/s
    mae: float  # m/s
    mape: float  # percent
    n: int


def compute_metrics(y_true, y_pred):
    """R^2, RMSE, MAE and MAPE of paired predictions.

    If MAPE or R^2 is undefined (a zero target, or constant targets) a
    :class:`MetricUndefinedError` is raised whose ``report`` holds the
    remaining metrics with the undefined one set to NaN.
    """
    y = np.asarray(y_true, dtype=float).reshape(-1)
    yhat = np.asarray(y_pred, dtype=float).reshape(-1)
    if len(y) != len(yhat) or len(y) == 0:
        raise ValueError(f"need equal, nonzero lengths (got {len(y)} and {len(yhat)})")
    err = y - yhat
    sse = float(np.sum(err**2))
    rmse = float(np.sqrt(sse / len(y)))
    mae = float(np.mean(np.abs(err)))
    problems = []
    sst = float(np.sum((y - y.mean()) ** 2))
    if sst > 0:
        r2 = 1.0 - sse / sst
    else:
        r2 = float("nan")
        problems.append("R^2 is undefined for constant y_true")
    if np.all(y != 0):
        mape = float(100.0 * np.mean(np.abs(err) / np.abs(y)))
    else:
        mape = float("nan")
        problems.append("MAPE is undefined when y_true contains 0")
    report = MetricsReport(r2, rmse, mae, mape, len(y))
    if problems:
        raise MetricUndefinedError("; ".join(problems), report)
    return report


@dataclass(frozen=True)
class SensitivityProfile:
    features: Tuple[str, ...]
    mean_abs_raw: np.ndarray
    mean_abs_standardized: np.ndarray
    n_points: int
    n_failed: int

    @property
    def ranking(self):
        """Feature names by decreasing standardized sensitivity."""
        order = np.argsort(-self.mean_abs_standardized, kind="stable")
        return [self.features[i] for i in order]

    def rank_of(self, feature):
        return self.ranking.index(feature) + 1


def sensitivity_profile(model, points, step_policy=StepPolicy(), jacobian=hybrid_jacobian):
    """Mean absolute Jacobian per feature over ``points``.

    The standardized scale multiplies by the training standard deviation so
    features with different units are comparable.  Points where the
    Jacobian fails are skipped and counted in ``n_failed``.
    """
    rows, failed = [], 0
    for p in points:
        try:
            rows.append(jacobian(model, as_array(p), step_policy))
        except FOHybridError:
            failed += 1
    if not rows:
        raise FOHybridError(f"Jacobian failed at all {failed} points")
    raw = np.mean(np.abs(np.array(rows)), axis=0)
    std = np.asarray(model.stats.std, dtype=float)
    return SensitivityProfile(FEATURES, raw, raw * std, len(rows), failed)


def decomposition_profile(predictions):
    """Epistemic and aleatoric shares of the total variance per prediction."""
    total = np.array([p.sigma2_total for p in predictions], dtype=float)
    if np.any(~(total > 0)):
        i = int(np.flatnonzero(~(total > 0))[0])
        raise UndefinedShareError(f"prediction {i} has zero total variance")
    model = np.array([p.sigma2_model for p in predictions], dtype=float)
    inp = np.array([p.sigma2_input for p in predictions], dtype=float)
    return model / total, inp / total
