"""Input-uncertainty propagation for the hybrid model.

First-order (Delta method) propagation ``var = J^T Sigma J`` with a
central-difference Jacobian, combined with the GP posterior variance,
and a Monte Carlo harness that checks the linearization.
"""

import math
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from .errors import CovarianceError, JacobianError, SamplingError, SolverError
from .gpr import predict_gp
from .hybrid import predict_hybrid, predict_hybrid_batch
from .physics import solve_physical_flux
from .point import (
    FEATURE_INDEX,
    FEATURES,
    LOWER,
    LOWER_INCLUSIVE,
    N_FEATURES,
    UPPER,
    as_array,
    feature_violations,
)

#: Coefficients of variation per feature.  Channel geometry (L_x, t_c) is
#: treated as exactly known.
DEFAULT_CV = {
    "cf_in": 0.02,
    "cd_in": 0.02,
    "uf_in": 0.05,
    "ud_in": 0.05,
    "A": 0.05,
    "eps_psl": 0.10,
    "tau": 0.10,
    "t_psl": 0.10,
    "L_x": 0.0,
    "t_c": 0.0,
}

Z95 = 1.96


def cv_vector(cv_table):
    if isinstance(cv_table, dict):
        unknown = set(cv_table) - set(FEATURES)
        if unknown:
            raise CovarianceError(f"CV table names unknown feature(s): {sorted(unknown)}")
        cv = np.array([float(cv_table.get(f, 0.0)) for f in FEATURES])
    else:
        cv = np.asarray(cv_table, dtype=float).reshape(-1)
        if cv.shape != (N_FEATURES,):
            raise CovarianceError(f"expected {N_FEATURES} CVs, got {cv.shape}")
    if not np.all(np.isfinite(cv)) or np.any(cv < 0):
        raise CovarianceError(f"CVs must be finite and >= 0: {cv.tolist()}")
    return cv


def correlation_from_pairs(pairs):
    """Correlation matrix from ``[(feature_a, feature_b, rho), ...]``."""
    corr = np.eye(N_FEATURES)
    for a, b, rho in pairs:
        i, j = FEATURE_INDEX[a], FEATURE_INDEX[b]
        corr[i, j] = corr[j, i] = float(rho)
    return corr


def check_correlation(corr):
    corr = np.asarray(corr, dtype=float)
    if corr.shape != (N_FEATURES, N_FEATURES):
        raise CovarianceError(f"correlation matrix must be {N_FEATURES}x{N_FEATURES}")
    if not np.all(np.isfinite(corr)):
        raise CovarianceError("correlation matrix has non-finite entries")
    if not np.array_equal(corr, corr.T):
        raise CovarianceError("correlation matrix is not symmetric")
    if not np.all(np.diag(corr) == 1.0):
        raise CovarianceError("correlation matrix must have a unit diagonal")
    if np.any(np.abs(corr) > 1.0):
        raise CovarianceError("correlation entries must lie in [-1, 1]")
    if np.linalg.eigvalsh(corr)[0] < -1e-12:
        raise CovarianceError("correlation matrix is not positive semi-definite")
    return corr


def _psd_cholesky(cov):
    """Lower Cholesky factor of a PSD matrix.

    Factored in correlation form so that features with very different
    units (A ~ 1e-12 next to concentrations ~ 1) do not share one jitter
    scale; the jitter is at most 1e-12 on the correlation diagonal.
    Rows with zero variance get zero rows in the factor.
    """
    cov = np.asarray(cov, dtype=float)
    d = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    active = np.flatnonzero(d > 0)
    L = np.zeros_like(cov)
    if len(active) == 0:
        return L
    da = d[active]
    C = cov[np.ix_(active, active)] / np.outer(da, da)
    for jitter in (0.0, 1e-15, 1e-12):
        try:
            Lc = np.linalg.cholesky(C + jitter * np.eye(len(C)))
        except np.linalg.LinAlgError:
            continue
        L[np.ix_(active, active)] = da[:, None] * Lc
        return L
    raise CovarianceError("covariance matrix is not positive semi-definite")


@dataclass(frozen=True)
class InputCovariance:
    sigma: np.ndarray
    corr: np.ndarray
    cov: np.ndarray


def build_covariance(point, cv_table=DEFAULT_CV, corr=None):
    """Sigma_z with ``sigma_i = CV_i * z_i`` and the given correlations."""
    z = as_array(point)
    sigma = cv_vector(cv_table) * np.abs(z)
    corr = np.eye(N_FEATURES) if corr is None else check_correlation(corr)
    cov = corr * np.outer(sigma, sigma)
    _psd_cholesky(cov)
    return InputCovariance(sigma=sigma, corr=corr, cov=cov)


# -- Jacobian ----------------------------------------------------------------


@dataclass(frozen=True)
class StepPolicy:
    """Central-difference steps ``h_i = scale * max(rel * |z_i|, floor * std_i)``.

    ``std_i`` is the training standard deviation of feature ``i``.  Steps
    are shrunk so that ``z +/- h`` stays inside the feature domain.
    """

    rel: float = 1e-4
    floor: float = 1e-4
    scale: float = 1.0

    def halved(self):
        return StepPolicy(self.rel, self.floor, self.scale / 2.0)


def step_sizes(z, feature_std, policy=StepPolicy()):
    z = np.asarray(z, dtype=float)
    h = policy.scale * np.maximum(policy.rel * np.abs(z), policy.floor * np.asarray(feature_std))
    room_lo = np.where(LOWER_INCLUSIVE, z - LOWER, 0.5 * (z - LOWER))
    h = np.minimum(h, room_lo)
    h = np.minimum(h, UPPER - z)
    bad = ~(h > 0)
    if bad.any():
        f = FEATURES[int(np.flatnonzero(bad)[0])]
        raise JacobianError(f"no admissible difference step for {f} at {z[FEATURE_INDEX[f]]!r}")
    return h


def central_difference(f, z, h):
    """Gradient of scalar ``f`` at ``z`` by central differences with steps ``h``."""
    z = np.asarray(z, dtype=float)
    grad = np.empty(len(z))
    for i in range(len(z)):
        zp, zm = z.copy(), z.copy()
        zp[i] += h[i]
        zm[i] -= h[i]
        grad[i] = (f(zp) - f(zm)) / (2.0 * h[i])
    return grad


def hybrid_jacobian(model, point, step_policy=StepPolicy()):
    """d J_w,hybrid / d z_i (mixed units) at an operating point."""
    z = as_array(point)
    h = step_sizes(z, model.stats.std, step_policy)
    # perturbed points, + then - for each feature
    Zp = np.repeat(z[None, :], 2 * N_FEATURES, axis=0)
    for i in range(N_FEATURES):
        Zp[2 * i, i] += h[i]
        Zp[2 * i + 1, i] -= h[i]
    jw_phys = np.empty(len(Zp))
    for k, zk in enumerate(Zp):
        try:
            jw_phys[k] = solve_physical_flux(zk, model.physics_cfg).jw
        except SolverError as exc:
            direction = "+" if k % 2 == 0 else "-"
            raise JacobianError(
                f"physics solve failed at {FEATURES[k // 2]} {direction} step: {exc}"
            ) from exc
    f = jw_phys + predict_gp(model.gp, model.stats.standardize(Zp), return_var=False)
    return (f[0::2] - f[1::2]) / (2.0 * h)


def delta_variance(jacobian, cov):
    """First-order output variance ``J^T Sigma J``."""
    J = np.asarray(jacobian, dtype=float).reshape(-1)
    S = cov.cov if isinstance(cov, InputCovariance) else np.asarray(cov, dtype=float)
    if S.shape != (len(J), len(J)):
        raise ValueError(f"Jacobian of length {len(J)} vs covariance {S.shape}")
    return max(float(J @ S @ J), 0.0)


@dataclass(frozen=True)
class PredictionWithUQ:
    jw_hybrid: float
    sigma2_model: float
    sigma2_input: float
    sigma2_total: float
    jacobian: np.ndarray
    interval95: Tuple[float, float]


def predict_with_uq(model, point, cv_table=DEFAULT_CV, corr=None, step_policy=StepPolicy()):
    """Hybrid prediction with epistemic + input variance."""
    z = as_array(point)
    cov = build_covariance(z, cv_table, corr)
    jw, s2_model = predict_hybrid(model, z)
    J = hybrid_jacobian(model, z, step_policy)
    s2_input = delta_variance(J, cov)
    total = s2_model + s2_input
    half = Z95 * math.sqrt(total)
    return PredictionWithUQ(jw, s2_model, s2_input, total, J, (jw - half, jw + half))


# -- Monte Carlo ---------------------------------------------------------------


def relative_error_pct(sigma_delta, sigma_mc):
    """Percent deviation of the MC standard deviation from the Delta value."""
    return 100.0 * abs(sigma_delta - sigma_mc) / sigma_delta


@dataclass(frozen=True)
class McRow:
    point_id: int
    sigma_delta: float
    sigma_mc: float
    relative_error_pct: float
    n_rejected: int = 0


@dataclass(frozen=True)
class McValidationReport:
    rows: List[McRow]
    n_samples: int
    seed: int

    @classmethod
    def from_pairs(cls, pairs, n_samples=0, seed=0):
        """Report for externally supplied ``(sigma_delta, sigma_mc)`` pairs."""
        rows = [
            McRow(i, float(d), float(m), relative_error_pct(d, m))
            for i, (d, m) in enumerate(pairs)
        ]
        return cls(rows, n_samples, seed)

    @property
    def sigma_delta(self):
        return np.array([r.sigma_delta for r in self.rows])

    @property
    def sigma_mc(self):
        return np.array([r.sigma_mc for r in self.rows])

    @property
    def relative_errors(self):
        return np.array([r.relative_error_pct for r in self.rows])

    def variance_correlation(self):
        """Pearson correlation between Delta and MC variances."""
        if len(self.rows) < 2:
            return float("nan")
        return float(np.corrcoef(self.sigma_delta**2, self.sigma_mc**2)[0, 1])

    def formatted_rows(self, digits=1):
        return [
            (r.point_id, r.sigma_delta, r.sigma_mc, f"{r.relative_error_pct:.{digits}f}")
            for r in self.rows
        ]


def sample_inputs(z, cov, n, rng, max_oversample=10):
    """Draw ``n`` in-domain samples from N(z, cov).

    Draws outside the feature domain are discarded and redrawn, at most
    ``max_oversample * n`` draws in total.  Returns ``(samples, n_rejected)``.
    """
    z = np.asarray(z, dtype=float)
    S = cov.cov if isinstance(cov, InputCovariance) else np.asarray(cov, dtype=float)
    active = np.flatnonzero(np.diag(S) > 0)
    if len(active) == 0:
        return np.repeat(z[None, :], n, axis=0), 0
    L = _psd_cholesky(S[np.ix_(active, active)])
    kept, n_kept, drawn = [], 0, 0
    rejected = np.zeros(N_FEATURES, dtype=int)
    cap = max_oversample * n
    while n_kept < n:
        m = n - n_kept
        if drawn + m > cap:
            worst = FEATURES[int(np.argmax(rejected))]
            raise SamplingError(
                f"more than {cap} draws needed for {n} in-domain samples; "
                f"{worst} is the feature most often out of bounds"
            )
        X = np.repeat(z[None, :], m, axis=0)
        X[:, active] += rng.standard_normal((m, len(active))) @ L.T
        drawn += m
        bad = feature_violations(X)
        rejected += bad.sum(axis=0)
        ok = ~bad.any(axis=1)
        kept.append(X[ok])
        n_kept += int(ok.sum())
    return np.vstack(kept)[:n], drawn - n


def point_rng(seed, point_id):
    return np.random.default_rng([int(seed), int(point_id)])


def mc_validate(
    model, points, cv_table=DEFAULT_CV, corr=None, n_samples=1000, seed=0,
    step_policy=StepPolicy(), point_ids=None,
):
    """Compare Delta-method and Monte Carlo standard deviations point by point."""
    if n_samples < 2:
        raise ValueError("n_samples must be >= 2")
    points = [as_array(p) for p in points]
    ids = list(range(len(points))) if point_ids is None else list(point_ids)
    rows = []
    for pid, z in zip(ids, points):
        cov = build_covariance(z, cv_table, corr)
        J = hybrid_jacobian(model, z, step_policy)
        sigma_delta = math.sqrt(delta_variance(J, cov))
        samples, n_rej = sample_inputs(z, cov, n_samples, point_rng(seed, pid))
        outputs = predict_hybrid_batch(model, samples, return_var=False)
        sigma_mc = float(np.std(outputs, ddof=1))
        rel = relative_error_pct(sigma_delta, sigma_mc) if sigma_delta > 0 else float("nan")
        rows.append(McRow(pid, sigma_delta, sigma_mc, rel, n_rej))
    return McValidationReport(rows, int(n_samples), int(seed))
