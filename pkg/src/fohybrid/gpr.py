"""Exact Gaussian-process regression with an ARD Matern-5/2 kernel."""

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve, solve_triangular
from scipy.optimize import minimize

from .errors import ConditioningError, DomainError, OptimizationError

SQRT5 = math.sqrt(5.0)
LOG_2PI = math.log(2.0 * math.pi)

# Cholesky repair ladder, as multiples of the mean diagonal.
JITTER_LADDER = (0.0,) + tuple(10.0**p for p in range(-12, -5))


@dataclass(frozen=True)
class KernelParams:
    signal_variance: float
    length_scales: np.ndarray
    noise_variance: float

    def __post_init__(self):
        ls = np.atleast_1d(np.asarray(self.length_scales, dtype=float))
        object.__setattr__(self, "length_scales", ls)
        if not (self.signal_variance > 0 and self.noise_variance > 0 and np.all(ls > 0)):
            raise DomainError(f"kernel parameters must be strictly positive: {self}")


def matern52(x, x2, params):
    """Matern-5/2 covariance between two input vectors."""
    x = np.asarray(x, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    if x.shape != params.length_scales.shape or x2.shape != x.shape:
        raise ValueError("input dimension does not match the length scales")
    r = math.sqrt(float(np.sum(((x - x2) / params.length_scales) ** 2)))
    return params.signal_variance * (1.0 + SQRT5 * r + 5.0 / 3.0 * r * r) * math.exp(-SQRT5 * r)


def _matern52_from_r2(r2, signal_variance):
    r = np.sqrt(np.maximum(r2, 0.0))
    return signal_variance * (1.0 + SQRT5 * r + (5.0 / 3.0) * r2) * np.exp(-SQRT5 * r)


def scaled_sq_dist(X1, X2, length_scales):
    A = np.asarray(X1, dtype=float) / length_scales
    B = np.asarray(X2, dtype=float) / length_scales
    diff = A[:, None, :] - B[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def kernel_matrix(X1, X2, params):
    """Cross-covariance matrix ``k(X1, X2)``."""
    return _matern52_from_r2(
        scaled_sq_dist(X1, X2, params.length_scales), params.signal_variance
    )


def _cholesky_with_jitter(K):
    mean_diag = float(np.mean(np.diag(K)))
    for level in JITTER_LADDER:
        jitter = level * mean_diag
        try:
            L = np.linalg.cholesky(K + jitter * np.eye(len(K)) if jitter else K)
        except np.linalg.LinAlgError:
            continue
        return L, jitter
    raise ConditioningError(
        f"Cholesky failed with jitter up to {JITTER_LADDER[-1]:g} x mean diagonal"
    )


def log_marginal_likelihood(Z, y, params, prior_mean=0.0):
    """log p(y | Z, params) for a constant prior mean."""
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    r = np.asarray(y, dtype=float) - prior_mean
    K = kernel_matrix(Z, Z, params)
    K[np.diag_indices_from(K)] += params.noise_variance
    L, _ = _cholesky_with_jitter(K)
    a = cho_solve((L, True), r)
    return float(-0.5 * r @ a - np.sum(np.log(np.diag(L))) - 0.5 * len(r) * LOG_2PI)


@dataclass(frozen=True)
class TrainedGP:
    Z_train: np.ndarray
    targets: np.ndarray
    params: KernelParams
    chol_factor: np.ndarray
    alpha: np.ndarray
    prior_mean: float = 0.0
    jitter_used: float = 0.0
    log_marginal_likelihood: float = float("nan")

    @property
    def n_train(self):
        return len(self.targets)


def condition_gp(Z, y, params, prior_mean=0.0):
    """Condition a GP prior with fixed hyperparameters on training data."""
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    y = np.asarray(y, dtype=float).reshape(-1)
    if len(Z) != len(y):
        raise ValueError(f"{len(Z)} inputs but {len(y)} targets")
    if not (np.all(np.isfinite(Z)) and np.all(np.isfinite(y))):
        raise DomainError("training inputs and targets must be finite")
    K = kernel_matrix(Z, Z, params)
    K[np.diag_indices_from(K)] += params.noise_variance
    L, jitter = _cholesky_with_jitter(K)
    r = y - prior_mean
    alpha = cho_solve((L, True), r)
    lml = float(-0.5 * r @ alpha - np.sum(np.log(np.diag(L))) - 0.5 * len(r) * LOG_2PI)
    return TrainedGP(
        Z_train=Z, targets=y, params=params, chol_factor=L, alpha=alpha,
        prior_mean=float(prior_mean), jitter_used=jitter, log_marginal_likelihood=lml,
    )


def predict_gp(model, z_star, return_var=True):
    """Posterior mean and variance at one point or a batch of points.

    A 1-d ``z_star`` gives scalar outputs; an ``(m, d)`` array gives arrays.
    """
    z = np.asarray(z_star, dtype=float)
    single = z.ndim == 1
    Zs = np.atleast_2d(z)
    if not np.all(np.isfinite(Zs)):
        raise DomainError("prediction inputs must be finite")
    Ks = kernel_matrix(Zs, model.Z_train, model.params)
    mean = model.prior_mean + Ks @ model.alpha
    if not return_var:
        return mean[0] if single else mean
    v = solve_triangular(model.chol_factor, Ks.T, lower=True, check_finite=False)
    var = model.params.signal_variance - np.einsum("ij,ij->j", v, v)
    # round-off only; genuine negatives would mean a broken factorization
    var = np.where(var < 0.0, 0.0, var)
    if single:
        return float(mean[0]), float(var[0])
    return mean, var


# -- hyperparameter fitting --------------------------------------------------


@dataclass(frozen=True)
class GPBounds:
    """Box constraints on the log-hyperparameters.

    Variance bounds are relative to the target variance.
    """

    log_length_scale: tuple = (-3.0, 4.0)
    log_signal_variance: tuple = (-12.0, 4.0)
    log_noise_variance: tuple = (-16.0, 0.0)


# variance scale used when all targets coincide; keeps the fit well defined
_NULL_TARGET_SCALE = 1e-30


def _target_scale(r):
    v = float(np.mean(r**2))
    return v if v > 0 else _NULL_TARGET_SCALE


def _unpack(theta, scale):
    d = len(theta) - 2
    return KernelParams(
        signal_variance=scale * math.exp(theta[d]),
        length_scales=np.exp(theta[:d]),
        noise_variance=scale * math.exp(theta[d + 1]),
    )


def fit_gp(Z, e, restarts=8, seed=0, prior_mean=0.0, bounds=GPBounds(), max_fev=None):
    """Fit hyperparameters by maximizing the marginal log-likelihood.

    Bounded Nelder-Mead in log-parameter space.  The first two starts use
    unit and long (e^1.5) length scales with unit relative signal variance
    and a small noise; the remaining starts are drawn uniformly from the
    central half of the box, from generators spawned off ``seed``.
    """
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    e = np.asarray(e, dtype=float).reshape(-1)
    n, d = Z.shape
    if n < 2:
        raise ValueError("need at least 2 training points")
    if len(e) != n:
        raise ValueError(f"{n} inputs but {len(e)} targets")
    if not (np.all(np.isfinite(Z)) and np.all(np.isfinite(e))):
        raise DomainError("training inputs and targets must be finite")
    restarts = max(int(restarts), 1)

    r = e - prior_mean
    scale = _target_scale(r)
    y = r / math.sqrt(scale)  # optimize on unit-scale targets

    sq = np.stack([(Z[:, None, j] - Z[None, :, j]) ** 2 for j in range(d)])
    idx = np.diag_indices(n)

    lo = np.r_[[bounds.log_length_scale[0]] * d, bounds.log_signal_variance[0], bounds.log_noise_variance[0]]
    hi = np.r_[[bounds.log_length_scale[1]] * d, bounds.log_signal_variance[1], bounds.log_noise_variance[1]]

    def neg_lml(theta):
        inv_l2 = np.exp(-2.0 * theta[:d])
        r2 = np.tensordot(inv_l2, sq, axes=1)
        K = _matern52_from_r2(r2, math.exp(theta[d]))
        K[idx] += math.exp(theta[d + 1])
        try:
            L = np.linalg.cholesky(K)
        except np.linalg.LinAlgError:
            return np.inf
        a = cho_solve((L, True), y, check_finite=False)
        return 0.5 * y @ a + np.sum(np.log(np.diag(L))) + 0.5 * n * LOG_2PI

    # deterministic starts: unit and long length scales
    starts = [
        np.clip(np.r_[np.full(d, log_l), 0.0, math.log(1e-2)], lo, hi)
        for log_l in (0.0, 1.5)
    ][:restarts]
    for child in np.random.SeedSequence(seed).spawn(restarts - len(starts)):
        rng = np.random.default_rng(child)
        # sample away from the box faces
        starts.append(lo + (hi - lo) * (0.25 + 0.5 * rng.random(d + 2)))

    max_fev = max_fev or 400 * (d + 2)
    best_theta, best_val = None, np.inf
    for x0 in starts:
        res = minimize(
            neg_lml, x0, method="Nelder-Mead", bounds=list(zip(lo, hi)),
            options={"maxfev": max_fev, "xatol": 1e-6, "fatol": 1e-9, "adaptive": True},
        )
        # Nelder-Mead keeps its best vertex, so never worse than x0
        cand, val = res.x, res.fun
        f0 = neg_lml(x0)
        if f0 < val:
            cand, val = x0, f0
        if val < best_val:
            best_theta, best_val = cand, val
    if best_theta is None or not np.isfinite(best_val):
        raise OptimizationError("marginal likelihood is non-finite at every restart")

    params = _unpack(best_theta, scale)
    return condition_gp(Z, e, params, prior_mean)


def with_params(model, params):
    """Re-condition ``model``'s training data on new hyperparameters."""
    return condition_gp(model.Z_train, model.targets, params, model.prior_mean)
