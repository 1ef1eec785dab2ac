"""Physics + GP residual hybrid predictor and its persistence."""

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .data import StandardizationStats, fit_standardizer
from .errors import ChecksumError, IncompatibleVersionError, ModelFileError, SolverError
from .gpr import GPBounds, KernelParams, TrainedGP, fit_gp, predict_gp
from .physics import PhysicsConfig, solve_physical_flux
from .point import as_array

MODEL_FORMAT = "fohybrid-model"
MODEL_VERSION = "1"


@dataclass(frozen=True)
class GPOptions:
    restarts: int = 8
    seed: int = 0
    bounds: GPBounds = field(default_factory=GPBounds)
    max_fev: int = None


@dataclass(frozen=True)
class TrainedHybridModel:
    physics_cfg: PhysicsConfig
    stats: StandardizationStats
    gp: TrainedGP
    train_fingerprint: str
    version: str = MODEL_VERSION


def fingerprint(dataset):
    """SHA-256 of the training features and targets (little-endian float64)."""
    h = hashlib.sha256()
    h.update(np.ascontiguousarray(dataset.X, dtype="<f8").tobytes())
    h.update(np.ascontiguousarray(dataset.jw_measured, dtype="<f8").tobytes())
    return h.hexdigest()


def physics_fluxes(X, physics_cfg, what="point"):
    X = np.atleast_2d(np.asarray(X, dtype=float))
    out = np.empty(len(X))
    for i, z in enumerate(X):
        try:
            out[i] = solve_physical_flux(z, physics_cfg).jw
        except SolverError as exc:
            raise type(exc)(f"{what} {i}: {exc}") from exc
    return out


def residuals(train, physics_cfg):
    """e_i = jw_measured_i - J_physical(z_i)."""
    return train.jw_measured - physics_fluxes(train.X, physics_cfg, what="training row")


def fit_hybrid(train, physics_cfg=PhysicsConfig(), gp_options=GPOptions()):
    """Fit the residual GP on standardized training features."""
    if len(train) == 0:
        raise ValueError("empty training set")
    e = residuals(train, physics_cfg)
    stats = fit_standardizer(train)
    gp = fit_gp(
        stats.standardize(train.X), e,
        restarts=gp_options.restarts, seed=gp_options.seed,
        prior_mean=0.0, bounds=gp_options.bounds, max_fev=gp_options.max_fev,
    )
    return TrainedHybridModel(physics_cfg, stats, gp, fingerprint(train))


def predict_hybrid(model, point):
    """Hybrid flux and GP (epistemic) variance at one operating point."""
    z = as_array(point)
    try:
        jw_phys = solve_physical_flux(z, model.physics_cfg).jw
    except SolverError as exc:
        raise type(exc)(f"physics solve failed at {z.tolist()}: {exc}") from exc
    mean, var = predict_gp(model.gp, model.stats.standardize(z))
    return jw_phys + mean, var


def predict_hybrid_batch(model, X, return_var=True):
    """Vectorized :func:`predict_hybrid` over the rows of ``X``."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    jw_phys = physics_fluxes(X, model.physics_cfg)
    out = predict_gp(model.gp, model.stats.standardize(X), return_var=return_var)
    if return_var:
        mean, var = out
        return jw_phys + mean, var
    return jw_phys + out


# -- persistence -------------------------------------------------------------


def _payload(model):
    gp = model.gp
    return {
        "physics": model.physics_cfg.to_dict(),
        "standardization": {"mean": model.stats.mean.tolist(), "std": model.stats.std.tolist()},
        "gp": {
            "kernel": "matern52-ard",
            "signal_variance": gp.params.signal_variance,
            "length_scales": gp.params.length_scales.tolist(),
            "noise_variance": gp.params.noise_variance,
            "prior_mean": gp.prior_mean,
            "jitter_used": gp.jitter_used,
            "log_marginal_likelihood": gp.log_marginal_likelihood,
            "Z_train": gp.Z_train.tolist(),
            "targets": gp.targets.tolist(),
            "chol_factor": gp.chol_factor.tolist(),
            "alpha": gp.alpha.tolist(),
        },
        "train_fingerprint": model.train_fingerprint,
    }


def _canonical(obj):
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=True)


def save_model(model, path):
    payload = _payload(model)
    doc = {
        "format": MODEL_FORMAT,
        "version": model.version,
        "checksum": "sha256:" + hashlib.sha256(_canonical(payload).encode()).hexdigest(),
        "payload": payload,
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_model(path):
    """Load a model file, verifying format version and checksum."""
    with open(path) as fh:
        text = fh.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ChecksumError(f"{path}: corrupted model file ({exc})") from None
    if not isinstance(doc, dict) or doc.get("format") != MODEL_FORMAT:
        raise ModelFileError(f"{path}: not a {MODEL_FORMAT} file")
    version = doc.get("version")
    if version != MODEL_VERSION:
        raise IncompatibleVersionError(
            f"{path}: model version {version!r} is not supported "
            f"(this build reads version {MODEL_VERSION!r})"
        )
    payload = doc.get("payload")
    expected = "sha256:" + hashlib.sha256(_canonical(payload).encode()).hexdigest()
    if doc.get("checksum") != expected:
        raise ChecksumError(f"{path}: checksum mismatch, file is corrupted")
    try:
        g = payload["gp"]
        params = KernelParams(
            g["signal_variance"], np.array(g["length_scales"]), g["noise_variance"]
        )
        gp = TrainedGP(
            Z_train=np.array(g["Z_train"], dtype=float),
            targets=np.array(g["targets"], dtype=float),
            params=params,
            chol_factor=np.array(g["chol_factor"], dtype=float),
            alpha=np.array(g["alpha"], dtype=float),
            prior_mean=float(g["prior_mean"]),
            jitter_used=float(g["jitter_used"]),
            log_marginal_likelihood=float(g["log_marginal_likelihood"]),
        )
        s = payload["standardization"]
        stats = StandardizationStats(np.array(s["mean"]), np.array(s["std"]))
        physics = PhysicsConfig.from_dict(payload["physics"])
        return TrainedHybridModel(physics, stats, gp, payload["train_fingerprint"], version)
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFileError(f"{path}: malformed model payload ({exc})") from None
