"""Hybrid physics + Gaussian-process model of forward-osmosis water flux."""

__version__ = "0.1.0"

from .point import FEATURES, OperatingPoint  # noqa: E402
from .physics import PhysicsConfig, solve_physical_flux, physical_flux  # noqa: E402
from .data import Dataset, load_dataset, generate_synthetic, split  # noqa: E402
from .gpr import fit_gp, predict_gp  # noqa: E402
from .hybrid import fit_hybrid, predict_hybrid, predict_hybrid_batch, save_model, load_model  # noqa: E402
from .uq import predict_with_uq, mc_validate, build_covariance  # noqa: E402
from .metrics import compute_metrics, sensitivity_profile  # noqa: E402
