"""Mechanistic forward-osmosis water-flux model.

The flux through an FO membrane (active layer facing the feed) with
external concentration polarization on the feed side, internal
concentration polarization in the support layer and reverse salt
permeation obeys the implicit equation

    Jw = A * [Pi_Db exp(-Jw S/Ds) - Pi_Fb exp(Jw/k)]
           / [1 + (B/Jw) (exp(Jw/k) - exp(-Jw S/Ds))]

which is solved for ``Jw`` with Brent's method.  Osmotic pressures are
linear in concentration by default (van 't Hoff), so ``B`` may be applied
to pressure differences directly.
"""

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from .errors import (
    BracketError,
    ConfigError,
    ConvergenceError,
    CorrelationError,
    DomainError,
)
from .point import FEATURE_INDEX, as_array

R_GAS = 8.314  # J/(mol K)

# reference water at 25 C
WATER_DENSITY = 997.05  # kg/m3
WATER_VISCOSITY = 8.9e-4  # Pa s
NACL_DIFFUSIVITY = 1.49e-9  # m2/s

RE_TRANSITION = 2100.0
SHERWOOD_MODES = ("laminar-leveque", "turbulent-power-law", "auto-by-Re")

EXP_LIMIT = 700.0
BRACKET_LOW = 1e-12  # m/s
BRACKET_HIGH_FACTOR = 1.01


@dataclass(frozen=True)
class PropertyCorrelations:
    """Optional polynomial correlations in concentration ``c`` (mol/L).

    Each entry is a tuple of coefficients in ascending powers of ``c``;
    ``None`` keeps the built-in default for that property.
    """

    density: Optional[tuple] = None  # kg/m3
    viscosity: Optional[tuple] = None  # Pa s
    diffusivity: Optional[tuple] = None  # m2/s
    osmotic_pressure: Optional[tuple] = None  # Pa


@dataclass(frozen=True)
class PhysicsConfig:
    B: float = 1e-7  # salt permeability, m/s
    T: float = 298.15  # K
    vant_hoff_i: float = 2.0
    D_s_ref: float = NACL_DIFFUSIVITY
    density_ref: float = WATER_DENSITY
    viscosity_ref: float = WATER_VISCOSITY
    property_correlations: Optional[PropertyCorrelations] = None
    sherwood: str = "auto-by-Re"
    solver_tol: float = 1e-14  # m/s, bound on |F(Jw)| at the returned root
    solver_max_iter: int = 200
    # Replaces the correlation-derived feed-side k (m/s); for limit studies.
    k_feed_override: Optional[float] = None

    def __post_init__(self):
        if not self.B >= 0:
            raise ConfigError(f"B must be >= 0, got {self.B!r}")
        if not self.T > 0:
            raise ConfigError(f"T must be > 0, got {self.T!r}")
        if not self.vant_hoff_i >= 1:
            raise ConfigError(f"vant_hoff_i must be >= 1, got {self.vant_hoff_i!r}")
        for name in ("D_s_ref", "density_ref", "viscosity_ref", "solver_tol"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be > 0, got {getattr(self, name)!r}")
        if self.sherwood not in SHERWOOD_MODES:
            raise ConfigError(
                f"sherwood must be one of {SHERWOOD_MODES}, got {self.sherwood!r}"
            )
        if int(self.solver_max_iter) < 1:
            raise ConfigError("solver_max_iter must be >= 1")
        if self.k_feed_override is not None and not self.k_feed_override > 0:
            raise ConfigError("k_feed_override must be > 0")

    def to_dict(self):
        d = {
            "B": self.B,
            "T": self.T,
            "vant_hoff_i": self.vant_hoff_i,
            "D_s_ref": self.D_s_ref,
            "density_ref": self.density_ref,
            "viscosity_ref": self.viscosity_ref,
            "sherwood": self.sherwood,
            "solver_tol": self.solver_tol,
            "solver_max_iter": int(self.solver_max_iter),
            "k_feed_override": self.k_feed_override,
            "property_correlations": None,
        }
        pc = self.property_correlations
        if pc is not None:
            d["property_correlations"] = {
                k: (list(v) if v is not None else None)
                for k, v in vars(pc).items()
            }
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        pc = d.pop("property_correlations", None)
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown physics option(s): {sorted(unknown)}")
        if pc is not None:
            pc_unknown = set(pc) - set(PropertyCorrelations.__dataclass_fields__)
            if pc_unknown:
                raise ConfigError(f"unknown property correlation(s): {sorted(pc_unknown)}")
            pc = PropertyCorrelations(
                **{k: (tuple(float(c) for c in v) if v is not None else None)
                   for k, v in pc.items()}
            )
        return cls(property_correlations=pc, **d)


@dataclass(frozen=True)
class FluidProperties:
    density: float
    dynamic_viscosity: float
    D_s: float
    osmotic_pressure: float


@dataclass(frozen=True)
class HydroState:
    d_h: float
    Re: float
    Sc: float
    Sh: float
    k: float


@dataclass(frozen=True)
class PhysicalFluxBreakdown:
    jw: float
    pi_d_bulk: float
    pi_f_bulk: float
    pi_d_interface: float
    pi_f_membrane: float
    S: float
    k_feed: float
    residual: float
    iterations: int
    zero_driving_force: bool = False
    hydro: Optional[HydroState] = field(default=None, compare=False)


def structural_parameter(t_psl, tau, eps_psl):
    """S = tau * t_psl / eps_psl (m)."""
    if not eps_psl > 0:
        raise DomainError(f"porosity must be > 0, got {eps_psl!r}")
    if eps_psl > 1:
        raise DomainError(f"porosity must be <= 1, got {eps_psl!r}")
    if not tau >= 1:
        raise DomainError(f"tortuosity must be >= 1, got {tau!r}")
    if not t_psl > 0:
        raise DomainError(f"support thickness must be > 0, got {t_psl!r}")
    return tau * t_psl / eps_psl


def _poly(coeffs, c):
    # Horner, ascending coefficients
    acc = 0.0
    for a in reversed(coeffs):
        acc = acc * c + a
    return acc


def fluid_properties(c, cfg=PhysicsConfig()):
    """Solution properties at concentration ``c`` (mol/L)."""
    if not c >= 0:
        raise DomainError(f"concentration must be >= 0, got {c!r}")
    pc = cfg.property_correlations or PropertyCorrelations()

    def evaluate(coeffs, default, name):
        if coeffs is None:
            return default
        value = _poly(coeffs, c)
        if not value > 0:
            raise CorrelationError(f"{name} correlation gives {value!r} at c = {c!r} mol/L")
        return value

    density = evaluate(pc.density, cfg.density_ref, "density")
    viscosity = evaluate(pc.viscosity, cfg.viscosity_ref, "viscosity")
    diffusivity = evaluate(pc.diffusivity, cfg.D_s_ref, "diffusivity")
    if pc.osmotic_pressure is None:
        osmotic = cfg.vant_hoff_i * (c * 1000.0) * R_GAS * cfg.T
    else:
        osmotic = _poly(pc.osmotic_pressure, c)
        if osmotic < 0 or (c > 0 and osmotic == 0):
            raise CorrelationError(
                f"osmotic pressure correlation gives {osmotic!r} at c = {c!r} mol/L"
            )
    return FluidProperties(density, viscosity, diffusivity, osmotic)


def mass_transfer_coefficient(u, L_x, t_c, props, cfg=PhysicsConfig()):
    """Channel mass-transfer coefficient from a Sherwood correlation.

    Parallel-plate channel of infinite width, ``d_h = 2 t_c``.  Laminar flow
    uses the Leveque form ``Sh = 1.85 (Re Sc d_h/L)^(1/3)``, turbulent flow
    ``Sh = 0.04 Re^0.75 Sc^0.33``.
    """
    for name, v in (("u", u), ("L_x", L_x), ("t_c", t_c)):
        if not v > 0:
            raise DomainError(f"{name} must be > 0, got {v!r}")
    d_h = 2.0 * t_c
    Re = props.density * u * d_h / props.dynamic_viscosity
    Sc = props.dynamic_viscosity / (props.density * props.D_s)
    if cfg.sherwood == "laminar-leveque":
        laminar = True
    elif cfg.sherwood == "turbulent-power-law":
        laminar = False
    else:
        laminar = Re < RE_TRANSITION
    if laminar:
        Sh = 1.85 * (Re * Sc * d_h / L_x) ** (1.0 / 3.0)
    else:
        Sh = 0.04 * Re**0.75 * Sc**0.33
    return HydroState(d_h=d_h, Re=Re, Sc=Sc, Sh=Sh, k=Sh * props.D_s / d_h)


def flux_equation_residual(jw, A, pi_d_bulk, pi_f_bulk, B, S, D_s, k):
    """F(jw) = jw - A * dPi_m(jw) for explicit transport parameters."""
    if not jw > 0:
        raise DomainError(f"trial flux must be > 0, got {jw!r}")
    return jw - A * _membrane_driving_force(jw, pi_d_bulk, pi_f_bulk, B, S, D_s, k)


def _membrane_driving_force(jw, pi_d, pi_f, B, S, D_s, k):
    ecp = jw / k
    if ecp > EXP_LIMIT:
        raise BracketError(f"trial flux {jw!r} m/s gives Jw/k = {ecp:.3g}; unphysical")
    icp = jw * S / D_s
    num = pi_d * math.exp(-icp) - pi_f * math.exp(ecp)
    # exp(ecp) - exp(-icp) without cancellation at small jw
    den = 1.0 + (B / jw) * (math.expm1(ecp) - math.expm1(-icp))
    return num / den


@dataclass(frozen=True)
class _Terms:
    A: float
    pi_d: float
    pi_f: float
    B: float
    S: float
    D_s: float
    k: float
    hydro: Optional[HydroState] = None


def _transport_terms(point, cfg):
    z = as_array(point)
    get = lambda name: float(z[FEATURE_INDEX[name]])  # noqa: E731
    feed = fluid_properties(get("cf_in"), cfg)
    draw = fluid_properties(get("cd_in"), cfg)
    S = structural_parameter(get("t_psl"), get("tau"), get("eps_psl"))
    hydro = mass_transfer_coefficient(get("uf_in"), get("L_x"), get("t_c"), feed, cfg)
    k = hydro.k if cfg.k_feed_override is None else cfg.k_feed_override
    A = get("A")
    if not A >= 0:
        raise DomainError(f"A must be >= 0, got {A!r}")
    return _Terms(A, draw.osmotic_pressure, feed.osmotic_pressure, cfg.B, S, draw.D_s, k, hydro)


def flux_residual(jw_trial, point, cfg=PhysicsConfig()):
    """Residual of the implicit flux equation at ``jw_trial`` for a point."""
    t = _transport_terms(point, cfg)
    return flux_equation_residual(jw_trial, t.A, t.pi_d, t.pi_f, t.B, t.S, t.D_s, t.k)


def solve_flux_equation(A, pi_d_bulk, pi_f_bulk, B, S, D_s, k, tol=1e-14, max_iter=200):
    """Root of the flux equation; returns ``(jw, |F(jw)|, iterations)``.

    Zero driving force (``A == 0`` or ``pi_d_bulk <= pi_f_bulk``) returns
    ``(0.0, 0.0, 0)`` without iterating.
    """
    if A == 0 or pi_d_bulk <= pi_f_bulk:
        return 0.0, 0.0, 0

    def F(jw):
        return jw - A * _membrane_driving_force(jw, pi_d_bulk, pi_f_bulk, B, S, D_s, k)

    lo = BRACKET_LOW
    # flux never exceeds the ideal-membrane flux at full bulk draw pressure
    hi = A * pi_d_bulk * BRACKET_HIGH_FACTOR
    hi = min(hi, EXP_LIMIT * k * (1.0 - 1e-12))
    if not hi > lo:
        raise BracketError(f"empty bracket [{lo!r}, {hi!r}] m/s")
    f_lo, f_hi = F(lo), F(hi)
    if not (f_lo < 0 < f_hi):
        raise BracketError(
            f"no sign change on [{lo!r}, {hi!r}] m/s: F(lo) = {f_lo!r}, F(hi) = {f_hi!r}"
        )
    try:
        root, info = brentq(
            F, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps,
            maxiter=int(max_iter), full_output=True, disp=True,
        )
    except RuntimeError as exc:
        raise ConvergenceError(f"Brent iteration failed: {exc}") from None
    residual = abs(F(root))
    if residual > tol:
        raise ConvergenceError(
            f"|F(jw)| = {residual!r} m/s exceeds tolerance {tol!r} after "
            f"{info.iterations} iterations"
        )
    return root, residual, info.iterations


def solve_physical_flux(point, cfg=PhysicsConfig()):
    """Solve the flux equation at an operating point.

    Returns a :class:`PhysicalFluxBreakdown` with the interface osmotic
    pressures reconstructed from the solved flux.
    """
    t = _transport_terms(point, cfg)
    jw, residual, iterations = solve_flux_equation(
        t.A, t.pi_d, t.pi_f, t.B, t.S, t.D_s, t.k, cfg.solver_tol, cfg.solver_max_iter
    )
    if jw == 0.0:
        return PhysicalFluxBreakdown(
            jw=0.0, pi_d_bulk=t.pi_d, pi_f_bulk=t.pi_f,
            pi_d_interface=t.pi_d, pi_f_membrane=t.pi_f,
            S=t.S, k_feed=t.k, residual=0.0, iterations=0,
            zero_driving_force=True, hydro=t.hydro,
        )
    icp = jw * t.S / t.D_s
    ecp = jw / t.k
    dpi_m = _membrane_driving_force(jw, t.pi_d, t.pi_f, t.B, t.S, t.D_s, t.k)
    # reverse salt flux over Jw, in pressure units
    back = t.B * dpi_m / jw
    pi_d_i = t.pi_d * math.exp(-icp) + back * math.expm1(-icp)
    pi_f_m = t.pi_f * math.exp(ecp) + back * math.expm1(ecp)
    return PhysicalFluxBreakdown(
        jw=jw, pi_d_bulk=t.pi_d, pi_f_bulk=t.pi_f,
        pi_d_interface=pi_d_i, pi_f_membrane=pi_f_m,
        S=t.S, k_feed=t.k, residual=residual, iterations=iterations,
        hydro=t.hydro,
    )


def physical_flux(X, cfg=PhysicsConfig()):
    """Vector of solved fluxes for an ``(n, 10)`` feature array."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    out = np.empty(len(X))
    for i, z in enumerate(X):
        out[i] = solve_physical_flux(z, cfg).jw
    return out
