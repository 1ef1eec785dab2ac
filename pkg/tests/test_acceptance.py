"""Acceptance gate, one test per criterion.

Each test prints a single ``criterion N [PASS|FAIL] ...`` line; the lines
are repeated in the pytest terminal summary.
"""

import hashlib
import time
from pathlib import Path

import numpy as np
from scipy import stats as sps

from fohybrid.cli import main
from fohybrid.data import DEFAULT_RANGES
from fohybrid.gpr import KernelParams, condition_gp, fit_gp, predict_gp
from fohybrid.hybrid import physics_fluxes, predict_hybrid_batch
from fohybrid.metrics import compute_metrics, decomposition_profile
from fohybrid.physics import PhysicsConfig, flux_residual, solve_physical_flux
from fohybrid.point import FEATURES, N_FEATURES
from fohybrid.uq import (
    McValidationReport,
    StepPolicy,
    central_difference,
    delta_variance,
    hybrid_jacobian,
    mc_validate,
    predict_with_uq,
    sample_inputs,
)

from conftest import NOMINAL, record
from oracles import fixed_point_flux, gp_posterior_inverse


def test_c01_gp_matches_dense_inverse_oracle():
    rng = np.random.default_rng(1)
    X = rng.standard_normal((10, N_FEATURES))
    y = rng.standard_normal(10)
    y = (y - y.mean()) / y.std()
    p = KernelParams(1.0, rng.uniform(0.5, 3.0, N_FEATURES), 1e-2)
    Xs = rng.standard_normal((25, N_FEATURES))
    t0 = time.perf_counter()
    mu, var = predict_gp(condition_gp(X, y, p), Xs)
    elapsed = time.perf_counter() - t0
    mu_ref, var_ref = gp_posterior_inverse(X, y, Xs, p.length_scales, 1.0, 1e-2)
    err = max(np.max(np.abs(mu - mu_ref)), np.max(np.abs(var - var_ref)))
    ok = err <= 1e-8 and elapsed < 1.0
    assert record(1, "GP vs dense-inverse oracle", ok, f"max abs err {err:.2e}, {elapsed:.3f} s")


def test_c02_physics_solver_certificate():
    cfg = PhysicsConfig()
    rng = np.random.default_rng(2)
    lo = np.array([DEFAULT_RANGES[f][0] for f in FEATURES])
    hi = np.array([DEFAULT_RANGES[f][1] for f in FEATURES])
    X = lo + (hi - lo) * rng.random((1000, N_FEATURES))
    t0 = time.perf_counter()
    sols = [solve_physical_flux(z, cfg) for z in X]
    elapsed = time.perf_counter() - t0
    worst_res = max(abs(flux_residual(b.jw, z, cfg)) for b, z in zip(sols, X))
    worst_rel = max(
        abs(b.jw - fixed_point_flux(z[4], b.pi_d_bulk, b.pi_f_bulk, cfg.B, b.S, cfg.D_s_ref, b.k_feed)) / b.jw
        for b, z in zip(sols, X)
    )
    ideal_cfg = PhysicsConfig(B=0.0, k_feed_override=1.0)
    p = NOMINAL.replace(t_psl=1e-9, tau=1.0, eps_psl=1.0)
    b = solve_physical_flux(p, ideal_cfg)
    ideal_err = abs(b.jw / (p.A * (b.pi_d_bulk - b.pi_f_bulk)) - 1)
    ok = worst_res <= 1e-12 and worst_rel <= 1e-10 and elapsed < 2.0 and ideal_err <= 1e-3
    assert record(2, "flux solver certificate", ok,
                  f"max|F| {worst_res:.1e} m/s, max rel vs oracle {worst_rel:.1e}, "
                  f"{elapsed:.2f} s for 1000 solves, ideal limit err {ideal_err:.1e}")


def test_c03_monotonicity():
    def sweep(name, values):
        return np.array([solve_physical_flux(NOMINAL.replace(**{name: v})).jw for v in values])

    up_cd = np.all(np.diff(sweep("cd_in", np.linspace(0.5, 2.0, 5))) >= 0)
    up_A = np.all(np.diff(sweep("A", np.linspace(1e-12, 4e-12, 5))) >= 0)
    down_cf = np.all(np.diff(sweep("cf_in", np.linspace(0.01, 0.1, 5))) <= 0)
    # S = tau * t_psl / eps, swept through tortuosity
    down_S = np.all(np.diff(sweep("tau", np.linspace(1.5, 3.0, 5))) <= 0)
    ok = bool(up_cd and up_A and down_cf and down_S)
    assert record(3, "monotonicity sweeps", ok,
                  f"cd up {up_cd}, A up {up_A}, cf down {down_cf}, S down {down_S}")


def test_c04_delta_exact_on_linear_stubs():
    rng = np.random.default_rng(4)
    z = NOMINAL.to_array()
    n, n_stubs = 100_000, 50
    # Bonferroni: family-wise 99% over the 50 stubs
    alpha = 0.01 / n_stubs
    worst, misses = 0.0, 0
    for k in range(n_stubs):
        a = rng.standard_normal(N_FEATURES) / np.abs(z)
        M = rng.standard_normal((N_FEATURES, N_FEATURES))
        W = M @ M.T + N_FEATURES * np.eye(N_FEATURES)
        s = 0.01 * np.abs(z) * rng.uniform(0.2, 1.0, N_FEATURES)
        S = W / np.sqrt(np.outer(np.diag(W), np.diag(W))) * np.outer(s, s)
        J = central_difference(lambda x: float(a @ x) + 1.0, z, 0.5 * np.abs(z))
        exact = float(a @ S @ a)
        worst = max(worst, abs(delta_variance(J, S) - exact) / exact)
        samples, _ = sample_inputs(z, S, n, np.random.default_rng([4, k]))
        v = np.var(samples @ a, ddof=1)
        lo = (n - 1) * v / sps.chi2.ppf(1 - alpha / 2, n - 1)
        hi = (n - 1) * v / sps.chi2.ppf(alpha / 2, n - 1)
        misses += not (lo <= exact <= hi)
    ok = worst <= 1e-12 and misses == 0
    assert record(4, "Delta exact on linear stubs", ok,
                  f"max rel err {worst:.1e}, MC outside CI {misses}/{n_stubs}")


def test_c05_delta_vs_mc_on_hybrid(pipeline):
    t0 = time.perf_counter()
    rep = mc_validate(pipeline["model"], pipeline["test"].X[:20], n_samples=10_000, seed=0)
    elapsed = time.perf_counter() - t0
    med = float(np.median(rep.relative_errors))
    r = rep.variance_correlation()
    ok = med <= 5.0 and r >= 0.95 and elapsed < 300
    assert record(5, "Delta vs MC on hybrid", ok,
                  f"median rel err {med:.2f}%, variance Pearson r {r:.4f}, {elapsed:.0f} s")


def test_c06_relative_error_arithmetic():
    pairs = [(1.25e-8, 1.28e-8), (0.98e-8, 1.00e-8), (1.55e-8, 1.51e-8)]
    got = [row[3] for row in McValidationReport.from_pairs(pairs).formatted_rows()]
    ok = got == ["2.4", "2.0", "2.6"]
    assert record(6, "relative-error table arithmetic", ok, ", ".join(got))


def test_c07_hybrid_beats_baselines(pipeline):
    t0 = time.perf_counter()
    model, train, test = pipeline["model"], pipeline["train"], pipeline["test"]
    pure = fit_gp(model.stats.standardize(train.X), train.jw_measured, restarts=8, seed=0,
                  prior_mean=float(np.mean(train.jw_measured)))
    y = test.jw_measured
    m = {
        "physics": compute_metrics(y, physics_fluxes(test.X, model.physics_cfg)),
        "pure_gp": compute_metrics(y, predict_gp(pure, model.stats.standardize(test.X), return_var=False)),
        "hybrid": compute_metrics(y, predict_hybrid_batch(model, test.X, return_var=False)),
    }
    elapsed = pipeline["elapsed"] + time.perf_counter() - t0
    h = m["hybrid"]
    beats = all(
        h.r2 > b.r2 and h.rmse < b.rmse and h.mae < b.mae and h.mape < b.mape
        for k, b in m.items() if k != "hybrid"
    )
    ok = beats and h.r2 >= 0.99 and h.mape <= 1.0 and elapsed < 180 and len(test) == 2854
    detail = "; ".join(f"{k} R2 {v.r2:.4f} MAPE {v.mape:.2f}%" for k, v in m.items())
    assert record(7, "hybrid beats baselines", ok, f"{detail}; {elapsed:.0f} s")


def test_c08_jacobian_richardson(pipeline):
    rng = np.random.default_rng(8)
    model, test = pipeline["model"], pipeline["test"]
    pol = StepPolicy(rel=1e-2, floor=1e-2)
    ratios = []
    for i in rng.choice(len(test), 5, replace=False):
        z = test.X[i]
        J1, J2, J3 = (hybrid_jacobian(model, z, p) for p in (pol, pol.halved(), pol.halved().halved()))
        ratios.append(np.abs(J1 - J2) / np.abs(J2 - J3))
    ratios = np.array(ratios)
    ok = bool(np.all((ratios >= 3) & (ratios <= 5)))
    assert record(8, "Jacobian Richardson ratio", ok,
                  f"range [{ratios.min():.3f}, {ratios.max():.3f}] over 5 points x 10 features")


def test_c09_uncertainty_identities(pipeline):
    model, X = pipeline["model"], pipeline["test"].X[:20]
    preds = [predict_with_uq(model, z) for z in X]
    sums = all(p.sigma2_total == p.sigma2_model + p.sigma2_input for p in preds)
    epi, ale = decomposition_profile(preds)
    share_err = float(np.max(np.abs(epi + ale - 1.0)))
    zero = [predict_with_uq(model, z, {f: 0.0 for f in FEATURES}) for z in X[:5]]
    _, ale0 = decomposition_profile(zero)
    ok = sums and share_err <= 1e-12 and np.all(ale0 == 0.0)
    assert record(9, "uncertainty identities", ok,
                  f"sum identity {sums}, max share error {share_err:.1e}, zero-CV aleatoric max {ale0.max()}")


DETERMINISM_CONFIG = """\
seed = 0
out_dir = "out"

[data]
path = "data/synthetic.csv"

[generate]
n = 2974

[gp]
restarts = 2

[uq]
n_samples = 500
n_points = 5

[sensitivity]
n_points = 10
"""


def _digest(root):
    return {
        str(p.relative_to(root)): hashlib.sha256(p.read_bytes()).hexdigest()
        for p in sorted(Path(root).rglob("*")) if p.is_file() and p.suffix != ".toml"
    }


def test_c10_cli_determinism(tmp_path):
    (tmp_path / "run.toml").write_text(DETERMINISM_CONFIG)
    cfg = str(tmp_path / "run.toml")
    probe = tmp_path / "probe.csv"

    def run_all():
        codes = [main([c, "--config", cfg]) for c in ("generate", "fit")]
        lines = (tmp_path / "data" / "synthetic.csv").read_text().splitlines(keepends=True)
        probe.write_text("".join(lines[:6]))
        codes += [main(["predict", "--config", cfg, "--points", str(probe)])]
        codes += [main([c, "--config", cfg]) for c in ("evaluate", "validate-uq", "sensitivity")]
        return codes, _digest(tmp_path)

    codes1, first = run_all()
    codes2, second = run_all()
    same = first == second
    ok = same and set(codes1 + codes2) == {0}
    changed = sorted(k for k in first if first.get(k) != second.get(k))
    assert record(10, "CLI determinism", ok,
                  f"{len(first)} files compared, differing: {changed or 'none'}")
