"""Command-line front end.

    fohybrid generate     --config run.toml
    fohybrid fit          --config run.toml [--model model.json]
    fohybrid predict      --config run.toml --points points.csv
    fohybrid evaluate     --config run.toml
    fohybrid validate-uq  --config run.toml [--n-samples 10000] [--seed 1]
    fohybrid sensitivity  --config run.toml

Exit codes: 0 success, 1 other package error, 2 configuration error,
3 data error, 4 solver error, 5 conditioning error, 6 model-file error.
"""

import argparse
import csv
import json
import os
import platform
import sys
from dataclasses import replace

import numpy as np
import scipy

from . import __version__
from .config import load_config
from .data import (
    generate_synthetic,
    load_dataset,
    load_points,
    split,
    write_dataset,
)
from .errors import (
    ConfigError,
    DataError,
    FOHybridError,
    MetricUndefinedError,
    ModelFileError,
    exit_code_for,
)
from .gpr import fit_gp, predict_gp
from .hybrid import fit_hybrid, load_model, physics_fluxes, predict_hybrid_batch, save_model
from .metrics import compute_metrics, decomposition_profile, sensitivity_profile
from .point import FEATURES
from .uq import mc_validate, predict_with_uq


def fmt(x):
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def file_sha256(path):
    import hashlib

    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(cfg, command, seeds, inputs, outputs, directory=None):
    """Run manifest: config hash, seeds, versions, input/output digests."""
    directory = directory or cfg.out_dir
    manifest = {
        "command": command,
        "config_sha256": cfg.sha256(),
        "seeds": seeds,
        "versions": {
            "fohybrid": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": platform.python_version(),
        },
        "inputs": {os.path.basename(p): file_sha256(p) for p in inputs},
        "outputs": {os.path.basename(p): file_sha256(p) for p in outputs},
    }
    path = os.path.join(directory, f"manifest_{command.replace('-', '_')}.json")
    write_json(path, manifest)
    return path


def _load_split(cfg):
    if not os.path.exists(cfg.data_path):
        raise DataError(f"dataset not found: {cfg.data_path}")
    dataset = load_dataset(cfg.data_path, cfg.schema)
    return split(dataset, cfg.split)


def _load_model(cfg):
    path = cfg.model_file
    if not os.path.exists(path):
        raise ModelFileError(f"model file not found: {path} (run `fohybrid fit` first)")
    return load_model(path)


# -- commands ----------------------------------------------------------------


def cmd_generate(cfg, args):
    g = cfg.generate
    seed = args.seed if args.seed is not None else g.seed
    dataset = generate_synthetic(
        g.n, ranges=g.ranges, residual_spec=g.residual, noise_cv=g.noise_cv,
        seed=seed, physics_cfg=cfg.physics,
    )
    directory = os.path.dirname(cfg.data_path) or "."
    os.makedirs(directory, exist_ok=True)
    write_dataset(dataset, cfg.data_path, cfg.schema)
    stem = os.path.splitext(cfg.data_path)[0]
    info_path = stem + ".generation.json"
    write_json(info_path, {
        "n": g.n,
        "seed": seed,
        "noise_cv": g.noise_cv,
        "residual": {"form": "amplitude * sin(f0 * z0) * cos(f1 * z1)",
                     "amplitude": g.residual.amplitude,
                     "features": list(g.residual.features),
                     "frequencies": list(g.residual.frequencies),
                     "standardization": "uniform-range mean and std"},
        "ranges": {k: list(v) for k, v in g.ranges.items()},
    })
    write_manifest(cfg, "generate", {"generate": seed}, [], [cfg.data_path, info_path], directory)
    print(f"wrote {len(dataset)} rows to {cfg.data_path}")


def cmd_fit(cfg, args):
    gp_opts = cfg.gp if args.seed is None else replace(cfg.gp, seed=args.seed)
    train, test = _load_split(cfg)
    model = fit_hybrid(train, cfg.physics, gp_opts)
    os.makedirs(cfg.out_dir, exist_ok=True)
    model_dir = os.path.dirname(cfg.model_file)
    if model_dir:
        os.makedirs(model_dir, exist_ok=True)
    save_model(model, cfg.model_file)
    e = model.gp.targets
    p = model.gp.params
    report = {
        "n_train": len(train),
        "n_test": len(test),
        "train_fingerprint": model.train_fingerprint,
        "residuals": {
            "mean": float(np.mean(e)),
            "std": float(np.std(e)),
            "max_abs": float(np.max(np.abs(e))),
            "mean_relative": float(np.mean(np.abs(e) / np.where(train.jw_measured > 0, train.jw_measured, np.nan))),
        },
        "gp": {
            "signal_variance": p.signal_variance,
            "noise_variance": p.noise_variance,
            "length_scales": dict(zip(FEATURES, p.length_scales.tolist())),
            "log_marginal_likelihood": model.gp.log_marginal_likelihood,
            "jitter_used": model.gp.jitter_used,
            "restarts": gp_opts.restarts,
            "seed": gp_opts.seed,
        },
    }
    report_path = os.path.join(cfg.out_dir, "fit_report.json")
    write_json(report_path, report)
    write_manifest(cfg, "fit", {"split": cfg.split.seed, "gp": gp_opts.seed},
                   [cfg.data_path], [cfg.model_file, report_path])
    print(f"saved model to {cfg.model_file}; final log marginal likelihood "
          f"{model.gp.log_marginal_likelihood:.6g}")


def cmd_predict(cfg, args):
    if not args.points:
        raise ConfigError("predict needs --points <csv>")
    if not os.path.exists(args.points):
        raise DataError(f"points file not found: {args.points}")
    model = _load_model(cfg)
    X = load_points(args.points, cfg.schema)
    jw_phys = physics_fluxes(X, model.physics_cfg)
    rows = []
    for i, z in enumerate(X):
        u = predict_with_uq(model, z, cfg.uq.cv, cfg.uq.corr, cfg.uq.step)
        rows.append([i, *z, jw_phys[i], u.jw_hybrid, u.sigma2_model, u.sigma2_input,
                     u.sigma2_total, u.interval95[0], u.interval95[1]])
    os.makedirs(cfg.out_dir, exist_ok=True)
    out = os.path.join(cfg.out_dir, "predictions.csv")
    write_csv(out, ["index", *FEATURES, "jw_physical", "jw_hybrid", "sigma2_model",
                    "sigma2_input", "sigma2_total", "lo95", "hi95"], rows)
    write_manifest(cfg, "predict", {}, [cfg.model_file, args.points], [out])
    print(f"wrote {len(rows)} predictions to {out}")


def _metrics_row(name, split_name, y, yhat):
    try:
        m = compute_metrics(y, yhat)
    except MetricUndefinedError as exc:
        m = exc.report
    return [name, split_name, m.r2, m.rmse, m.mae, m.mape, m.n]


def cmd_evaluate(cfg, args):
    model = _load_model(cfg)
    train, test = _load_split(cfg)
    gp_opts = cfg.gp if args.seed is None else replace(cfg.gp, seed=args.seed)
    # pure GP on the flux itself, same standardization and options
    pure = fit_gp(
        model.stats.standardize(train.X), train.jw_measured,
        restarts=gp_opts.restarts, seed=gp_opts.seed,
        prior_mean=float(np.mean(train.jw_measured)),
        bounds=gp_opts.bounds, max_fev=gp_opts.max_fev,
    )
    os.makedirs(cfg.out_dir, exist_ok=True)
    rows, outputs = [], []
    for split_name, ds in (("train", train), ("test", test)):
        preds = {
            "physics": physics_fluxes(ds.X, model.physics_cfg),
            "pure_gp": predict_gp(pure, model.stats.standardize(ds.X), return_var=False),
            "hybrid": predict_hybrid_batch(model, ds.X, return_var=False),
        }
        for name, yhat in preds.items():
            rows.append(_metrics_row(name, split_name, ds.jw_measured, yhat))
            parity = os.path.join(cfg.out_dir, f"parity_{name}_{split_name}.csv")
            write_csv(parity, ["y_true", "y_pred"], zip(ds.jw_measured, yhat))
            outputs.append(parity)
    out = os.path.join(cfg.out_dir, "metrics.csv")
    write_csv(out, ["model", "split", "r2", "rmse", "mae", "mape_pct", "n"], rows)
    write_manifest(cfg, "evaluate", {"split": cfg.split.seed, "gp": gp_opts.seed},
                   [cfg.model_file, cfg.data_path], [out, *outputs])
    for r in rows:
        print(f"{r[0]:>8s} {r[1]:>5s}  R2={r[2]:.6f}  RMSE={r[3]:.4g}  MAE={r[4]:.4g}  MAPE={r[5]:.4f}%")


def cmd_validate_uq(cfg, args):
    model = _load_model(cfg)
    _, test = _load_split(cfg)
    n_points = min(cfg.uq.n_points, len(test))
    points = test.X[:n_points]
    n_samples = args.n_samples if args.n_samples is not None else cfg.uq.n_samples
    seed = args.seed if args.seed is not None else cfg.uq.seed
    report = mc_validate(model, points, cfg.uq.cv, cfg.uq.corr, n_samples, seed, cfg.uq.step)
    os.makedirs(cfg.out_dir, exist_ok=True)
    table = os.path.join(cfg.out_dir, "mc_validation.csv")
    write_csv(table, ["point_id", "sigma_delta", "sigma_mc", "relative_error_pct", "n_rejected"],
              [[r.point_id, r.sigma_delta, r.sigma_mc, r.relative_error_pct, r.n_rejected]
               for r in report.rows])
    pairs = os.path.join(cfg.out_dir, "mc_sigma_pairs.csv")
    write_csv(pairs, ["sigma_delta", "sigma_mc"], zip(report.sigma_delta, report.sigma_mc))

    preds = [predict_with_uq(model, z, cfg.uq.cv, cfg.uq.corr, cfg.uq.step) for z in points]
    epi, ale = decomposition_profile(preds)
    decomp = os.path.join(cfg.out_dir, "uq_decomposition.csv")
    write_csv(decomp, ["point_id", "jw_hybrid", "sigma2_model", "sigma2_input", "sigma2_total",
                       "epistemic_share", "aleatoric_share"],
              [[i, p.jw_hybrid, p.sigma2_model, p.sigma2_input, p.sigma2_total, epi[i], ale[i]]
               for i, p in enumerate(preds)])

    rel = report.relative_errors
    summary = {
        "n_points": n_points,
        "n_samples": n_samples,
        "seed": seed,
        "median_relative_error_pct": float(np.median(rel)),
        "max_relative_error_pct": float(np.max(rel)),
        "pearson_variance_correlation": report.variance_correlation(),
        "median_aleatoric_share": float(np.median(ale)),
    }
    summary_path = os.path.join(cfg.out_dir, "mc_summary.json")
    write_json(summary_path, summary)
    write_manifest(cfg, "validate-uq", {"split": cfg.split.seed, "mc": seed},
                   [cfg.model_file, cfg.data_path], [table, pairs, decomp, summary_path])
    print(f"median relative error {summary['median_relative_error_pct']:.3f}%, "
          f"variance correlation {summary['pearson_variance_correlation']:.5f}")


def cmd_sensitivity(cfg, args):
    model = _load_model(cfg)
    _, test = _load_split(cfg)
    n = len(test) if cfg.sensitivity_points is None else min(cfg.sensitivity_points, len(test))
    prof = sensitivity_profile(model, test.X[:n], cfg.uq.step)
    rank = {f: i + 1 for i, f in enumerate(prof.ranking)}
    os.makedirs(cfg.out_dir, exist_ok=True)
    out = os.path.join(cfg.out_dir, "sensitivity.csv")
    write_csv(out, ["feature", "mean_abs_jacobian_raw", "mean_abs_jacobian_standardized", "rank"],
              [[f, prof.mean_abs_raw[i], prof.mean_abs_standardized[i], rank[f]]
               for i, f in enumerate(FEATURES)])
    write_manifest(cfg, "sensitivity", {"split": cfg.split.seed},
                   [cfg.model_file, cfg.data_path], [out])
    print("ranking (standardized): " + ", ".join(prof.ranking))
    if prof.n_failed:
        print(f"skipped {prof.n_failed} point(s) where the Jacobian failed")


COMMANDS = {
    "generate": cmd_generate,
    "fit": cmd_fit,
    "predict": cmd_predict,
    "evaluate": cmd_evaluate,
    "validate-uq": cmd_validate_uq,
    "sensitivity": cmd_sensitivity,
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="fohybrid", description="Hybrid physics + GP forward-osmosis flux model."
    )
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", help="TOML run configuration")
    parser.add_argument("--model", help="model file (default: <out_dir>/model.json)")
    parser.add_argument("--out", help="output directory (overrides out_dir)")
    parser.add_argument("--seed", type=int, help="seed of this command's random step")
    parser.add_argument("--n-samples", type=int, help="Monte Carlo samples per point")
    parser.add_argument("--points", help="CSV of operating points for `predict`")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.out:
            # --out moves outputs; commands that read a model keep the configured one
            if args.command != "fit":
                cfg.model_path = cfg.model_file
            cfg.out_dir = args.out
        if args.model:
            cfg.model_path = args.model
        if args.n_samples is not None and args.n_samples < 2:
            raise ConfigError("--n-samples must be >= 2")
        COMMANDS[args.command](cfg, args)
    except FOHybridError as exc:
        print(f"fohybrid {args.command}: error: {exc}", file=sys.stderr)
        return exit_code_for(exc)
    return 0


if __name__ == "__main__":
    sys.exit(main())
