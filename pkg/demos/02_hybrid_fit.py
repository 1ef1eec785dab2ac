"""
Learning what the physics misses
================================

Generate a synthetic dataset whose "measured" flux departs smoothly from
the physics, train the residual GP on 120 rows and score the rest.
Takes about half a minute.
"""

import numpy as np

from fohybrid.data import SplitSpec, generate_synthetic, split
from fohybrid.gpr import fit_gp, predict_gp
from fohybrid.hybrid import fit_hybrid, physics_fluxes, predict_hybrid_batch
from fohybrid.metrics import compute_metrics
from fohybrid.point import FEATURES

data = generate_synthetic(2974, seed=0)
train, test = split(data, SplitSpec(n_train=120, seed=0))
print(f"{len(train)} training rows, {len(test)} test rows")

model = fit_hybrid(train)
ls = model.gp.params.length_scales
print("GP length scales (standardized units), shortest first:")
for i in np.argsort(ls)[:4]:
    print(f"  {FEATURES[i]:8s} {ls[i]:.3g}")

# a plain GP on the flux itself, for comparison
pure = fit_gp(model.stats.standardize(train.X), train.jw_measured,
              prior_mean=float(train.jw_measured.mean()))

y = test.jw_measured
rows = {
    "physics": physics_fluxes(test.X, model.physics_cfg),
    "pure GP": predict_gp(pure, model.stats.standardize(test.X), return_var=False),
    "hybrid": predict_hybrid_batch(model, test.X, return_var=False),
}
print(f"\n{'model':8s} {'R2':>8s} {'RMSE LMH':>9s} {'MAPE %':>7s}")
for name, yhat in rows.items():
    m = compute_metrics(y, yhat)
    print(f"{name:8s} {m.r2:8.4f} {m.rmse * 3.6e6:9.4f} {m.mape:7.3f}")
