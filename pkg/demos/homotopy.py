"""
Homotopy hard thresholding
==========================

The row-sparse regression starts with a weight large enough to zero every
row and halves it level by level. Watch rows enter the support.
"""

import numpy as np

from ssel.sparse_opt import AmhihtConfig, amhiht_solve, regularized_objective

rng = np.random.default_rng(7)
X = rng.standard_normal((12, 40))
# only features 2 and 5 carry the targets
F = np.vstack([X[2] + 0.1 * rng.standard_normal(40), X[5] - X[2]])

cfg = AmhihtConfig(lam=1e-2, inner_sweeps=20, final_level=True)
res = amhiht_solve(X, F, cfg=cfg)
print(f"lam0 = {res.lam0:.3g}, {res.levels} levels, {res.steps} steps, final L = {res.L:g}")

# levels where the first step is already below xtol leave no record
last = None
for rec in res.trace:
    if rec["lam"] != last:
        print(f"  lam_k={rec['lam']:.3g}  L={rec['L']:g}  support={rec['support']}  phi={rec['phi']:.4f}")
        last = rec["lam"]

print("support:", np.flatnonzero(np.any(res.W != 0, axis=1)))
print("objective:", regularized_objective(res.W, X, F, cfg.lam))
