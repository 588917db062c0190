"""
Recovering planted features
===========================

Three Gaussian clusters live in 10 of 200 features; the rest is noise.
We select features at a few sparsity levels and check how many of the
chosen ones are the planted ones.
"""

import numpy as np

from ssel import SolverConfig, evaluate, planted_clusters, solve

X, labels, informative = planted_clusters(seed=0)
print("data:", X.d, "features x", X.N, "samples;", len(informative), "informative")

# Clustering on everything is the baseline to beat
base = evaluate(X, range(X.d), labels)
print(f"all features: ACC {base.acc_mean:.3f}")

for lam in (1e-4, 1e-3, 1e-2, 1e-1):
    res = solve(X, SolverConfig(clusters=3, lam=lam))
    sel = res.selected
    hits = np.isin(sel, informative).sum()
    acc = evaluate(X, sel, labels).acc_mean if sel else float("nan")
    print(f"lam={lam:g}: {len(sel):3d} selected, {hits} planted, ACC {acc:.3f}")
