"""Clustering-based evaluation of a feature subset.

K-means on the selected features, cluster ids matched to ground truth with
the Kuhn-Munkres algorithm, and the ACC / NMI scores computed from that.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.spatial.distance import cdist

from .dataset import _as_values

CSV_COLUMNS = ("dataset", "method", "n_features", "acc_mean", "acc_std", "nmi_mean", "nmi_std")


def check_labels(labels, n=None, k=None) -> np.ndarray:
    labels = np.asarray(labels)
    if labels.ndim != 1:
        raise ValueError("labels must be a 1-D vector")
    if labels.size and not np.issubdtype(labels.dtype, np.integer):
        if not np.all(labels == np.round(labels)):
            raise ValueError("labels must be integers")
        labels = labels.astype(np.int64)
    if n is not None and labels.size != n:
        raise ValueError(f"expected {n} labels, got {labels.size}")
    if labels.size and labels.min() < 0:
        raise ValueError("labels must be non-negative")
    if k is not None and labels.size and labels.max() >= k:
        raise ValueError(f"label {labels.max()} out of range for {k} clusters")
    return labels.astype(np.int64)


def _lloyd(points, k, seed, max_iter=300, tol=1e-6):
    n = points.shape[0]
    rng = np.random.default_rng(seed)
    centers = points[rng.choice(n, size=k, replace=False)].copy()

    def assign(centers):
        d2 = cdist(points, centers, "sqeuclidean")
        labels = np.argmin(d2, axis=1)
        return labels, d2

    def repair(labels, d2, centers):
        # Move each empty cluster onto the point farthest from its centroid.
        counts = np.bincount(labels, minlength=k)
        own = d2[np.arange(n), labels].copy()
        for c in np.flatnonzero(counts == 0):
            donors = counts[labels] > 1
            if not donors.any():
                break
            i = int(np.argmax(np.where(donors, own, -np.inf)))
            counts[labels[i]] -= 1
            labels[i] = c
            counts[c] = 1
            centers[c] = points[i]
            own[i] = 0.0
        return labels, centers

    for _ in range(max_iter):
        labels, d2 = assign(centers)
        new = centers.copy()
        labels, new = repair(labels, d2, new)
        for c in range(k):
            members = labels == c
            if members.any():
                new[c] = points[members].mean(axis=0)
        shift = np.sqrt(((new - centers) ** 2).sum(axis=1)).max()
        centers = new
        if shift <= tol:
            break

    labels, d2 = assign(centers)
    labels, centers = repair(labels, d2, centers)
    inertia = float(((points - centers[labels]) ** 2).sum())
    return labels, centers, inertia


def kmeans(X, k: int, seed: int = 0, max_iter: int = 300, tol: float = 1e-6,
           n_init: int = 1) -> np.ndarray:
    """Lloyd's K-means over the samples (columns) of ``X``.

    Initial centroids are ``k`` distinct samples drawn with
    ``numpy.random.default_rng(seed)``. Iteration stops when no centroid
    moves by more than ``tol`` (Euclidean) or after ``max_iter`` rounds.
    Empty clusters are re-seeded at the sample farthest from its own
    centroid, so every returned cluster id in ``range(k)`` is used.

    With ``n_init > 1`` the runs seeded ``seed, ..., seed + n_init - 1``
    are compared and the lowest-inertia labeling is returned (first one
    wins ties).

    Returns
    -------
    labels : ndarray of int, shape (N,)
    """
    points = _as_values(X).T
    n = points.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"cannot form {k} clusters from {n} samples")
    best = None
    for s in range(seed, seed + max(1, n_init)):
        run = _lloyd(points, k, s, max_iter, tol)
        if best is None or run[2] < best[2]:
            best = run
    return best[0]


def contingency(true, pred) -> np.ndarray:
    """Counts ``n[p, t]`` of samples with predicted id ``p`` and true id ``t``."""
    true = check_labels(true)
    pred = check_labels(pred, n=true.size)
    size = (int(pred.max()) + 1 if pred.size else 0, int(true.max()) + 1 if true.size else 0)
    table = np.zeros(size, dtype=np.int64)
    np.add.at(table, (pred, true), 1)
    return table


def hungarian_map(true, pred) -> dict:
    """Map predicted cluster ids to true ids maximizing total agreement.

    Predicted ids left unmatched (more clusters than classes) are absent
    from the returned mapping.
    """
    table = contingency(true, pred)
    rows, cols = linear_sum_assignment(table, maximize=True)
    return {int(r): int(c) for r, c in zip(rows, cols)}


def accuracy(true, pred) -> float:
    """Fraction of samples whose mapped cluster id equals the true class."""
    true = check_labels(true)
    pred = check_labels(pred, n=true.size)
    mapping = hungarian_map(true, pred)
    mapped = np.array([mapping.get(int(p), -1) for p in pred])
    return float(np.mean(mapped == true))


def nmi(true, pred) -> float:
    """Normalized mutual information, geometric-mean normalization.

    Natural logarithms, ``0 log 0 = 0``. Returns 0 when either partition
    has a single cluster, since the normalizer vanishes there.
    """
    table = contingency(true, pred).astype(np.float64)
    n = table.sum()
    n_pred = table.sum(axis=1)
    n_true = table.sum(axis=0)
    nz = table > 0
    outer = np.outer(n_pred, n_true)
    mi = float(np.sum(table[nz] * np.log(n * table[nz] / outer[nz])))
    h_pred = -float(np.sum(n_pred[n_pred > 0] * np.log(n_pred[n_pred > 0] / n)))
    h_true = -float(np.sum(n_true[n_true > 0] * np.log(n_true[n_true > 0] / n)))
    denom = np.sqrt(h_pred * h_true)
    if denom <= 0:
        return 0.0
    return float(min(max(mi / denom, 0.0), 1.0))


@dataclass
class EvalReport:
    acc_mean: float
    acc_std: float
    nmi_mean: float
    nmi_std: float
    per_trial: list = field(default_factory=list)
    n_features_used: int = 0

    def to_json(self, **extra) -> str:
        payload = dict(extra)
        payload.update(asdict(self))
        payload["per_trial"] = [
            {"seed": s, "acc": a, "nmi": m} for s, a, m in self.per_trial
        ]
        return json.dumps(payload, indent=2, sort_keys=True)

    def csv_row(self, dataset: str, method: str) -> dict:
        return {
            "dataset": dataset,
            "method": method,
            "n_features": self.n_features_used,
            "acc_mean": repr(self.acc_mean),
            "acc_std": repr(self.acc_std),
            "nmi_mean": repr(self.nmi_mean),
            "nmi_std": repr(self.nmi_std),
        }

    def to_csv(self, dataset: str, method: str) -> str:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
        writer.writeheader()
        writer.writerow(self.csv_row(dataset, method))
        return buf.getvalue()


def evaluate(X, selected, true, trials: int = 10, base_seed: int = 0, n_clusters=None) -> EvalReport:
    """Score a feature subset by repeated seeded K-means.

    Runs K-means with seeds ``base_seed, ..., base_seed + trials - 1`` on
    the rows ``selected`` of ``X`` and aggregates ACC and NMI with the
    population standard deviation. ``n_clusters`` defaults to the number
    of distinct true classes.
    """
    values = _as_values(X)
    selected = [int(i) for i in selected]
    if not selected:
        raise ValueError("no features selected; try a smaller lambda")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    true = check_labels(true, n=values.shape[1])
    k = n_clusters if n_clusters is not None else int(np.unique(true).size)
    sub = values[selected]

    per_trial = []
    for seed in range(base_seed, base_seed + trials):
        pred = kmeans(sub, k, seed)
        per_trial.append((seed, accuracy(true, pred), nmi(true, pred)))
    accs = np.array([t[1] for t in per_trial])
    nmis = np.array([t[2] for t in per_trial])
    return EvalReport(
        acc_mean=float(accs.mean()),
        acc_std=float(accs.std()),
        nmi_mean=float(nmis.mean()),
        nmi_std=float(nmis.std()),
        per_trial=per_trial,
        n_features_used=len(selected),
    )
