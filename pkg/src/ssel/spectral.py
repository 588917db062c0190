"""Nonnegative pseudo-labels ``F`` (C x N) and their multiplicative update.

``F`` is kept nonnegative and pushed toward orthonormal rows by the
penalty ``nu/2 ||F F^T - I||_F^2``. After every update each row is
rescaled to unit norm.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import _as_values, apply_centering
from .evaluation import kmeans
from .graph import GraphLaplacian

DENOM_FLOOR = 1e-12


@dataclass(frozen=True)
class SpectralAux:
    """``P = H/2 + alpha L_S`` (N x N) and ``Q = W^T X H / 2`` (C x N)."""

    P: np.ndarray
    Q: np.ndarray


def check_pseudo_labels(F) -> np.ndarray:
    F = np.asarray(F, dtype=np.float64)
    if F.ndim != 2:
        raise ValueError("pseudo-labels must be a C x N matrix")
    if np.any(F < 0):
        raise ValueError("pseudo-labels must be nonnegative")
    return F


def normalize_rows(F) -> np.ndarray:
    """Scale every nonzero row of ``F`` to unit Euclidean norm."""
    F = np.array(F, dtype=np.float64)
    norms = np.sqrt((F * F).sum(axis=1))
    nz = norms > 0
    F[nz] /= norms[nz, None]
    return F


def indicator(labels, C: int) -> np.ndarray:
    labels = np.asarray(labels)
    F = np.zeros((C, labels.size))
    F[labels, np.arange(labels.size)] = 1.0
    return F


def init_pseudo_labels(X, C: int, seed: int = 0, n_init: int = 10) -> np.ndarray:
    """Row-normalized K-means indicator matrix.

    Entry ``(i, j)`` is nonzero iff K-means puts sample ``j`` in cluster
    ``i``; row ``i`` then holds ``1/sqrt(n_i)`` on its members. The best of
    ``n_init`` seeded restarts is used: with a large orthogonality penalty
    the pseudo-labels barely move from this starting point.
    """
    values = _as_values(X)
    n = values.shape[1]
    if C < 2:
        raise ValueError(f"need at least 2 clusters, got {C}")
    if C > n:
        raise ValueError(f"cannot form {C} clusters from {n} samples")
    return normalize_rows(indicator(kmeans(values, C, seed, n_init=n_init), C))


def compute_aux(W, X, lap: GraphLaplacian, alpha: float) -> SpectralAux:
    W = np.asarray(W, dtype=np.float64)
    values = _as_values(X)
    d, n = values.shape
    if W.ndim != 2 or W.shape[0] != d:
        raise ValueError(f"W has shape {W.shape}, expected ({d}, C)")
    if lap.L.shape != (n, n):
        raise ValueError(f"Laplacian is {lap.L.shape}, expected ({n}, {n})")
    # H/2 = I/2 - 11^T/(2n), added in place rather than formed.
    P = alpha * lap.L
    P[np.diag_indices_from(P)] += 0.5
    P -= 0.5 / n
    P = 0.5 * (P + P.T)
    Q = 0.5 * apply_centering(W.T @ values)
    return SpectralAux(P, Q)


def labels_objective(F, aux: SpectralAux, nu: float) -> float:
    """``tr(F P F^T - 2 F Q^T) + nu/2 ||F F^T - I||_F^2``."""
    F = np.asarray(F, dtype=np.float64)
    G = F @ F.T - np.eye(F.shape[0])
    return float(np.sum((F @ aux.P) * F) - 2.0 * np.sum(F * aux.Q) + 0.5 * nu * np.sum(G * G))


def labels_gradient(F, aux: SpectralAux, nu: float) -> np.ndarray:
    F = np.asarray(F, dtype=np.float64)
    return 2.0 * (F @ aux.P - aux.Q + nu * (F @ F.T @ F - F))


def kkt_residual(F, aux: SpectralAux, nu: float) -> float:
    """``max |min(F, grad)|``: zero exactly at KKT points of ``F >= 0``."""
    F = np.asarray(F, dtype=np.float64)
    return float(np.max(np.abs(np.minimum(F, labels_gradient(F, aux, nu)))))


def update_pseudo_labels(F, aux: SpectralAux, nu: float = 1e8, inner: int = 1,
                         normalize: bool = True, power: float = 0.5) -> np.ndarray:
    """Multiplicative update of the penalized pseudo-label subproblem.

    Both ``Q`` and ``P`` may carry negative entries, so they are split
    into positive and negative parts and moved to the side of the ratio
    where they stay nonnegative::

        F <- F * ((nu F + Q+ + F P-) / (F P+ + Q- + nu F F^T F)) ** power

    Fixed points with ``F > 0`` are stationary points of the penalized
    objective; zeros stay zero. Denominators are floored at 1e-12.
    ``power=1`` is the undamped ratio, which can overshoot and stall at
    non-KKT zeros; the default square root does not.

    Parameters
    ----------
    F : ndarray, shape (C, N)
    aux : SpectralAux
    nu : float
        Orthogonality penalty.
    inner : int
        Number of multiplicative steps.
    normalize : bool
        Rescale rows to unit norm after each step.
    power : float in (0, 1]
        Exponent applied to the ratio.
    """
    if nu <= 0:
        raise ValueError("nu must be positive")
    if not 0 < power <= 1:
        raise ValueError("power must lie in (0, 1]")
    F = check_pseudo_labels(F).copy()
    P_pos = np.maximum(aux.P, 0.0)
    P_neg = np.maximum(-aux.P, 0.0)
    Q_pos = np.maximum(aux.Q, 0.0)
    Q_neg = np.maximum(-aux.Q, 0.0)
    for _ in range(inner):
        num = nu * F + Q_pos + F @ P_neg
        den = F @ P_pos + Q_neg + nu * (F @ F.T @ F)
        ratio = num / np.maximum(den, DENOM_FLOOR)
        F *= ratio if power == 1 else ratio ** power
        if normalize:
            F = normalize_rows(F)
    return F


def orthogonality_residual(F) -> float:
    """``||F F^T - I||_F``."""
    F = np.asarray(F, dtype=np.float64)
    return float(np.linalg.norm(F @ F.T - np.eye(F.shape[0])))
