"""Adaptive similarity graph and its Laplacian.

The similarity matrix ``S`` is a dense, row-stochastic ``N x N`` array.
Row ``i`` is the similarity distribution of sample ``i`` over all samples,
self-similarity included.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist
from scipy.special import logsumexp, xlogy


@dataclass(frozen=True)
class GraphLaplacian:
    """``L = diag(D) - (S + S^T) / 2`` together with the degree vector ``D``."""

    L: np.ndarray
    D: np.ndarray

    @property
    def N(self) -> int:
        return self.D.shape[0]


def check_similarity(S, atol: float = 1e-9) -> np.ndarray:
    """Validate a similarity matrix and return it as a float array."""
    S = np.asarray(S, dtype=np.float64)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise ValueError(f"similarity matrix must be square, got shape {S.shape}")
    if np.any(S < 0):
        raise ValueError("similarity matrix has negative entries")
    sums = S.sum(axis=1)
    if np.any(np.abs(sums - 1.0) > atol):
        i = int(np.argmax(np.abs(sums - 1.0)))
        raise ValueError(f"row {i} of the similarity matrix sums to {sums[i]!r}, not 1")
    return S


def degree_matrix(S) -> np.ndarray:
    """Degrees ``D_ii = sum_j (s_ij + s_ji) / 2`` of the symmetrized graph."""
    S = np.asarray(S, dtype=np.float64)
    return 0.5 * (S.sum(axis=1) + S.sum(axis=0))


def laplacian(S) -> GraphLaplacian:
    S = np.asarray(S, dtype=np.float64)
    D = degree_matrix(S)
    L = -0.5 * (S + S.T)
    L[np.diag_indices_from(L)] += D
    return GraphLaplacian(L, D)


def pairwise_sq_dists(F) -> np.ndarray:
    """Squared Euclidean distances between the columns of ``F``."""
    F = np.asarray(F, dtype=np.float64)
    cols = F.T
    D2 = cdist(cols, cols, "sqeuclidean")
    np.fill_diagonal(D2, 0.0)
    return D2


def update_similarity(F, alpha: float, beta: float) -> np.ndarray:
    """Closed-form minimizer of the entropy-regularized graph subproblem.

    Each row is a softmax over ``-alpha * ||f_i - f_j||^2 / (2 beta)``,
    evaluated with log-sum-exp so small ``beta`` cannot underflow a whole
    row to zero.

    Parameters
    ----------
    F : ndarray, shape (C, N)
        Pseudo-labels; column ``i`` is the label vector of sample ``i``.
    alpha, beta : float
        Trace-term and entropy weights, both positive.

    Returns
    -------
    S : ndarray, shape (N, N)
    """
    if alpha <= 0 or beta <= 0:
        raise ValueError("alpha and beta must be positive")
    logits = -(alpha / (2.0 * beta)) * pairwise_sq_dists(F)
    logS = logits - logsumexp(logits, axis=1, keepdims=True)
    S = np.exp(logS)
    S /= S.sum(axis=1, keepdims=True)
    return S


def graph_entropy_penalty(S) -> float:
    """``sum_ij s_ij log s_ij`` with ``0 log 0 = 0``."""
    S = np.asarray(S, dtype=np.float64)
    return float(xlogy(S, S).sum())


def trace_term(F, lap: GraphLaplacian) -> float:
    """``tr(F L F^T)``."""
    F = np.asarray(F, dtype=np.float64)
    return float(np.sum((F @ lap.L) * F))


def similarity_objective(F, S, alpha: float, beta: float) -> float:
    """Value of ``alpha tr(F L_S F^T) + beta sum s log s`` for a given ``S``."""
    return alpha * trace_term(F, laplacian(S)) + beta * graph_entropy_penalty(S)
