"""Row-sparse regression ``min_W 1/2 ||(W^T X - F) H||_F^2 + lam ||W||_{2,0}``.

Solved by iterative hard thresholding with a geometric continuation on
``lam`` and a backtracking search on the step parameter ``L``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .dataset import _as_values, apply_centering


@dataclass(frozen=True)
class AmhihtConfig:
    """Parameters of the homotopy hard-thresholding solver.

    ``lam0=None`` picks the starting weight from the gradient at ``W0`` so
    that the first level zeroes every row and later levels admit them one
    by one.
    """

    lam: float = 1e-3
    lam0: Optional[float] = None
    rho: float = 0.5
    gamma: float = 2.0
    eta: float = 1e-4
    L0: float = 1.0
    Lmin: float = 1e-4
    Lmax: float = 1e8
    inner_sweeps: int = 1
    max_inner: int = 10_000
    xtol: float = 1e-9
    final_level: bool = False

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError("lam must be positive")
        if self.lam0 is not None and self.lam0 < self.lam:
            raise ValueError("lam0 must be >= lam")
        if not 0 < self.rho < 1:
            raise ValueError("rho must lie in (0, 1)")
        if not self.gamma > 1:
            raise ValueError("gamma must exceed 1")
        if not self.eta > 0:
            raise ValueError("eta must be positive")
        if not 0 < self.Lmin <= self.L0 <= self.Lmax:
            raise ValueError("need 0 < Lmin <= L0 <= Lmax")
        if self.inner_sweeps < 1 or self.max_inner < 1:
            raise ValueError("iteration counts must be >= 1")


@dataclass
class AmhihtResult:
    W: np.ndarray
    status: str
    L: float
    lam0: float
    levels: int
    steps: int
    trace: list = field(default_factory=list)


def _check_shapes(W, X, F):
    W = np.asarray(W, dtype=np.float64)
    F = np.asarray(F, dtype=np.float64)
    d, n = X.shape
    if F.ndim != 2 or F.shape[1] != n:
        raise ValueError(f"F has shape {F.shape}, expected (C, {n})")
    if W.shape != (d, F.shape[0]):
        raise ValueError(f"W has shape {W.shape}, expected ({d}, {F.shape[0]})")
    return W, F


def row_support(W) -> np.ndarray:
    """Boolean mask of rows of ``W`` that are not exactly zero."""
    return np.any(np.asarray(W) != 0, axis=1)


def l20_norm(W) -> int:
    return int(row_support(W).sum())


def _residual(W, X, F):
    return apply_centering(W.T @ X - F)


def smooth_loss(W, X, F) -> float:
    X = _as_values(X)
    W, F = _check_shapes(W, X, F)
    R = _residual(W, X, F)
    return 0.5 * float(np.sum(R * R))


def smooth_gradient(W, X, F) -> np.ndarray:
    """``X H (X^T W - F^T)``; one centering pass suffices since ``H^2 = H``."""
    X = _as_values(X)
    W, F = _check_shapes(W, X, F)
    return X @ _residual(W, X, F).T


def regularized_objective(W, X, F, lam: float) -> float:
    return smooth_loss(W, X, F) + lam * l20_norm(W)


def hard_threshold_step(W, G, L: float, lam: float) -> np.ndarray:
    """Proximal gradient step for the row-count penalty.

    Row ``i`` becomes ``v = w_i - g_i / L`` if ``||v||^2 > 2 lam / L`` and
    exactly zero otherwise (ties are zeroed).
    """
    V = np.asarray(W, dtype=np.float64) - np.asarray(G, dtype=np.float64) / L
    keep = np.sum(V * V, axis=1) > 2.0 * lam / L
    V[~keep] = 0.0
    return V


def default_lam0(lam: float, G, L0: float) -> float:
    G = np.asarray(G)
    top = float(np.max(np.sum(G * G, axis=1))) if G.size else 0.0
    return max(lam, 0.5 * top / L0)


def homotopy_levels(lam: float, lam0: float, rho: float) -> int:
    """Number of continuation levels run from ``lam0`` down to ``lam``."""
    if lam0 <= lam:
        return 1
    return max(1, math.ceil(math.log(lam / lam0) / math.log(rho)))


def amhiht_solve(X, F, W0=None, cfg: AmhihtConfig = AmhihtConfig()) -> AmhihtResult:
    """Homotopy iterative hard thresholding with L-tuning.

    At each level ``lam_k = lam0 * rho**k`` a hard-threshold step is taken
    and ``L`` is grown by ``gamma`` (capped at ``Lmax``) until the step
    satisfies the sufficient decrease test
    ``phi(W_k) - phi(W_k+1) >= eta/2 ||W_k - W_k+1||^2``. ``L`` carries
    over between levels and is never decreased. Levels continue while
    ``lam_k > lam``.

    If the test still fails at ``L = Lmax`` the step is rejected and the
    current ``W`` kept for that level. Hitting ``max_inner`` total steps
    returns the current iterate with ``status == "iteration-capped"``.

    Returns
    -------
    AmhihtResult
        ``W`` has literal zero rows; ``trace`` holds one record per accepted
        step with the level's ``lam`` and ``L``, objective values before and
        after, the squared step length and the support size.
    """
    X = _as_values(X)
    if W0 is None:
        W0 = np.zeros((X.shape[0], np.asarray(F).shape[0]))
    W, F = _check_shapes(W0, X, F)
    W = W.copy()

    G = smooth_gradient(W, X, F)
    lam0 = cfg.lam0 if cfg.lam0 is not None else default_lam0(cfg.lam, G, cfg.L0)
    n_levels = homotopy_levels(cfg.lam, lam0, cfg.rho)
    L = cfg.L0
    loss = smooth_loss(W, X, F)
    trace = []
    steps = 0
    status = "converged"

    lams = [lam0 * cfg.rho ** k for k in range(n_levels)]
    if cfg.final_level and lams[-1] > cfg.lam:
        lams.append(cfg.lam)

    for k, lam_k in enumerate(lams):
        for _ in range(cfg.inner_sweeps):
            if steps >= cfg.max_inner:
                status = "iteration-capped"
                break
            phi = loss + lam_k * l20_norm(W)
            while True:
                steps += 1
                W_new = hard_threshold_step(W, G, L, lam_k)
                loss_new = smooth_loss(W_new, X, F)
                phi_new = loss_new + lam_k * l20_norm(W_new)
                step_sq = float(np.sum((W - W_new) ** 2))
                if 0.0 < step_sq <= cfg.xtol ** 2 * max(1.0, float(np.sum(W * W))):
                    # Converged at this level; rounding noise must not grow L.
                    accepted = None
                    break
                if phi - phi_new >= 0.5 * cfg.eta * step_sq:
                    accepted = True
                    break
                if L >= cfg.Lmax:
                    accepted = False
                    break
                L = min(cfg.gamma * L, cfg.Lmax)
            if not accepted:
                break
            trace.append({
                "level": k, "lam": lam_k, "L": L, "phi_before": phi,
                "phi": phi_new, "step_sq": step_sq, "support": l20_norm(W_new),
            })
            unchanged = step_sq == 0.0
            W, loss = W_new, loss_new
            G = smooth_gradient(W, X, F)
            if unchanged:
                break
        if status == "iteration-capped":
            break

    return AmhihtResult(W=W, status=status, L=L, lam0=lam0, levels=n_levels,
                        steps=steps, trace=trace)
