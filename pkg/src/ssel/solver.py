"""Alternating optimization of ``W``, ``F`` and ``S``.

Objective (with ``H`` the centering matrix)::

    1/2 ||(W^T X - F) H||_F^2 + alpha tr(F L_S F^T)
        + beta sum_ij s_ij log s_ij + lam ||W||_{2,0}

One coefficient ``alpha`` multiplies the trace term in the global objective
and in both the ``F`` and ``S`` subproblems.
"""
from __future__ import annotations

import json
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .dataset import _as_values
from .graph import (graph_entropy_penalty, laplacian, similarity_objective,
                    trace_term, update_similarity)
from .sparse_opt import (AmhihtConfig, amhiht_solve, l20_norm,
                         regularized_objective, row_support, smooth_loss)
from .spectral import (compute_aux, init_pseudo_labels, labels_objective,
                       update_pseudo_labels)


class NumericError(FloatingPointError):
    def __init__(self, message, iteration):
        super().__init__(f"iteration {iteration}: {message}")
        self.iteration = iteration


@dataclass(frozen=True)
class SolverConfig:
    """Hyper-parameters of one feature-selection run.

    ``amhiht`` supplies the W-step solver settings; its ``lam`` is replaced
    by this config's ``lam``. ``cold_start`` restarts every W-step from
    zero instead of the previous ``W``.
    """

    clusters: int
    alpha: float = 1.0
    beta: float = 1.0
    lam: float = 1e-2
    nu: float = 1e8
    tol: float = 1e-5
    max_outer: int = 20
    seed: int = 0
    f_inner: int = 1
    init_restarts: int = 10
    cold_start: bool = False
    amhiht: AmhihtConfig = field(default_factory=AmhihtConfig)

    def __post_init__(self):
        for name in ("alpha", "beta", "lam", "nu"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.tol < 0:
            raise ValueError("tol must be non-negative")
        if self.max_outer < 1 or self.f_inner < 1 or self.init_restarts < 1:
            raise ValueError("max_outer, f_inner and init_restarts must be >= 1")
        if self.clusters < 2:
            raise ValueError("need at least 2 clusters")

    def w_config(self) -> AmhihtConfig:
        opts = self.amhiht
        lam0 = opts.lam0 if opts.lam0 is None or opts.lam0 >= self.lam else None
        return replace(opts, lam=self.lam, lam0=lam0)

    def to_dict(self) -> dict:
        out = {k: getattr(self, k) for k in self.__dataclass_fields__ if k != "amhiht"}
        out["amhiht"] = {k: getattr(self.amhiht, k) for k in self.amhiht.__dataclass_fields__}
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "SolverConfig":
        data = dict(data)
        amhiht = data.pop("amhiht", None) or {}
        amhiht.setdefault("lam", data.get("lam", 1e-2))
        return cls(amhiht=AmhihtConfig(**amhiht), **data)


@dataclass
class SelectionResult:
    selected: list
    W: np.ndarray
    F: np.ndarray
    S: np.ndarray
    objective_trace: list
    converged: bool
    reason: str
    wall_time: list
    records: list = field(default_factory=list)

    @property
    def iterations(self) -> int:
        return len(self.objective_trace)

    def summary(self, cfg: SolverConfig) -> dict:
        return {
            "selected": list(self.selected),
            "lambda": cfg.lam,
            "alpha": cfg.alpha,
            "beta": cfg.beta,
            "converged": self.converged,
            "reason": self.reason,
            "iterations": self.iterations,
        }

    def trace_lines(self) -> str:
        return "".join(json.dumps(r, sort_keys=True) + "\n" for r in self.records)


def extract_selected(W) -> list:
    """Indices of the nonzero rows of ``W``, ascending."""
    return [int(i) for i in np.flatnonzero(row_support(W))]


def global_objective(W, F, S, X, cfg: SolverConfig) -> float:
    lap = laplacian(S)
    return (smooth_loss(W, X, F)
            + cfg.alpha * trace_term(F, lap)
            + cfg.beta * graph_entropy_penalty(S)
            + cfg.lam * l20_norm(W))


def subproblem_values(W, F, S, X, cfg: SolverConfig) -> dict:
    """Values of the three subproblem objectives at ``(W, F, S)``.

    ``w_step`` plus ``s_step`` equals the global objective; ``f_step`` is
    the unpenalized F objective ``1/2 ||(W^T X - F) H||^2 + alpha tr(F L F^T)``.
    """
    lap = laplacian(S)
    loss = smooth_loss(W, X, F)
    tr = trace_term(F, lap)
    return {
        "w_step": loss + cfg.lam * l20_norm(W),
        "f_step": loss + cfg.alpha * tr,
        "s_step": cfg.alpha * tr + cfg.beta * graph_entropy_penalty(S),
    }


def solve(X, cfg: SolverConfig) -> SelectionResult:
    """Select features by alternating W, F and S updates.

    ``W`` starts at zero, ``F`` from K-means, ``S`` from ``F``. Each outer
    iteration runs the homotopy hard-thresholding W-step, one
    multiplicative F-step and the closed-form S-step. Iteration stops when
    the relative change of the global objective falls below ``cfg.tol`` or
    after ``cfg.max_outer`` iterations.

    A W-step whose result is worse, at the target ``lam``, than the ``W`` it
    started from is discarded in favor of that ``W``.
    """
    values = _as_values(X)
    d, n = values.shape
    if cfg.clusters > n:
        raise ValueError(f"cannot form {cfg.clusters} clusters from {n} samples")

    w_cfg = cfg.w_config()
    W = np.zeros((d, cfg.clusters))
    F = init_pseudo_labels(values, cfg.clusters, cfg.seed, n_init=cfg.init_restarts)
    S = update_similarity(F, cfg.alpha, cfg.beta)

    trace, times, records = [], [], []
    prev = None
    converged, reason = False, "iteration-capped"

    for it in range(1, cfg.max_outer + 1):
        t0 = time.perf_counter()

        start = np.zeros_like(W) if cfg.cold_start else W
        res = amhiht_solve(values, F, start, w_cfg)
        phi_prev = regularized_objective(W, values, F, cfg.lam)
        phi_new = regularized_objective(res.W, values, F, cfg.lam)
        if phi_new <= phi_prev:
            W, phi_w = res.W, phi_new
        else:
            phi_w = phi_prev

        lap = laplacian(S)
        aux = compute_aux(W, values, lap, cfg.alpha)
        F = update_pseudo_labels(F, aux, cfg.nu, inner=cfg.f_inner)
        eq10 = labels_objective(F, aux, cfg.nu)

        s_before = similarity_objective(F, S, cfg.alpha, cfg.beta)
        S = update_similarity(F, cfg.alpha, cfg.beta)

        obj = global_objective(W, F, S, values, cfg)
        sub = subproblem_values(W, F, S, values, cfg)
        if not np.isfinite(obj):
            raise NumericError(f"objective is {obj}", it)
        elapsed = time.perf_counter() - t0
        trace.append(obj)
        times.append(elapsed)
        records.append({
            "iter": it,
            "objective": obj,
            "support_size": l20_norm(W),
            "eq7_value": sub["w_step"],
            "eq7_prev": phi_prev,
            "eq7_step": phi_w,
            "eq10_value": eq10,
            "eq15_value": sub["s_step"],
            "eq15_before": s_before,
            "w_status": res.status,
            "seconds": elapsed,
        })

        if prev is not None and abs(obj - prev) / max(1.0, abs(prev)) < cfg.tol:
            converged, reason = True, "tolerance"
            break
        prev = obj

    return SelectionResult(
        selected=extract_selected(W), W=W, F=F, S=S, objective_trace=trace,
        converged=converged, reason=reason, wall_time=times, records=records,
    )
