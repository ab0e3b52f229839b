"""Robust PCA by inexact augmented Lagrange multipliers.

Splits a flattened stack M into a low-rank part L and a sparse part S by
minimizing  ||L||_* + lambda * ||S||_1  subject to  L + S = M.  Serves as
the convex reference decomposition: slower than the learned network but
with a convergence guarantee, so its output anchors correctness tests.
"""

from __future__ import annotations

from dataclasses import dataclass
import numpy as np

from .core import FlatMatrix
from .linalg import soft_threshold, thin_svd_small_k, _svt_from_svd


@dataclass(frozen=True)
class RpcaConfig:
    lam: float | None = None      # None: 1/sqrt(max(k, m*n)), resolved per input
    tol: float = 1e-7             # relative residual ||M-L-S||_F / ||M||_F
    max_iter: int = 500
    rho: float = 1.5              # penalty growth factor

    def __post_init__(self):
        if self.lam is not None and not self.lam > 0:
            raise ValueError(f"lam must be > 0, got {self.lam}")
        if not 0 < self.tol < 1:
            raise ValueError(f"tol must be in (0, 1), got {self.tol}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be >= 1, got {self.max_iter}")
        if not self.rho > 1:
            raise ValueError(f"rho must be > 1, got {self.rho}")


@dataclass(frozen=True, eq=False)
class RpcaResult:
    L: object                     # FlatMatrix or ndarray, matching the input
    S: object
    iterations: int
    residual: float
    converged: bool
    objective_history: tuple      # ||L||_* + lam * ||S||_1 per iteration


def rpca_ialm(m, cfg=None):
    """Inexact-ALM solver; alternates a soft-threshold S-step, an SVT L-step
    and a dual ascent, with the penalty growing by cfg.rho each round.

    On non-convergence within max_iter the final iterate is returned with
    converged=False.
    """
    cfg = cfg or RpcaConfig()
    is_flat = isinstance(m, FlatMatrix)
    a = np.asarray(m.data if is_flat else m, dtype=np.float64)
    if a.ndim != 2:
        raise ValueError(f"expected a 2D matrix, got shape {a.shape}")
    if not np.isfinite(a).all():
        raise ValueError("matrix contains non-finite entries")
    k, mn = a.shape
    lam = cfg.lam if cfg.lam is not None else 1.0 / np.sqrt(max(k, mn))

    def wrap(arr):
        if is_flat:
            return FlatMatrix(arr, m.shape, bit_depth=m.bit_depth, pixel_size_nm=m.pixel_size_nm)
        return arr

    norm_fro = np.linalg.norm(a)
    if norm_fro == 0.0:
        z = np.zeros_like(a)
        return RpcaResult(wrap(z), wrap(z.copy()), 1, 0.0, True, (0.0,))

    sigma_max = float(thin_svd_small_k(a).sigma[0])
    dual_norm = max(sigma_max, np.abs(a).max() / lam)
    y = a / dual_norm
    mu_pen = 1.25 / sigma_max
    mu_cap = mu_pen * 1e9
    low = np.zeros_like(a)
    sparse = np.zeros_like(a)
    history = []
    iterations = 0
    residual = 1.0
    converged = False
    for _ in range(cfg.max_iter):
        iterations += 1
        sparse = soft_threshold(a - low + y / mu_pen, lam / mu_pen)
        svd = thin_svd_small_k(a - sparse + y / mu_pen)
        low = _svt_from_svd(svd, 1.0 / mu_pen)
        nuclear = np.maximum(svd.sigma - 1.0 / mu_pen, 0.0).sum()
        history.append(float(nuclear + lam * np.abs(sparse).sum()))
        gap = a - low - sparse
        y = y + mu_pen * gap
        mu_pen = min(mu_pen * cfg.rho, mu_cap)
        residual = float(np.linalg.norm(gap) / norm_fro)
        if residual < cfg.tol:
            converged = True
            break
    return RpcaResult(wrap(low), wrap(sparse), iterations, residual, converged, tuple(history))
