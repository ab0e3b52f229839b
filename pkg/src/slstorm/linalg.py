"""Small-k singular value decomposition and shrinkage operators.

The stacks handled here have very few rows (k frames, k <= 64) and very
many columns (m*n pixels), so the SVD goes through the k x k Gram matrix
X X^T: its eigenvectors are the left singular vectors and the right
singular vectors follow by one projection. The symmetric eigenproblem is
solved with a cyclic Jacobi sweep, which is exact to round-off at these
sizes and needs no external solver.
"""

from __future__ import annotations

from dataclasses import dataclass
import numpy as np

from .core import FlatMatrix

_EPS = float(np.finfo(np.float64).eps)
MAX_ROWS = 64


@dataclass(frozen=True, eq=False)
class ThinSVD:
    """X = u @ diag(sigma) @ vt with sigma descending and non-negative.

    Rows of vt corresponding to zero singular values are zero (they carry
    no information and would otherwise require dividing by ~0).
    """

    u: np.ndarray       # (k, k) orthonormal
    sigma: np.ndarray   # (k,) descending, >= 0
    vt: np.ndarray      # (k, m*n)

    def reconstruct(self):
        return (self.u * self.sigma) @ self.vt


def _jacobi_eigh(a, max_sweeps=64):
    """Eigendecomposition of a small symmetric matrix by cyclic Jacobi.

    Returns (eigenvalues descending, eigenvectors as columns).
    """
    a = np.array(a, dtype=np.float64)
    n = a.shape[0]
    v = np.eye(n)
    if n == 1:
        return a[0, :1].copy(), v
    fro = np.sqrt((a * a).sum())
    stop = n * _EPS * max(fro, 1e-300)
    for _ in range(max_sweeps):
        off = np.sqrt(2.0 * (np.tril(a, -1) ** 2).sum())
        if off <= stop:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= stop / n:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                if theta >= 0.0:
                    t = 1.0 / (theta + np.sqrt(theta * theta + 1.0))
                else:
                    t = 1.0 / (theta - np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                rp, rq = a[p, :].copy(), a[q, :].copy()
                a[p, :] = c * rp - s * rq
                a[q, :] = s * rp + c * rq
                cp, cq = a[:, p].copy(), a[:, q].copy()
                a[:, p] = c * cp - s * cq
                a[:, q] = s * cp + c * cq
                a[p, q] = 0.0
                a[q, p] = 0.0
                vp, vq = v[:, p].copy(), v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    w = np.diag(a).copy()
    order = np.argsort(-w, kind="stable")
    return w[order], v[:, order]


def _as_array(x):
    if isinstance(x, FlatMatrix):
        return np.asarray(x.data, dtype=np.float64)
    a = np.asarray(x, dtype=np.float64)
    if a.ndim != 2:
        raise ValueError(f"expected a 2D matrix, got shape {a.shape}")
    return a


def thin_svd_small_k(x):
    """Thin SVD of a wide matrix with few rows, via the Gram-matrix trick.

    Accepts a FlatMatrix or a plain 2D array. Gram eigenvalues below
    k * eps * sigma_max^2 are treated as exactly zero and their right
    singular vectors zeroed, to avoid dividing by vanishing sigmas.
    """
    a = _as_array(x)
    k = a.shape[0]
    if k > MAX_ROWS:
        raise ValueError(f"small-k SVD limited to {MAX_ROWS} rows, got {k}")
    if not np.isfinite(a).all():
        raise ValueError("matrix contains non-finite entries")
    gram = a @ a.T
    w, u = _jacobi_eigh(gram)
    w = np.maximum(w, 0.0)
    cutoff = k * _EPS * (w[0] if w.size else 0.0)
    sigma = np.zeros(k)
    vt = np.zeros((k, a.shape[1]))
    for i in range(k):
        if w[i] > cutoff and w[i] > 0.0:
            sigma[i] = np.sqrt(w[i])
            vt[i] = (u[:, i] @ a) / sigma[i]
    return ThinSVD(u=u, sigma=sigma, vt=vt)


def _svt_from_svd(svd, mu):
    shrunk = np.maximum(np.abs(svd.sigma) - mu, 0.0) * np.sign(svd.sigma)
    keep = shrunk > 0.0
    if not keep.any():
        return np.zeros((svd.u.shape[0], svd.vt.shape[1]))
    return (svd.u[:, keep] * shrunk[keep]) @ svd.vt[keep]


def svt(x, mu):
    """Singular value shrinkage: subtract mu from each singular value, clamp at 0.

    This is the proximal operator of the nuclear norm; the rank of the
    result never exceeds the rank of the input.
    """
    if mu < 0:
        raise ValueError(f"shrinkage threshold must be >= 0, got {mu}")
    svd = thin_svd_small_k(x)
    out = _svt_from_svd(svd, float(mu))
    if isinstance(x, FlatMatrix):
        return FlatMatrix(out, x.shape, bit_depth=x.bit_depth, pixel_size_nm=x.pixel_size_nm)
    return out


def soft_threshold(x, tau):
    """Elementwise sign(x) * max(|x| - tau, 0)."""
    if tau < 0:
        raise ValueError(f"threshold must be >= 0, got {tau}")
    a = np.asarray(x, dtype=np.float64)
    return np.sign(a) * np.maximum(np.abs(a) - tau, 0.0)


def nuclear_norm(x):
    """Sum of singular values."""
    return float(thin_svd_small_k(x).sigma.sum())
