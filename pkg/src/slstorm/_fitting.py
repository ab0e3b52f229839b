"""Damped Gauss-Newton least squares shared by the Gaussian fitters."""

from __future__ import annotations

import numpy as np


def levenberg(residual_jacobian, p0, max_iter=50, lam0=1e-3, factor=10.0, rel_tol=1e-12):
    """Minimize sum(r(p)^2) where residual_jacobian(p) -> (r, J).

    Levenberg-style damping on the normal equations: the damping factor
    warm-starts at lam0, divides by `factor` on an accepted step and
    multiplies by it on a rejected one. Returns (p, cost, ok); ok is False
    when no finite descent was ever achievable.
    """
    p = np.asarray(p0, dtype=np.float64).copy()
    r, jac = residual_jacobian(p)
    cost = float(r @ r)
    if not np.isfinite(cost):
        return p, np.inf, False
    lam = lam0
    ok = True
    for _ in range(max_iter):
        g = jac.T @ r
        h = jac.T @ jac
        damp = np.clip(np.diag(h), 1e-12, None)
        try:
            step = np.linalg.solve(h + lam * np.diag(damp), -g)
        except np.linalg.LinAlgError:
            lam *= factor
            continue
        p_new = p + step
        r_new, jac_new = residual_jacobian(p_new)
        cost_new = float(r_new @ r_new)
        if np.isfinite(cost_new) and cost_new <= cost:
            improved = cost - cost_new
            p, r, jac, cost = p_new, r_new, jac_new, cost_new
            lam = max(lam / factor, 1e-12)
            if improved <= rel_tol * max(cost, 1e-300):
                break
        else:
            lam *= factor
            if lam > 1e12:
                ok = np.isfinite(cost)
                break
    return p, cost, ok and np.isfinite(p).all()
