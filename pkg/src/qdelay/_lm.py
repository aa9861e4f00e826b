"""Small damped Gauss-Newton (Levenberg-Marquardt) solver with numeric Jacobians."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class LMOutcome:
    x: np.ndarray
    residuals: np.ndarray
    jacobian: np.ndarray
    n_iter: int
    converged: bool

    @property
    def cost(self) -> float:
        return float(self.residuals @ self.residuals)

    def covariance(self) -> np.ndarray:
        """Linearized parameter covariance s^2 (J^T J)^-1; approximate."""
        m, n = self.jacobian.shape
        dof = max(m - n, 1)
        s2 = self.cost / dof
        jtj = self.jacobian.T @ self.jacobian
        try:
            return s2 * np.linalg.inv(jtj)
        except np.linalg.LinAlgError:
            return np.full((n, n), np.inf)

    def stderr(self) -> np.ndarray:
        cov = self.covariance()
        d = np.diag(cov)
        with np.errstate(invalid="ignore"):
            return np.where(d >= 0, np.sqrt(np.abs(d)), np.inf)


def numeric_jacobian(fun, x, f0=None, rel_step=1e-6):
    """Central-difference Jacobian with step ``rel_step * max(|x_i|, 1)``.

    Callers work in normalized coordinates, so unit scale is the natural floor.
    """
    x = np.asarray(x, dtype=float)
    cols = []
    for i in range(x.size):
        h = rel_step * max(abs(x[i]), 1.0)
        xp = x.copy()
        xm = x.copy()
        xp[i] += h
        xm[i] -= h
        cols.append((fun(xp) - fun(xm)) / (2.0 * h))
    return np.column_stack(cols) if cols else np.zeros((0, 0))


def levenberg_marquardt(fun, x0, *, max_iter=200, xtol=1e-12, ftol=1e-14,
                        rel_step=1e-6, lam0=1e-3) -> LMOutcome:
    """Minimize ||fun(x)||^2.

    ``fun`` returns a real residual vector. Damping uses Marquardt's diagonal
    scaling so the iteration is invariant to parameter units.
    """
    x = np.asarray(x0, dtype=float).copy()
    r = np.asarray(fun(x), dtype=float)
    cost = float(r @ r)
    lam = lam0
    J = numeric_jacobian(fun, x, r, rel_step)
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        g = J.T @ r
        A = J.T @ J
        diag = np.diag(A).copy()
        diag[diag <= 0] = 1.0
        improved = False
        while lam < 1e16:
            try:
                step = np.linalg.solve(A + lam * np.diag(diag), -g)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            x_new = x + step
            r_new = np.asarray(fun(x_new), dtype=float)
            cost_new = float(r_new @ r_new)
            if np.isfinite(cost_new) and cost_new <= cost:
                improved = True
                break
            lam *= 10.0
        if not improved:
            # no downhill step at any damping: at a (numerical) minimum
            converged = np.isfinite(cost)
            break
        small_step = np.linalg.norm(step) <= xtol * (np.linalg.norm(x) + xtol)
        small_drop = (cost - cost_new) <= ftol * max(cost, 1e-300)
        x, r, cost = x_new, r_new, cost_new
        lam = max(lam / 10.0, 1e-12)
        J = numeric_jacobian(fun, x, r, rel_step)
        if small_step or small_drop or cost == 0.0:
            converged = True
            break
    return LMOutcome(x, r, J, it, converged)
