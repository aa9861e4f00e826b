"""
Parameter extraction from reflection data.

All fitters stack complex residuals as (real, imag) pairs and minimize them
with a damped Gauss-Newton iteration using central-difference Jacobians.
Reported standard errors come from the linearized covariance at the optimum
and are approximate.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np

from ._lm import levenberg_marquardt
from .errors import (DegenerateError, InsufficientSamplesError, NotConvergedError,
                     UnderdeterminedError, ValidationError)
from .params import (CONTROL_COUPLING_RATIO, TWO_PI, AtomParams, dbm_to_watts)
from .spectrum import ComplexSpectrum, _transfer


@dataclass(frozen=True)
class FitResult:
    params: Dict[str, float]
    stderr: Dict[str, float]
    residual_norm: float
    n_iter: int
    converged: bool
    extra: Dict[str, object] = field(default_factory=dict)

    def __getitem__(self, name):
        return self.params[name]

    def as_dict(self) -> dict:
        return {
            "converged": self.converged,
            "n_iter": self.n_iter,
            "residual_norm": self.residual_norm,
            "params": [
                {"parameter": k, "value": v, "stderr": self.stderr.get(k)}
                for k, v in self.params.items()
            ],
        }


def _stack(z):
    z = np.asarray(z, dtype=complex).ravel()
    return np.concatenate([z.real, z.imag])


# ---------------------------------------------------------------------------
# Circle fit
# ---------------------------------------------------------------------------

def _algebraic_circle(x, y):
    """Pratt-constrained algebraic circle fit on normalized coordinates.

    Solves the generalized eigenproblem M a = eta B a for the coefficients of
    a(x^2+y^2) + b x + c y + d = 0 and keeps the smallest non-negative eta.
    """
    z = x * x + y * y
    D = np.column_stack([z, x, y, np.ones_like(x)])
    M = D.T @ D / x.size
    B = np.array([[0, 0, 0, -2.0],
                  [0, 1.0, 0, 0],
                  [0, 0, 1.0, 0],
                  [-2.0, 0, 0, 0]])
    # B is invertible, so solve B^-1 M a = eta a
    vals, vecs = np.linalg.eig(np.linalg.solve(B, M))
    vals = vals.real
    vecs = vecs.real
    order = np.argsort(vals)
    a = None
    for k in order:
        v = vecs[:, k]
        if vals[k] >= -1e-12 * max(1.0, abs(vals).max()) and v @ B @ v > 0:
            a = v
            break
    if a is None:
        raise DegenerateError("no admissible circle solution")
    A, b, c, d = a
    if abs(A) < 1e-14:
        raise DegenerateError("points are collinear")
    xc, yc = -b / (2 * A), -c / (2 * A)
    R = math.sqrt(max(b * b + c * c - 4 * A * d, 0.0)) / (2 * abs(A))
    return xc, yc, R


def circle_fit(points, *, max_iter: int = 200) -> FitResult:
    """Fit a circle to complex IQ samples.

    Algebraic (Pratt) estimate followed by geometric least-squares
    refinement. Returns ``center_re``, ``center_im``, ``radius`` and
    ``diameter``.
    """
    pts = np.asarray(points, dtype=complex).ravel()
    if pts.size < 5:
        raise InsufficientSamplesError(f"circle fit needs >= 5 points, got {pts.size}")
    if np.unique(np.round(pts, 14)).size < 3:
        raise DegenerateError("fewer than three distinct points")
    shift = pts.mean()
    w = pts - shift
    scale = math.sqrt(np.mean(np.abs(w) ** 2))
    if scale == 0:
        raise DegenerateError("all points coincide")
    w = w / scale
    sv = np.linalg.svd(np.column_stack([w.real, w.imag]), compute_uv=False)
    if sv[-1] <= 1e-9 * sv[0]:
        raise DegenerateError("points are collinear")

    xc, yc, R = _algebraic_circle(w.real, w.imag)

    def resid(p):
        return np.abs(w - complex(p[0], p[1])) - p[2]

    out = levenberg_marquardt(resid, [xc, yc, R], max_iter=max_iter)
    if not out.converged:
        raise NotConvergedError("geometric circle refinement did not converge")
    cx, cy, rad = out.x
    err = out.stderr() * scale
    center = complex(cx, cy) * scale + shift
    radius = abs(rad) * scale
    return FitResult(
        params={"center_re": center.real, "center_im": center.imag,
                "radius": radius, "diameter": 2 * radius},
        stderr={"center_re": err[0], "center_im": err[1], "radius": err[2],
                "diameter": 2 * err[2]},
        residual_norm=float(np.linalg.norm(out.residuals) * scale),
        n_iter=out.n_iter,
        converged=True,
        extra={"center": center},
    )


# ---------------------------------------------------------------------------
# Weak-probe spectrum
# ---------------------------------------------------------------------------

def remove_linear_phase(spectrum: ComplexSpectrum, edge_fraction: float = 0.1) -> ComplexSpectrum:
    """Strip a cable-delay-like linear phase estimated from the spectrum edges.

    The slope is the mean of the two edge slopes, so a resonance that winds
    the phase by 2 pi between the edges does not bias it.
    """
    n = len(spectrum)
    k = max(2, int(edge_fraction * n))
    d, ph = spectrum.detunings, spectrum.phase_unwrapped
    lo, hi = slice(0, k), slice(n - k, n)
    slope = 0.5 * (np.polyfit(d[lo], ph[lo], 1)[0] + np.polyfit(d[hi], ph[hi], 1)[0])
    edges = np.r_[0:k, n - k:n]
    icpt = np.angle(np.mean(np.exp(1j * (ph[edges] - slope * d[edges]))))
    rot = np.exp(-1j * (slope * d + icpt))
    return ComplexSpectrum(d, spectrum.values * rot)


def _weak_initial_guess(d, r):
    far = 0.5 * (r[0] + r[-1])
    dev = np.abs(r - far)
    if dev.max() <= 1e-9 * max(abs(far), 1.0):
        raise DegenerateError("flat spectrum: the atom does not couple")
    i0 = int(np.argmax(dev))
    # |1 - r|^2 = Gamma^2/(gamma^2 + delta^2) falls to half at |delta| = gamma
    half = dev ** 2 >= 0.5 * dev[i0] ** 2
    idx = np.nonzero(half)[0]
    width = max(d[idx[-1]] - d[idx[0]], d[1] - d[0])
    g0 = 0.5 * width
    G0 = dev[i0] * g0
    return np.array([d[i0], G0, g0])


def fit_weak_spectrum(spectrum: ComplexSpectrum, *, omega_ref: float = 0.0,
                      remove_phase_slope: bool = False,
                      max_iter: int = 200) -> FitResult:
    """Fit ``r = 1 - Gamma/(gamma + i(w - w10))`` to a weak-probe spectrum.

    The spectrum axis is read as ``w - omega_ref`` (rad/s); the fitted
    ``omega_10`` includes ``omega_ref``. Rates are returned in rad/s.
    """
    if len(spectrum) < 5:
        raise InsufficientSamplesError("need >= 5 spectrum points")
    if remove_phase_slope:
        spectrum = remove_linear_phase(spectrum)
    d = spectrum.detunings
    r = spectrum.values
    x0 = _weak_initial_guess(d, r)
    scale = np.array([max(abs(x0[1]), abs(x0[2])), x0[1], x0[2]])
    if remove_phase_slope:
        # leftover delay and phase offset are refined with the resonance
        span = d[-1] - d[0]
        x0 = np.r_[x0, 0.0, 0.0]
        scale = np.r_[scale, 1.0 / span, 1.0]

    def resid(p):
        q = p * scale
        c, G, g = q[:3]
        m = 1.0 - G / (g + 1j * (d - c))
        if q.size == 5:
            m = m * np.exp(-1j * (q[3] * d + q[4]))
        return _stack(m - r)

    out = levenberg_marquardt(resid, x0 / scale, max_iter=max_iter)
    if not out.converged:
        raise NotConvergedError(f"weak-spectrum fit did not converge in {max_iter} iterations")
    c, G, g = (out.x * scale)[:3]
    err = out.stderr() * np.abs(scale)
    g = abs(g)
    if G <= 0 or not np.isfinite(err).all():
        raise DegenerateError("fit found no coupled resonance")
    span = d[-1] - d[0]
    if span < 4.0 * g:
        warnings.warn(f"spectrum spans {span / g:.2f} linewidths (< 4); rates poorly constrained")
    cov = out.covariance() * np.outer(scale, scale)
    # gamma_n = gamma - Gamma/2
    gn_err = math.sqrt(max(cov[2, 2] + cov[1, 1] / 4.0 - cov[1, 2], 0.0))
    return FitResult(
        params={"omega_10": omega_ref + c, "gamma_r_10": G, "gamma_10": g,
                "gamma_n_10": g - G / 2.0},
        stderr={"omega_10": err[0], "gamma_r_10": err[1], "gamma_10": err[2],
                "gamma_n_10": gn_err},
        residual_norm=float(np.linalg.norm(out.residuals)),
        n_iter=out.n_iter,
        converged=True,
    )


# ---------------------------------------------------------------------------
# Power dependence
# ---------------------------------------------------------------------------

def fit_power_dependence(p_dbm, r, gamma_r_10: float, gamma_10: float, *,
                         attenuation_db: Optional[float] = None,
                         k_10: Optional[float] = None,
                         max_iter: int = 200) -> FitResult:
    """Fit the resonant saturation curve for the probe coupling.

    Only ``k_10 * 10**(-attenuation_db/20)`` is identifiable; pin exactly one
    of ``attenuation_db`` or ``k_10`` and the other is fitted. Internally the
    fitted quantity is the dB offset ``x = 20 log10(2 pi k_10) - A`` so that
    ``Omega_p**2 = 10**((p_dbm + x - 30)/10)``.
    """
    p = np.asarray(p_dbm, dtype=float)
    r = np.asarray(r, dtype=complex)
    if p.shape != r.shape:
        raise ValidationError("p_dbm and r must have the same length")
    if (attenuation_db is None) == (k_10 is None):
        raise UnderdeterminedError(
            "k_10 and attenuation are only jointly identifiable: pin exactly one")
    if p.size < 6:
        raise InsufficientSamplesError("need >= 6 powers")
    G, g = gamma_r_10, gamma_10

    def model(x):
        omega_sq = 10.0 ** ((p + x - 30.0) / 10.0)
        return 1.0 - (G / g) / (1.0 + omega_sq / (G * g))

    # coarse scan over the knee position, then refine
    knee = 10.0 * np.log10(G * g) + 30.0 - p
    grid = np.linspace(knee.min() - 20.0, knee.max() + 20.0, 401)
    costs = [np.sum(np.abs(model(x) - r) ** 2) for x in grid]
    x0 = grid[int(np.argmin(costs))]

    def resid(v):
        return _stack(model(v[0]) - r)

    out = levenberg_marquardt(resid, [x0], max_iter=max_iter)
    if not out.converged:
        raise NotConvergedError("power-dependence fit did not converge")
    x = float(out.x[0])
    x_err = float(out.stderr()[0])
    ln10_20 = math.log(10.0) / 20.0
    if attenuation_db is not None:
        k = 10.0 ** ((x + attenuation_db) / 20.0) / TWO_PI
        params = {"k_10": k, "attenuation_db": float(attenuation_db)}
        # dk/k = ln(10)/20 dx
        stderr = {"k_10": k * ln10_20 * x_err if np.isfinite(x_err) else math.inf,
                  "attenuation_db": 0.0}
    else:
        A = 20.0 * math.log10(TWO_PI * k_10) - x
        params = {"k_10": float(k_10), "attenuation_db": A}
        stderr = {"k_10": 0.0, "attenuation_db": x_err}
    return FitResult(params, stderr, float(np.linalg.norm(out.residuals)),
                     out.n_iter, True, extra={"db_offset": x, "db_offset_stderr": x_err})


# ---------------------------------------------------------------------------
# Two-tone map
# ---------------------------------------------------------------------------

def fit_two_tone(pc_dbm, detunings, r_map, atom: AtomParams, *,
                 attenuation_db: float = 0.0, delta_c: float = 0.0,
                 gamma_20_guess: Optional[float] = None,
                 max_iter: int = 200) -> FitResult:
    """Fit the |0>-|2> decoherence from a two-tone reflection map.

    ``r_map[i, j]`` is the reflection at control power ``pc_dbm[i]`` and
    probe detuning ``detunings[j]`` (rad/s). The control Rabi frequency is
    ``2 pi sqrt(2) k_10 sqrt(P_c)``; Gamma_10, gamma_10 and k_10 come from
    ``atom`` and are held fixed.
    """
    pc = np.asarray(pc_dbm, dtype=float)
    d = np.asarray(detunings, dtype=float)
    R = np.asarray(r_map, dtype=complex)
    if R.shape != (pc.size, d.size):
        raise ValidationError(f"r_map shape {R.shape} != ({pc.size}, {d.size})")
    if atom.k_10 is None:
        raise ValidationError("atom needs k_10 to convert control power")
    omegas = TWO_PI * CONTROL_COUPLING_RATIO * atom.k_10 * np.sqrt(dbm_to_watts(pc, attenuation_db))
    if not np.any(omegas > 0):
        raise UnderdeterminedError("no control power in the map: gamma_20 unidentifiable")
    G10, g10 = atom.gamma_r_10, atom.gamma_10

    def model(g20):
        return np.array([_transfer(G10, g10, g20, d, oc, delta_c, 0.0) for oc in omegas])

    def cost(g20):
        return float(np.sum(np.abs(model(g20) - R) ** 2))

    if gamma_20_guess is None:
        grid = g10 * np.logspace(-1, 2, 121)
        costs = [cost(x) for x in grid]
        gamma_20_guess = grid[int(np.argmin(costs))]
    s = gamma_20_guess

    def resid(v):
        return _stack(model(v[0] * s) - R)

    out = levenberg_marquardt(resid, [1.0], max_iter=max_iter)
    if not out.converged:
        raise NotConvergedError("two-tone fit did not converge")
    J = out.jacobian
    if not np.any(J):
        raise UnderdeterminedError("map carries no gamma_20 information")
    g20 = float(out.x[0] * s)
    return FitResult({"gamma_20": g20}, {"gamma_20": float(out.stderr()[0] * s)},
                     float(np.linalg.norm(out.residuals)), out.n_iter, True)
