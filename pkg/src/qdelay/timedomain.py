"""
Pulse propagation through the atom-mirror system.

The three-level density matrix is integrated in the frame rotating with the
probe and control carriers; the reflected envelope follows from the
input-output relation ``out = in + 2i Gamma_10 rho_10``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicSpline

from ._lm import levenberg_marquardt
from .errors import (BadGridError, DomainError, FitDivergedError, InvalidStateError,
                     LengthMismatchError, ToleranceNotMetError, ValidationError)
from .params import AtomParams, DriveSpec, effective_rates
from .spectrum import group_delay_analytic, reflection_two_tone

LOW_CONFIDENCE_RATIO = 0.1


@dataclass(frozen=True)
class PulseTrace:
    """Uniformly sampled complex envelope in Rabi-frequency units (rad/s)."""

    t0_offset: float
    dt: float
    samples: np.ndarray
    carrier_detuning: float = 0.0
    flags: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=complex)
        if not self.dt > 0:
            raise ValidationError(f"dt must be > 0, got {self.dt}")
        if s.ndim != 1 or s.size < 2:
            raise ValidationError("a trace needs at least two samples")
        if not np.all(np.isfinite(s)):
            raise ValidationError("trace samples must be finite")
        object.__setattr__(self, "samples", s)
        object.__setattr__(self, "flags", frozenset(self.flags))

    def __len__(self):
        return self.samples.size

    @property
    def times(self) -> np.ndarray:
        return self.t0_offset + self.dt * np.arange(self.samples.size)

    def replace_samples(self, samples, flags=None) -> "PulseTrace":
        return PulseTrace(self.t0_offset, self.dt, samples, self.carrier_detuning,
                          self.flags if flags is None else flags)


@dataclass(frozen=True)
class BlochState:
    rho_00: float
    rho_11: float
    rho_22: float
    rho_10: complex
    rho_20: complex
    rho_21: complex


@dataclass(frozen=True)
class BlochSeries:
    """Density-matrix lower triangle sampled on the probe grid."""

    t: np.ndarray
    rho_00: np.ndarray
    rho_11: np.ndarray
    rho_22: np.ndarray
    rho_10: np.ndarray
    rho_20: np.ndarray
    rho_21: np.ndarray

    def __len__(self):
        return self.t.size

    def __getitem__(self, i) -> BlochState:
        return BlochState(float(self.rho_00[i]), float(self.rho_11[i]),
                          float(self.rho_22[i]), complex(self.rho_10[i]),
                          complex(self.rho_20[i]), complex(self.rho_21[i]))

    @property
    def trace(self) -> np.ndarray:
        return self.rho_00 + self.rho_11 + self.rho_22


def gaussian_probe(amplitude: float, sigma: float, t0: float, span: float, dt: float,
                   carrier_detuning: float = 0.0, *,
                   allow_truncation: bool = False) -> PulseTrace:
    """Gaussian envelope ``amplitude * exp(-(t-t0)^2 / 2 sigma^2)`` on [0, span)."""
    if not sigma > 0:
        raise BadGridError("sigma must be > 0")
    if dt >= sigma / 10.0:
        raise BadGridError(f"dt={dt:.3g} s too coarse for sigma={sigma:.3g} s (need < sigma/10)")
    if not allow_truncation and t0 < 5.0 * sigma:
        raise BadGridError(f"t0={t0:.3g} s truncates the pulse (need t0 >= 5 sigma)")
    n = int(math.floor(span / dt + 1e-9))
    if n < 2:
        raise BadGridError("span shorter than two samples")
    t = dt * np.arange(n)
    samples = amplitude * np.exp(-((t - t0) ** 2) / (2.0 * sigma ** 2))
    return PulseTrace(0.0, dt, samples.astype(complex), carrier_detuning)


def _probe_interpolant(probe: PulseTrace):
    """Scalar cubic-spline evaluator for the probe envelope."""
    t = probe.times
    spline = CubicSpline(t, probe.samples)
    c = spline.c
    c0, c1, c2, c3 = (c[k].tolist() for k in range(4))
    t_first, dt, last = float(t[0]), probe.dt, t.size - 2

    def at(time):
        i = int((time - t_first) / dt)
        i = 0 if i < 0 else (last if i > last else i)
        x = time - (t_first + i * dt)
        return ((c0[i] * x + c1[i]) * x + c2[i]) * x + c3[i]

    return at


def _control_evaluator(control: Optional[DriveSpec]):
    if control is None or control.rabi == 0:
        return lambda t: 0.0
    if control.envelope is None:
        rabi = control.rabi
        return lambda t: rabi
    rabi, s2, tc = control.rabi, 2.0 * control.envelope.sigma ** 2, control.envelope.t0
    return lambda t: rabi * math.exp(-((t - tc) ** 2) / s2)


def integrate_bloch(atom: AtomParams, probe: PulseTrace, control: Optional[DriveSpec] = None,
                    delta_p: Optional[float] = None, delta_c: Optional[float] = None,
                    tol: float = 1e-9, *, atol: float = 1e-12, model: str = "full",
                    max_step: Optional[float] = None) -> BlochSeries:
    """Integrate the three-level master equation driven by ``probe`` and ``control``.

    ``model="full"`` evolves populations and coherences (nine real ODEs).
    ``model="reduced"`` keeps the atom in its ground-state population and
    only evolves the three coherences, which is accurate to first order in
    the probe. The atom starts in |0>. Output is sampled on the probe grid.

    Detunings default to ``probe.carrier_detuning`` and ``control.detuning``.
    """
    if model not in ("full", "reduced"):
        raise ValidationError(f"unknown model {model!r}")
    dp = probe.carrier_detuning if delta_p is None else float(delta_p)
    dc = (control.detuning if control is not None else 0.0) if delta_c is None else float(delta_c)
    needs_level2 = control is not None and control.rabi > 0
    if needs_level2 and atom.gamma_20 is None:
        raise DomainError("control drive needs a three-level atom (gamma_20)")

    G10, g10 = atom.gamma_r_10, atom.gamma_10
    G21 = atom.gamma_r_21
    g20 = atom.gamma_20 if atom.gamma_20 is not None else g10
    g21 = atom.gamma_21
    e1, e2 = -dp, -(dp + dc)
    omega_p = _probe_interpolant(probe)
    omega_c = _control_evaluator(control)

    # y = [p0, p1, p2, Re x, Im x, Re y, Im y, Re z, Im z]; x=rho10, y=rho20, z=rho21
    if model == "full":
        def rhs(t, s):
            p0, p1, p2 = s[0], s[1], s[2]
            x = complex(s[3], s[4])
            y = complex(s[5], s[6])
            z = complex(s[7], s[8])
            a = 0.5 * omega_p(t)
            c = 0.5 * omega_c(t)
            ac = a.conjugate()
            ax = (ac * x).imag
            cz = c * z.imag
            dp0 = -2.0 * ax + G10 * p1
            dp1 = 2.0 * ax - 2.0 * cz - G10 * p1 + G21 * p2
            dp2 = 2.0 * cz - G21 * p2
            dx = 1j * (a * (p0 - p1) + e1 * x + c * y) - g10 * x
            dy = 1j * (c * x + e2 * y - a * z) - g20 * y
            dz = 1j * (c * (p1 - p2) + (e2 - e1) * z - ac * y) - g21 * z
            return [dp0, dp1, dp2, dx.real, dx.imag, dy.real, dy.imag, dz.real, dz.imag]
    else:
        def rhs(t, s):
            x = complex(s[3], s[4])
            y = complex(s[5], s[6])
            z = complex(s[7], s[8])
            a = 0.5 * omega_p(t)
            c = 0.5 * omega_c(t)
            dx = 1j * (a + e1 * x + c * y) - g10 * x
            dy = 1j * (c * x + e2 * y - a * z) - g20 * y
            dz = 1j * ((e2 - e1) * z - a.conjugate() * y) - g21 * z
            return [0.0, 0.0, 0.0, dx.real, dx.imag, dy.real, dy.imag, dz.real, dz.imag]

    t = probe.times
    y0 = np.zeros(9)
    y0[0] = 1.0
    if max_step is None:
        # keep the stepper from striding over a pulse that starts near zero
        max_step = 20.0 * probe.dt
    sol = solve_ivp(rhs, (t[0], t[-1]), y0, method="RK45", t_eval=t, rtol=tol,
                    atol=atol, max_step=max_step)
    if sol.status != 0 or sol.y.shape[1] != t.size:
        raise ToleranceNotMetError(f"integrator failed: {sol.message}")

    Y = sol.y
    margin = max(tol, 10.0 * atol)
    pops = Y[:3]
    if np.any(pops < -margin) or np.any(pops > 1.0 + margin):
        raise InvalidStateError("population left [0, 1] beyond tolerance")
    return BlochSeries(t=t.copy(), rho_00=Y[0], rho_11=Y[1], rho_22=Y[2],
                       rho_10=Y[3] + 1j * Y[4], rho_20=Y[5] + 1j * Y[6],
                       rho_21=Y[7] + 1j * Y[8])


def input_output(atom: AtomParams, probe: PulseTrace, rho_10) -> PulseTrace:
    """Reflected envelope ``probe + 2i Gamma_10 rho_10`` on the probe grid."""
    if isinstance(rho_10, BlochSeries):
        rho_10 = rho_10.rho_10
    rho_10 = np.asarray(rho_10, dtype=complex)
    if rho_10.shape != probe.samples.shape:
        raise LengthMismatchError(
            f"rho_10 has {rho_10.size} samples, probe has {probe.samples.size}")
    return probe.replace_samples(probe.samples + 2j * atom.gamma_r_10 * rho_10,
                                 flags=frozenset())


def simulate_output(atom: AtomParams, probe: PulseTrace, control: Optional[DriveSpec] = None,
                    **kw) -> PulseTrace:
    """Convenience: integrate the Bloch equations and apply the input-output relation."""
    series = integrate_bloch(atom, probe, control, **kw)
    return input_output(atom, probe, series.rho_10)


def envelope_width(trace: PulseTrace) -> float:
    """Gaussian sigma equivalent of the |envelope|^2-weighted rms duration."""
    w = np.abs(trace.samples) ** 2
    total = w.sum()
    if total == 0:
        return 0.0
    t = trace.times
    mean = (w * t).sum() / total
    return math.sqrt(2.0 * (w * (t - mean) ** 2).sum() / total)


def narrowband_output(atom: AtomParams, probe: PulseTrace, omega_c: float = 0.0,
                      delta_p: Optional[float] = None, delta_c: float = 0.0) -> PulseTrace:
    """Narrowband approximation ``out(t) = r * in(t - tau_d)``.

    ``r`` is the exact two-tone reflection and ``tau_d`` the analytic group
    delay from the control-pump effective rates. The output carries the flag
    ``"broadband"`` when the pulse is shorter than 1/gamma.
    """
    dp = probe.carrier_detuning if delta_p is None else float(delta_p)
    rates = effective_rates(atom, omega_c)
    tau = group_delay_analytic(rates, dp)
    r = complex(reflection_two_tone(atom, dp, omega_c, delta_c))
    t = probe.times
    spline = CubicSpline(t, probe.samples)
    inside = (t - tau >= t[0]) & (t - tau <= t[-1])
    shifted = np.zeros_like(probe.samples)
    shifted[inside] = spline(t[inside] - tau)
    flags = set()
    if envelope_width(probe) < 1.0 / rates.gamma_eff:
        flags.add("broadband")
    return probe.replace_samples(r * shifted, flags=frozenset(flags))


# ---------------------------------------------------------------------------
# Delay extraction
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GaussianFit:
    amplitude: float
    center: float
    sigma: float
    offset: float
    residual_ratio: float


@dataclass(frozen=True)
class DelayEstimate:
    """Delay of ``output`` relative to ``reference`` in seconds.

    ``tau_d`` is the Gaussian-fit centre shift when both fits are good
    (``confidence == "ok"``). Otherwise the envelope is not a single lobe,
    ``confidence == "low"`` and ``tau_d`` falls back to the time between the
    two envelope maxima.
    """

    tau_d: float
    fit_shift: float
    peak_shift: float
    residual_ratio: float
    confidence: str
    reference_fit: GaussianFit
    output_fit: GaussianFit


def _peak_time(t, mag):
    i = int(np.argmax(mag))
    if 0 < i < mag.size - 1:
        y0, y1, y2 = mag[i - 1], mag[i], mag[i + 1]
        den = y0 - 2.0 * y1 + y2
        if den < 0:
            return t[i] + 0.5 * (y0 - y2) / den * (t[1] - t[0])
    return t[i]


def fit_gaussian_envelope(trace: PulseTrace) -> GaussianFit:
    """Fit ``A exp(-(t-t0)^2/2 sigma^2) + B`` to |envelope|."""
    t = trace.times
    mag = np.abs(trace.samples)
    peak = mag.max()
    if not peak > 0:
        raise FitDivergedError("envelope is identically zero")
    i = int(np.argmax(mag))
    above = np.nonzero(mag >= peak / 2.0)[0]
    fwhm = max((above[-1] - above[0]) * trace.dt, 2 * trace.dt)
    edge = max(1, int(0.05 * mag.size))
    offset = float(np.median(np.concatenate([mag[:edge], mag[-edge:]])))
    # work in units of the trace duration and peak height for conditioning
    tscale = t[-1] - t[0]
    tn = (t - t[0]) / tscale
    yn = mag / peak

    def resid(p):
        A, c, s, B = p
        return A * np.exp(-((tn - c) ** 2) / (2.0 * s * s)) + B - yn

    x0 = [1.0 - offset / peak, (t[i] - t[0]) / tscale, fwhm / 2.3548 / tscale, offset / peak]
    out = levenberg_marquardt(resid, x0, max_iter=200)
    A, c, s, B = out.x
    if not (out.converged and np.all(np.isfinite(out.x)) and abs(s) > 0):
        raise FitDivergedError("Gaussian envelope fit did not converge")
    ratio = float(np.linalg.norm(out.residuals) / np.linalg.norm(yn))
    return GaussianFit(A * peak, t[0] + c * tscale, abs(s) * tscale, B * peak, ratio)


def extract_delay(reference: PulseTrace, output: PulseTrace,
                  low_confidence_ratio: float = LOW_CONFIDENCE_RATIO) -> DelayEstimate:
    """Time shift between the envelope peaks of ``output`` and ``reference``."""
    ref_fit = fit_gaussian_envelope(reference)
    out_fit = fit_gaussian_envelope(output)
    fit_shift = out_fit.center - ref_fit.center
    peak_shift = (_peak_time(output.times, np.abs(output.samples))
                  - _peak_time(reference.times, np.abs(reference.samples)))
    ratio = max(ref_fit.residual_ratio, out_fit.residual_ratio)
    if ratio > low_confidence_ratio:
        return DelayEstimate(float(peak_shift), float(fit_shift), float(peak_shift),
                             ratio, "low", ref_fit, out_fit)
    return DelayEstimate(float(fit_shift), float(fit_shift), float(peak_shift),
                         ratio, "ok", ref_fit, out_fit)
