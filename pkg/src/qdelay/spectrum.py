"""
Frequency-domain response of the atom-mirror system.

Closed-form reflection coefficients (weak probe, saturating probe, two-tone),
the envelope transfer function, analytic and numerical group delay, 2D sweeps
and the feature finders (singular pump, ATS threshold, zero-delay boundary).
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np
from scipy.signal import savgol_filter

from .errors import (CoarseGridError, InsufficientSamplesError, SingularError,
                     ValidationError)
from .params import (AtomParams, EffectiveRates, control_coupling, dbm_to_rabi,
                     effective_rates)

RatesLike = Union[AtomParams, EffectiveRates]


def _rates(obj: RatesLike) -> EffectiveRates:
    if isinstance(obj, EffectiveRates):
        return obj
    return EffectiveRates.of(obj)


# ---------------------------------------------------------------------------
# Data containers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ComplexSpectrum:
    """Complex reflection sampled on strictly increasing detunings (rad/s)."""

    detunings: np.ndarray
    values: np.ndarray
    phase_unwrapped: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        d = np.asarray(self.detunings, dtype=float)
        v = np.asarray(self.values, dtype=complex)
        if d.ndim != 1 or d.shape != v.shape:
            raise ValidationError("detunings and values must be 1-D of equal length")
        if d.size > 1 and np.any(np.diff(d) <= 0):
            raise ValidationError("detunings must be strictly increasing")
        object.__setattr__(self, "detunings", d)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "phase_unwrapped", np.unwrap(np.angle(v)))

    def __len__(self):
        return self.detunings.size


@dataclass(frozen=True)
class DelayProfile:
    detunings: np.ndarray
    tau_d: np.ndarray  # seconds; 0.0 where singular_mask is set
    singular_mask: np.ndarray


@dataclass(frozen=True)
class SweepMap:
    """Row-major grid: one row per ``axis1`` value, one column per detuning."""

    axis1: np.ndarray
    axis1_kind: str  # "control_dbm" or "omega_10"
    detunings: np.ndarray
    r: np.ndarray
    tau_d: np.ndarray
    singular_mask: np.ndarray
    atoms: tuple = ()


# ---------------------------------------------------------------------------
# Reflection coefficients
# ---------------------------------------------------------------------------

def reflection_weak(atom: RatesLike, delta):
    """r = 1 - Gamma/(gamma + i delta); accepts AtomParams or EffectiveRates."""
    rt = _rates(atom)
    return 1.0 - rt.gamma_r_eff / (rt.gamma_eff + 1j * np.asarray(delta, dtype=float))


def reflection_powered(atom: AtomParams, delta, omega_p):
    """Steady-state reflection of a two-level atom driven at probe Rabi ``omega_p``.

    Saturates towards r = 1 as ``omega_p`` grows.
    """
    G, g = atom.gamma_r_10, atom.gamma_10
    delta = np.asarray(delta, dtype=float)
    omega_p = np.asarray(omega_p, dtype=float)
    if G == 0:
        return np.ones(np.broadcast(delta, omega_p).shape, dtype=complex) + 0.0
    x = delta / g
    # multiplied through by G*g so a vanishing G cannot overflow
    return 1.0 - G * G * (1.0 - 1j * x) / (G * g * (1.0 + x * x) + omega_p ** 2)


def _transfer(G10, g10, g20, delta_p, omega_c, delta_c, omega_e):
    s = 1j * np.asarray(omega_e, dtype=float)
    dp = np.asarray(delta_p, dtype=float)
    inner = s + 1j * dp + g10
    if omega_c != 0:
        inner = inner + omega_c ** 2 / (4.0 * (s + 1j * (dp + delta_c) + g20))
    return 1.0 - G10 / inner


def transfer_function(atom: AtomParams, delta_p, omega_c=0.0, delta_c=0.0,
                      omega_e=0.0):
    """Envelope transfer function T(i omega_e) of the weakly probed atom.

    ``omega_e`` is the envelope frequency measured from the probe carrier.
    T(0) is the two-tone reflection coefficient.
    """
    if omega_c != 0 and atom.gamma_20 is None:
        raise ValidationError("control pump needs gamma_20")
    return _transfer(atom.gamma_r_10, atom.gamma_10, atom.gamma_20, delta_p,
                     omega_c, delta_c, omega_e)


def reflection_two_tone(atom: AtomParams, delta_p, omega_c=0.0, delta_c=0.0):
    """Weak-probe reflection with a control tone on |1>-|2>."""
    return transfer_function(atom, delta_p, omega_c, delta_c, 0.0)


# ---------------------------------------------------------------------------
# Group delay
# ---------------------------------------------------------------------------

def group_delay_analytic(rates: RatesLike, delta):
    """Group delay (s) of the effective two-level reflection at detuning ``delta``.

    Positive for slow light, negative for fast light. Raises
    :class:`SingularError` where Gamma/2 == Gamma_n and delta == 0.
    """
    rt = _rates(rates)
    G, g, Gn = rt.gamma_r_eff, rt.gamma_eff, rt.gamma_n_eff
    d = np.asarray(delta, dtype=float)
    excess = G / 2.0 - Gn
    denom = excess ** 2 + d ** 2
    if np.any(denom <= (1e-12 * g) ** 2):
        raise SingularError("Gamma/2 == Gamma_n on resonance: delay undefined")
    tau = (G / g) / (1.0 + (d / g) ** 2) * (excess + d ** 2 / g) / denom
    return float(tau) if tau.ndim == 0 else tau


def zero_delay_boundary(rates: RatesLike):
    """Detunings (-d, +d) where the delay changes sign, or None.

    Only exists in the fast-light regime Gamma_n > Gamma/2.
    """
    rt = _rates(rates)
    deficit = rt.gamma_n_eff - rt.gamma_r_eff / 2.0
    if deficit <= 0:
        return None
    d = math.sqrt(rt.gamma_eff * deficit)
    return (-d, d)


def group_delay_numeric(spectrum: ComplexSpectrum, *, linewidth: Optional[float] = None,
                        allow_coarse: bool = False, smooth_window: Optional[int] = None,
                        abs_floor: float = 1e-12) -> DelayProfile:
    """Group delay as minus the derivative of the unwrapped reflection phase.

    Central differences inside the grid, one-sided at the ends. When
    ``linewidth`` is given, grids coarser than ``linewidth/10`` within three
    linewidths of the deepest point are rejected unless ``allow_coarse``.
    Samples with ``|r| <= abs_floor`` or next to a phase jump larger than
    pi/2 are masked as singular and carry tau_d = 0.
    """
    n = len(spectrum)
    if n < 3:
        raise InsufficientSamplesError(f"need >= 3 samples, got {n}")
    d = spectrum.detunings
    phase = spectrum.phase_unwrapped
    mag = np.abs(spectrum.values)

    if linewidth is not None and not allow_coarse:
        center = d[np.argmin(mag)]
        near = np.abs(d - center) <= 3.0 * linewidth
        steps = np.diff(d)
        near_steps = steps[near[:-1] | near[1:]]
        if near_steps.size and near_steps.max() > linewidth / 10.0:
            raise CoarseGridError(
                f"grid step {near_steps.max():.4g} rad/s exceeds linewidth/10 "
                f"near resonance; pass allow_coarse=True to override")

    if smooth_window:
        w = int(smooth_window) | 1
        phase = savgol_filter(phase, w, 2)

    tau = -np.gradient(phase, d, edge_order=1)

    singular = mag <= abs_floor
    jumps = np.abs(np.diff(phase)) > math.pi / 2
    if np.any(jumps):
        if not allow_coarse and linewidth is not None:
            raise CoarseGridError("phase steps by more than pi/2 between samples")
        singular[:-1] |= jumps
        singular[1:] |= jumps
    tau = np.where(singular, 0.0, tau)
    return DelayProfile(d.copy(), tau, singular)


def delay_profile_analytic(rates: RatesLike, detunings) -> DelayProfile:
    """Analytic delay on a grid, masking singular points instead of raising."""
    d = np.asarray(detunings, dtype=float)
    tau = np.zeros_like(d)
    mask = np.zeros(d.shape, dtype=bool)
    for i, x in enumerate(d):
        try:
            tau[i] = group_delay_analytic(rates, x)
        except SingularError:
            mask[i] = True
    return DelayProfile(d, tau, mask)


# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------

def default_workers() -> int:
    env = os.environ.get("QDELAY_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return 1


def _sweep_row(atom, detunings, omega_c, delta_c):
    r = reflection_two_tone(atom, detunings, omega_c, delta_c)
    prof = group_delay_numeric(ComplexSpectrum(detunings, r), allow_coarse=True)
    return r, prof.tau_d, prof.singular_mask


def sweep_map(atom: Optional[AtomParams], detunings: Sequence[float], *,
              control_dbm: Optional[Sequence[float]] = None,
              atoms: Optional[Sequence[AtomParams]] = None,
              delta_c: float = 0.0, attenuation_db: float = 0.0,
              workers: Optional[int] = None) -> SweepMap:
    """Reflection and numerical group delay over a 2D grid.

    Exactly one of ``control_dbm`` (control power in dBm, converted with
    k21 = sqrt(2) k10 after ``attenuation_db``) or ``atoms`` (one AtomParams
    per row, e.g. a user table of omega_10 dependent rates) selects axis 1.
    Detunings are measured from each row's omega_10. Rows are independent;
    parallel evaluation returns the same grid as a serial run.
    """
    d = np.asarray(detunings, dtype=float)
    if d.size == 0 or np.any(np.diff(d) <= 0):
        raise ValidationError("detunings must be non-empty and increasing")
    if (control_dbm is None) == (atoms is None):
        raise ValidationError("give exactly one of control_dbm or atoms")

    if control_dbm is not None:
        axis = np.asarray(control_dbm, dtype=float)
        kind = "control_dbm"
        if axis.size == 0 or (axis.size > 1 and np.any(np.diff(axis) <= 0)):
            raise ValidationError("control_dbm must be non-empty and increasing")
        if np.all(np.isneginf(axis)):
            omegas = np.zeros_like(axis)
        else:
            omegas = np.atleast_1d(dbm_to_rabi(axis, control_coupling(atom), attenuation_db))
        jobs = [(atom, d, float(oc), delta_c) for oc in omegas]
        row_atoms = (atom,) * axis.size
    else:
        row_atoms = tuple(atoms)
        if not row_atoms:
            raise ValidationError("atoms must be non-empty")
        axis = np.array([a.omega_10 for a in row_atoms])
        kind = "omega_10"
        if axis.size > 1 and np.any(np.diff(axis) <= 0):
            raise ValidationError("atom rows must have increasing omega_10")
        jobs = [(a, d, 0.0, 0.0) for a in row_atoms]

    workers = default_workers() if workers is None else max(1, int(workers))
    if workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            rows = list(ex.map(lambda j: _sweep_row(*j), jobs))
    else:
        rows = [_sweep_row(*j) for j in jobs]

    r = np.array([row[0] for row in rows])
    tau = np.array([row[1] for row in rows])
    mask = np.array([row[2] for row in rows])
    return SweepMap(axis, kind, d, r, tau, mask, row_atoms)


def effective_two_level_reflection(atom: AtomParams, delta_p, omega_c):
    """Weak-probe reflection using the control-pump effective rates."""
    return reflection_weak(effective_rates(atom, omega_c), delta_p)
