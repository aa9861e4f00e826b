"""
Device parameters, unit conversion and control-pump effective rates.

Every rate and frequency stored here is angular (rad/s). Cyclic MHz and dBm
only appear at the boundary (``from_mhz``, ``dbm_to_rabi``, the config
loader in :mod:`qdelay.io`).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, fields
from typing import Optional

import numpy as np

from .errors import DomainError, NoSolutionError, ValidationError

TWO_PI = 2.0 * math.pi
MHZ = TWO_PI * 1e6  # rad/s per cyclic MHz

# probe -> control coupling ratio, k21 ~ sqrt(2) k10
CONTROL_COUPLING_RATIO = math.sqrt(2.0)

_CLOSURE_RTOL = 1e-9


def _close(a: float, b: float, scale: float) -> bool:
    return abs(a - b) <= _CLOSURE_RTOL * max(scale, 1e-300)


@dataclass(frozen=True)
class AtomParams:
    """Rates of one artificial atom, all in rad/s.

    Give any two of ``gamma_r_10``, ``gamma_10``, ``gamma_n_10``; the third
    follows from ``gamma_10 = gamma_r_10/2 + gamma_n_10``. The |0>-|2>
    decoherence obeys ``gamma_20 = gamma_r_21/2 + gamma_n_20`` in the same
    way, with ``gamma_r_21`` defaulting to ``2*gamma_r_10``. Two-level
    devices leave ``gamma_20`` and ``gamma_n_20`` unset.

    ``gamma_21`` defaults to ``(gamma_r_10 + gamma_r_21)/2``; it only enters
    the full three-level master equation at second order in the probe.
    """

    omega_10: float
    gamma_r_10: Optional[float] = None
    gamma_10: Optional[float] = None
    gamma_n_10: Optional[float] = None
    k_10: Optional[float] = None
    gamma_r_21: Optional[float] = None
    gamma_20: Optional[float] = None
    gamma_n_20: Optional[float] = None
    gamma_21: Optional[float] = None

    def __post_init__(self):
        set_ = lambda name, v: object.__setattr__(self, name, float(v))

        if not (math.isfinite(self.omega_10) and self.omega_10 > 0):
            raise ValidationError(f"omega_10 must be positive, got {self.omega_10}")

        G, g, Gn = self.gamma_r_10, self.gamma_10, self.gamma_n_10
        given = sum(v is not None for v in (G, g, Gn))
        if given < 2:
            raise ValidationError(
                "need two of gamma_r_10, gamma_10, gamma_n_10")
        if G is None:
            G = 2.0 * (g - Gn)
        elif g is None:
            g = G / 2.0 + Gn
        elif Gn is None:
            Gn = g - G / 2.0
        elif not _close(g, G / 2.0 + Gn, g):
            raise ValidationError(
                f"gamma_10={g} inconsistent with gamma_r_10/2 + gamma_n_10="
                f"{G / 2.0 + Gn}")
        else:
            Gn = g - G / 2.0
        set_("gamma_r_10", G)
        set_("gamma_10", g)
        set_("gamma_n_10", Gn)

        G21 = 2.0 * G if self.gamma_r_21 is None else self.gamma_r_21
        set_("gamma_r_21", G21)
        g20, Gn20 = self.gamma_20, self.gamma_n_20
        if g20 is not None and Gn20 is not None:
            if not _close(g20, G21 / 2.0 + Gn20, g20):
                raise ValidationError(
                    f"gamma_20={g20} inconsistent with gamma_r_21/2 + "
                    f"gamma_n_20={G21 / 2.0 + Gn20}")
        elif g20 is not None:
            Gn20 = g20 - G21 / 2.0
        elif Gn20 is not None:
            g20 = G21 / 2.0 + Gn20
        if g20 is not None:
            set_("gamma_20", g20)
            set_("gamma_n_20", Gn20)

        g21 = 0.5 * (G + G21) if self.gamma_21 is None else self.gamma_21
        set_("gamma_21", g21)
        if self.k_10 is not None:
            set_("k_10", self.k_10)

        for f in fields(self):
            v = getattr(self, f.name)
            if v is None:
                continue
            if not math.isfinite(v):
                raise ValidationError(f"{f.name} must be finite, got {v}")
            # closure subtraction may leave a rounding-sized negative
            if v < -_CLOSURE_RTOL * max(self.gamma_10, self.gamma_r_10, 1.0):
                raise ValidationError(f"{f.name} must be >= 0, got {v}")

    @classmethod
    def from_mhz(cls, omega_10_mhz, gamma_r_10_mhz=None, gamma_10_mhz=None,
                 gamma_n_10_mhz=None, k_10=None, gamma_r_21_mhz=None,
                 gamma_20_mhz=None, gamma_n_20_mhz=None, gamma_21_mhz=None):
        """Build from cyclic-MHz values (the units used in device files)."""
        conv = lambda v: None if v is None else v * MHZ
        return cls(
            omega_10=omega_10_mhz * MHZ,
            gamma_r_10=conv(gamma_r_10_mhz),
            gamma_10=conv(gamma_10_mhz),
            gamma_n_10=conv(gamma_n_10_mhz),
            k_10=k_10,
            gamma_r_21=conv(gamma_r_21_mhz),
            gamma_20=conv(gamma_20_mhz),
            gamma_n_20=conv(gamma_n_20_mhz),
            gamma_21=conv(gamma_21_mhz),
        )

    @property
    def is_three_level(self) -> bool:
        return self.gamma_20 is not None

    def with_rates(self, **changes) -> "AtomParams":
        """Copy with some rates replaced; derived partners are recomputed.

        Replacing ``gamma_20`` drops the stored ``gamma_n_20`` (and vice
        versa), likewise inside the |0>-|1> triple.
        """
        kw = {f.name: getattr(self, f.name) for f in fields(self)}
        triple = ("gamma_r_10", "gamma_10", "gamma_n_10")
        touched = [k for k in changes if k in triple]
        if touched:
            keep = [k for k in triple if k in changes]
            if len(keep) == 1:
                # keep gamma_r_10 unless it is the one being set
                other = "gamma_r_10" if keep[0] != "gamma_r_10" else "gamma_10"
                keep.append(other)
            for k in triple:
                if k not in keep:
                    kw[k] = None
        if "gamma_20" in changes and "gamma_n_20" not in changes:
            kw["gamma_n_20"] = None
        if "gamma_n_20" in changes and "gamma_20" not in changes:
            kw["gamma_20"] = None
        kw.update(changes)
        return AtomParams(**kw)


@dataclass(frozen=True)
class EffectiveRates:
    """Two-level rates (rad/s) seen by a weak probe under a control pump."""

    gamma_r_eff: float
    gamma_eff: float
    gamma_n_eff: float

    @classmethod
    def of(cls, atom: AtomParams) -> "EffectiveRates":
        return cls(atom.gamma_r_10, atom.gamma_10, atom.gamma_n_10)


@dataclass(frozen=True)
class Envelope:
    """Gaussian envelope exp(-(t - t0)^2 / (2 sigma^2)); seconds."""

    sigma: float
    t0: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValidationError(f"envelope sigma must be > 0, got {self.sigma}")

    def __call__(self, t):
        return np.exp(-((t - self.t0) ** 2) / (2.0 * self.sigma ** 2))


@dataclass(frozen=True)
class DriveSpec:
    """A probe or control tone: Rabi frequency and detuning in rad/s."""

    rabi: float
    detuning: float = 0.0
    envelope: Optional[Envelope] = None

    def __post_init__(self):
        if not self.rabi >= 0:
            raise ValidationError(f"rabi must be >= 0, got {self.rabi}")

    def amplitude(self, t):
        if self.envelope is None:
            return self.rabi
        return self.rabi * self.envelope(t)


@dataclass(frozen=True)
class LineCalibration:
    """Effective attenuation to the chip and gain after it, in dB."""

    attenuation_db: float
    gain_db: float

    def __post_init__(self):
        if not (math.isfinite(self.attenuation_db) and math.isfinite(self.gain_db)):
            raise ValidationError("attenuation and gain must be finite")


FREQ_DOMAIN_LINE = LineCalibration(attenuation_db=132.3, gain_db=60.6)
TIME_DOMAIN_LINE = LineCalibration(attenuation_db=143.7, gain_db=101.4)


def dbm_to_watts(p_dbm, attenuation_db=0.0):
    return 10.0 ** ((np.asarray(p_dbm, dtype=float) - attenuation_db - 30.0) / 10.0)


def dbm_to_rabi(p_dbm, k, attenuation_db=0.0):
    """Angular Rabi frequency for a line power.

    The chip power is ``P = 10**((p_dbm - attenuation_db - 30)/10)`` watts and
    ``k*sqrt(P)`` is read as a cyclic frequency, so the result is
    ``2*pi*k*sqrt(P)`` in rad/s.
    """
    if not k > 0:
        raise ValidationError(f"coupling k must be > 0, got {k}")
    out = TWO_PI * k * np.sqrt(dbm_to_watts(p_dbm, attenuation_db))
    return float(out) if np.ndim(out) == 0 else out


def rabi_to_dbm(rabi, k, attenuation_db=0.0):
    """Inverse of :func:`dbm_to_rabi`; zero Rabi maps to ``-inf``."""
    if not k > 0:
        raise ValidationError(f"coupling k must be > 0, got {k}")
    rabi = np.asarray(rabi, dtype=float)
    with np.errstate(divide="ignore"):
        p_watts = (rabi / (TWO_PI * k)) ** 2
        out = 10.0 * np.log10(p_watts) + 30.0 + attenuation_db
    return float(out) if np.ndim(out) == 0 else out


def control_coupling(atom: AtomParams) -> float:
    """k21 for the |1>-|2> control tone."""
    if atom.k_10 is None:
        raise ValidationError("atom has no k_10")
    return CONTROL_COUPLING_RATIO * atom.k_10


def effective_rates(atom: AtomParams, omega_c: float) -> EffectiveRates:
    """Effective (Gamma, gamma, Gamma_n) for a resonant control of Rabi ``omega_c``.

    Only defined below the Autler-Townes threshold ``omega_c < 2*gamma_20``.
    """
    if omega_c == 0:
        return EffectiveRates.of(atom)
    if atom.gamma_20 is None:
        raise DomainError("control pump needs gamma_20 (two-level atom given)")
    x = (omega_c / (2.0 * atom.gamma_20)) ** 2
    denom = 1.0 - x
    if denom <= 0:
        raise DomainError(
            f"omega_c={omega_c:.6g} rad/s is at or above the ATS threshold "
            f"2*gamma_20={2 * atom.gamma_20:.6g} rad/s")
    G = atom.gamma_r_10 / denom
    g = atom.gamma_10 * (1.0 + omega_c ** 2 / (4.0 * atom.gamma_10 * atom.gamma_20)) / denom
    return EffectiveRates(G, g, g - G / 2.0)


def singular_control_rabi(atom: AtomParams) -> float:
    """Control Rabi frequency at which Gamma/2 == Gamma_n (r = 0 on resonance)."""
    if atom.gamma_20 is None:
        raise DomainError("singular control needs gamma_20")
    excess = atom.gamma_r_10 - atom.gamma_10
    if excess < 0:
        raise NoSolutionError(
            "gamma_r_10 < gamma_10: non-radiative decay already dominates")
    return 2.0 * math.sqrt(atom.gamma_20 * excess)


def ats_threshold_rabi(atom: AtomParams) -> float:
    """Control Rabi frequency 2*gamma_20 where the effective-rate reduction ends."""
    if atom.gamma_20 is None:
        raise DomainError("ATS threshold needs gamma_20")
    return 2.0 * atom.gamma_20


def singular_probe_rabi(atom: AtomParams) -> float:
    """Resonant probe Rabi frequency at which the saturated reflection vanishes.

    Solves ``Omega_p**2 = gamma_r_10 * (gamma_r_10 - gamma_10)``.
    """
    excess = atom.gamma_r_10 - atom.gamma_10
    if excess < 0:
        raise NoSolutionError("gamma_r_10 < gamma_10: |r| never reaches zero")
    return math.sqrt(atom.gamma_r_10 * excess)
