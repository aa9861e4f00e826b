import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qdelay import (MHZ, AtomParams, DriveSpec, Envelope, ats_threshold_rabi, control_coupling,
                    dbm_to_rabi, dbm_to_watts, effective_rates, rabi_to_dbm,
                    singular_control_rabi, singular_probe_rabi)
from qdelay.errors import DomainError, NoSolutionError, ValidationError
from qdelay.params import FREQ_DOMAIN_LINE, TIME_DOMAIN_LINE, EffectiveRates

from oracles import mp_effective_rates

rate = st.floats(0.05, 50.0)


class TestAtomParams:
    def test_nonradiative_rate_is_derived(self, dev2):
        assert dev2.gamma_n_10 / MHZ == pytest.approx(1.176 - 2.316 / 2, rel=1e-12)

    @pytest.mark.parametrize("drop", ["gamma_r_10", "gamma_10", "gamma_n_10"])
    def test_any_two_rates_fix_the_third(self, drop):
        full = dict(gamma_r_10_mhz=2.316, gamma_10_mhz=1.176, gamma_n_10_mhz=0.018)
        full.pop(drop + "_mhz")
        a = AtomParams.from_mhz(4761.62, **full)
        assert a.gamma_10 == pytest.approx(a.gamma_r_10 / 2 + a.gamma_n_10, rel=1e-12)
        assert a.gamma_10 / MHZ == pytest.approx(1.176, rel=1e-12)

    def test_inconsistent_triple_rejected(self):
        with pytest.raises(ValidationError):
            AtomParams.from_mhz(5000.0, gamma_r_10_mhz=2.0, gamma_10_mhz=1.5, gamma_n_10_mhz=0.2)

    def test_negative_nonradiative_rate_rejected(self):
        with pytest.raises(ValidationError):
            AtomParams.from_mhz(5000.0, gamma_r_10_mhz=4.0, gamma_10_mhz=1.0)

    def test_nonpositive_frequency_rejected(self):
        with pytest.raises(ValidationError):
            AtomParams(0.0, 1.0, 1.0)

    def test_nan_rate_rejected(self):
        with pytest.raises(ValidationError):
            AtomParams(1e10, float("nan"), 1.0)

    def test_upper_transition_defaults(self, dev2):
        assert dev2.gamma_r_21 == pytest.approx(2 * dev2.gamma_r_10)
        assert dev2.gamma_20 == pytest.approx(dev2.gamma_r_21 / 2 + dev2.gamma_n_20)
        assert dev2.gamma_21 == pytest.approx((dev2.gamma_r_10 + dev2.gamma_r_21) / 2)
        assert dev2.is_three_level and not AtomParams(1e10, 1.0, 1.0).is_three_level

    def test_with_rates_revalidates(self, dev2):
        b = dev2.with_rates(gamma_21=1.0)
        assert b.gamma_21 == 1.0 and b.gamma_r_10 == dev2.gamma_r_10
        with pytest.raises(ValidationError):
            dev2.with_rates(gamma_r_10=-1.0)

    def test_zero_radiative_rate_allowed(self):
        a = AtomParams.from_mhz(5000.0, gamma_r_10_mhz=0.0, gamma_10_mhz=1.0)
        assert a.gamma_n_10 == pytest.approx(1.0 * MHZ)


class TestPowerConversion:
    def test_watts(self):
        assert dbm_to_watts(-30.0) == pytest.approx(1e-6)
        assert dbm_to_watts(-30.0, attenuation_db=10.0) == pytest.approx(1e-7)

    def test_control_rabi_frozen(self, dev2):
        # 10**((-139.4 - 30)/10) W, Rabi 2 pi sqrt(2) k10 sqrt(P)
        assert dbm_to_rabi(-139.4, control_coupling(dev2)) / MHZ == pytest.approx(3.2759413, rel=1e-7)

    def test_control_coupling_is_sqrt2(self, dev2):
        assert control_coupling(dev2) == pytest.approx(math.sqrt(2) * 6.8363e14)

    def test_array_input(self):
        out = dbm_to_rabi(np.array([-150.0, -140.0]), 1e15)
        assert out.shape == (2,) and out[1] / out[0] == pytest.approx(10 ** 0.5)

    def test_bad_coupling(self):
        with pytest.raises(ValidationError):
            dbm_to_rabi(-140.0, 0.0)

    @given(p=st.floats(-200, -80), k=st.floats(1e13, 1e16), att=st.floats(0, 120))
    def test_round_trip(self, p, k, att):
        assert rabi_to_dbm(dbm_to_rabi(p, k, att), k, att) == pytest.approx(p, abs=1e-9)

    def test_line_calibrations(self):
        assert FREQ_DOMAIN_LINE.attenuation_db == pytest.approx(132.3)
        assert TIME_DOMAIN_LINE.attenuation_db == pytest.approx(143.7)


class TestEffectiveRates:
    def test_no_pump_gives_bare_rates(self, dev2):
        r = effective_rates(dev2, 0.0)
        assert r.gamma_r_eff == dev2.gamma_r_10 and r.gamma_eff == dev2.gamma_10
        assert EffectiveRates.of(dev2) == r

    def test_one_mhz_pump_frozen(self, dev2):
        # arbitrary-precision values, frozen
        r = effective_rates(dev2, 1.0 * MHZ)
        assert r.gamma_r_eff / MHZ == pytest.approx(2.42445751, rel=1e-8)
        assert r.gamma_eff / MHZ == pytest.approx(1.34177703, rel=1e-8)
        assert r.gamma_n_eff / MHZ == pytest.approx(0.12954827, rel=1e-7)

    @given(frac=st.floats(0.0, 0.99))
    def test_matches_high_precision(self, dev2, frac):
        oc = frac * 2 * dev2.gamma_20
        r = effective_rates(dev2, oc)
        ref = mp_effective_rates(dev2.gamma_r_10, dev2.gamma_10, dev2.gamma_20, oc)
        assert (r.gamma_r_eff, r.gamma_eff, r.gamma_n_eff) == pytest.approx(ref, rel=1e-9)

    @given(a=st.floats(0.0, 0.98), b=st.floats(0.0, 0.98))
    def test_monotone_in_pump(self, dev2, a, b):
        lo, hi = sorted((a, b))
        r1 = effective_rates(dev2, lo * 2 * dev2.gamma_20)
        r2 = effective_rates(dev2, hi * 2 * dev2.gamma_20)
        assert r2.gamma_r_eff >= r1.gamma_r_eff and r2.gamma_eff >= r1.gamma_eff

    def test_ats_threshold_is_domain_edge(self, dev2):
        with pytest.raises(DomainError):
            effective_rates(dev2, ats_threshold_rabi(dev2))

    def test_two_level_atom_refuses_pump(self, dev1a):
        with pytest.raises(DomainError):
            effective_rates(dev1a, 1.0 * MHZ)


class TestFeatures:
    def test_singular_control(self, dev2):
        oc = singular_control_rabi(dev2)
        assert oc / MHZ == pytest.approx(3.28326667, rel=1e-8)
        r = effective_rates(dev2, oc)
        assert r.gamma_r_eff / 2 == pytest.approx(r.gamma_n_eff, rel=1e-10)

    def test_singular_control_equality_case(self):
        a = AtomParams.from_mhz(5000.0, gamma_r_10_mhz=1.0, gamma_10_mhz=1.0, gamma_20_mhz=2.0)
        assert singular_control_rabi(a) == 0.0

    def test_singular_control_absent_in_fast_light_device(self):
        a = AtomParams.from_mhz(5000.0, gamma_r_10_mhz=1.0, gamma_10_mhz=1.5, gamma_20_mhz=2.0)
        with pytest.raises(NoSolutionError):
            singular_control_rabi(a)

    def test_ats_threshold(self, dev2):
        assert ats_threshold_rabi(dev2) == pytest.approx(2 * dev2.gamma_20)

    def test_singular_probe(self, dev2):
        op = singular_probe_rabi(dev2)
        G, g = dev2.gamma_r_10, dev2.gamma_10
        assert op ** 2 == pytest.approx(G * (G - g))
        with pytest.raises(NoSolutionError):
            singular_probe_rabi(AtomParams.from_mhz(5000.0, gamma_r_10_mhz=1.0, gamma_10_mhz=1.5))


class TestDrives:
    def test_envelope_peak(self):
        e = Envelope(sigma=1e-6, t0=5e-6)
        assert e(5e-6) == pytest.approx(1.0)
        assert e(6e-6) == pytest.approx(math.exp(-0.5))

    def test_envelope_rejects_zero_width(self):
        with pytest.raises(ValidationError):
            Envelope(sigma=0.0, t0=0.0)

    def test_drive_spec(self):
        d = DriveSpec(2.0, envelope=Envelope(1e-6, 0.0))
        assert d.amplitude(0.0) == pytest.approx(2.0)
        assert DriveSpec(3.0).amplitude(1.0) == pytest.approx(3.0)
        with pytest.raises(ValidationError):
            DriveSpec(-1.0)
