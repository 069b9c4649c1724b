import math

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from ransim.radio import (Beam, Sinr, beam_gain_db, fqam_effective_sinr, fqam_gain_db,
                          lte_profile, mmw_profile, noise_dbm, nr_profile, pathloss_db,
                          rate_bps, sinr, spectral_efficiency, wrap_deg)


def test_pathloss_reference_values():
    # 128.1 + 37.6 log10(d_km) at 2 GHz; by hand: d = 1 km -> 128.1, d = 100 m -> 90.5
    assert pathloss_db(1000.0, 2.0) == pytest.approx(128.1)
    assert pathloss_db(100.0, 2.0) == pytest.approx(90.5)
    # 20 log10(f/2) carrier term: 20 GHz adds exactly 20 dB
    assert pathloss_db(1000.0, 20.0) == pytest.approx(148.1)


def test_pathloss_clamps_below_ten_metres():
    assert pathloss_db(1.0, 2.0) == pathloss_db(10.0, 2.0)
    assert pathloss_db(0.0, 2.0) == pytest.approx(128.1 - 2 * 37.6)


def test_pathloss_rejects_bad_carrier():
    with pytest.raises(ValueError):
        pathloss_db(100.0, 0.0)


@given(st.floats(10.0, 5000.0), st.floats(1.0, 2.0))
def test_pathloss_monotone_in_distance(d, k):
    assert pathloss_db(d * k, 2.0) >= pathloss_db(d, 2.0)


def test_noise_floor():
    # -174 + 10 log10(20 MHz) + 9 = -92.99 dBm
    assert noise_dbm(20e6) == pytest.approx(-174 + 73.0103 + 9, abs=1e-3)


def test_rate_formula_and_cap():
    # SINR 3 -> log2(4) = 2 bit/s/Hz, times 0.6 and 1 MHz
    assert rate_bps(3.0, 1e6) == pytest.approx(1.2e6)
    # capped at 6 bit/s/Hz
    assert rate_bps(1e9, 1e6) == pytest.approx(3.6e6)
    assert rate_bps(0.0, 1e6) == 0.0
    with pytest.raises(ValueError):
        rate_bps(1.0, -1.0)


@given(st.floats(-20, 40), st.lists(st.floats(-130, -60), max_size=6), st.floats(-130, -60))
def test_sinr_drops_when_an_interferer_is_added(s, interf, extra):
    base = sinr(s, interf, -100.0).linear
    more = sinr(s, interf + [extra], -100.0).linear
    assert more <= base


def test_sinr_without_noise_is_c_over_i():
    assert sinr(-60.0, [-70.0], None).db == pytest.approx(10.0)
    assert math.isinf(sinr(-60.0, [], None).linear)


def test_sinr_rejects_negative():
    with pytest.raises(ValueError):
        Sinr(-1.0)


def test_beam_gain_shape():
    assert beam_gain_db(30.0, 30.0, 70.0, 14.0, 20.0) == pytest.approx(14.0)
    # 3 dB down at half the beamwidth
    assert beam_gain_db(65.0, 30.0, 70.0, 14.0, 20.0) == pytest.approx(11.0)
    # floor at peak - front_to_back
    assert beam_gain_db(210.0, 30.0, 70.0, 14.0, 20.0) == pytest.approx(-6.0)
    b = Beam(0.0, 15.0, 20.0, 10.0)
    assert b.gain_db(180.0) == pytest.approx(10.0)


@given(st.floats(-1e4, 1e4))
def test_wrap_range(a):
    w = float(wrap_deg(a))
    assert -180.0 <= w < 180.0
    assert math.isclose(math.cos(math.radians(w)), math.cos(math.radians(a)), abs_tol=1e-6)


def test_profiles():
    lte, nr, mm = lte_profile(20.0), nr_profile(20.0), mmw_profile()
    assert (lte.rb_count, lte.tti_ticks, lte.carrier_ghz) == (100, 5, 2.0)
    assert nr.tti_ticks == 1 and nr.carrier_ghz == 15.0
    assert lte.bandwidth_hz == pytest.approx(18e6)
    assert mm.carrier_ghz == 60.0


def test_fqam_gain_taper():
    assert fqam_gain_db(-5.0) == 3.0
    assert fqam_gain_db(0.0) == 3.0
    assert fqam_gain_db(5.0) == pytest.approx(1.5)
    assert fqam_gain_db(10.0) == 0.0


@given(st.floats(-15, 25))
def test_fqam_never_hurts(db):
    s = Sinr.from_db(db)
    assert fqam_effective_sinr(s, True).linear >= s.linear
    assert fqam_effective_sinr(s, False) == s


@given(st.floats(0, 1e6))
def test_spectral_efficiency_bounded(x):
    se = spectral_efficiency(x)
    assert 0.0 <= se <= 0.6 * 6.0 + 1e-12
