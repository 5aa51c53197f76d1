import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from levidm.halo import (
    HaloModel,
    WindTrack,
    de_broglie,
    number_density,
    sample_speeds,
    speed_pdf,
    wind_angle,
)


def test_number_density_gev_candidate():
    assert number_density(HaloModel(m_chi=1e9)) == pytest.approx(3e5, rel=1e-12)


def test_number_density_100ev_candidate():
    assert number_density(HaloModel(m_chi=100.0)) == pytest.approx(3e12, rel=1e-12)


def test_number_density_zero_density():
    assert number_density(HaloModel(rho_local=0.0, m_chi=5.0)) == 0.0


@pytest.mark.parametrize("m_chi", [0.0, -1.0])
def test_non_positive_mass_rejected(m_chi):
    with pytest.raises(ValueError):
        HaloModel(m_chi=m_chi)


@pytest.mark.parametrize("kw", [dict(v_mean=600e3), dict(v_escape=4e8), dict(v_mean=0.0),
                                dict(rho_local=-1.0)])
def test_invalid_halo_rejected(kw):
    with pytest.raises(ValueError):
        HaloModel(**kw)


@given(m=st.floats(min_value=1e-3, max_value=1e12), k=st.floats(min_value=1e-3, max_value=1e3))
def test_number_density_homogeneous_degree_minus_one(m, k):
    a = number_density(HaloModel(m_chi=m))
    b = number_density(HaloModel(m_chi=k * m))
    assert b == pytest.approx(a / k, rel=1e-12)


def test_speed_pdf_normalised():
    h = HaloModel()
    total, _ = integrate.quad(lambda v: speed_pdf(h, v), 0, h.v_escape, epsabs=0, epsrel=1e-10)
    assert total == pytest.approx(1.0, abs=1e-6)


def test_speed_pdf_mean():
    h = HaloModel()
    mean, _ = integrate.quad(lambda v: v * speed_pdf(h, v), 0, h.v_escape, epsrel=1e-10)
    assert mean == pytest.approx(h.v_mean, rel=5e-3)


def test_speed_pdf_zero_above_escape():
    h = HaloModel()
    assert speed_pdf(h, h.v_escape + 1.0) == 0.0


@given(v=st.floats(min_value=0.0, max_value=1e6))
def test_speed_pdf_non_negative(v):
    assert speed_pdf(HaloModel(), v) >= 0.0


def test_speed_pdf_rejects_negative_speed():
    with pytest.raises(ValueError):
        speed_pdf(HaloModel(), -1.0)


def test_sampled_speeds_follow_pdf():
    h = HaloModel()
    v = sample_speeds(h, 200_000, np.random.default_rng(3))
    assert v.max() <= h.v_escape
    assert v.mean() == pytest.approx(h.v_mean, rel=5e-3)


def test_de_broglie_endpoints():
    assert de_broglie(1e3, 220e3) == pytest.approx(1.6895239808488351e-06, rel=1e-12)
    assert de_broglie(1e7, 220e3) == pytest.approx(1.6895239808488351e-10, rel=1e-12)


@given(m=st.floats(min_value=1e-3, max_value=1e12))
def test_de_broglie_inverse_in_mass(m):
    assert de_broglie(2 * m, 220e3) == pytest.approx(de_broglie(m, 220e3) / 2, rel=1e-15)


@pytest.mark.parametrize("args", [(0.0, 1.0), (1.0, 0.0), (-1.0, 1.0)])
def test_de_broglie_rejects_non_positive(args):
    with pytest.raises(ValueError):
        de_broglie(*args)


def test_wind_angle_extremes():
    w = WindTrack(psi_mean=0.1, psi_amplitude=0.3, period=100.0, phase_zero_day=0.0)
    assert wind_angle(w, 0.0) == pytest.approx(0.4)
    assert wind_angle(w, 50.0) == pytest.approx(-0.2)


def test_wind_angle_phase_zero_day():
    w = WindTrack(phase_zero_day=10.0)
    assert wind_angle(w, 10 * 86400.0) == pytest.approx(w.psi_mean + w.psi_amplitude)


@given(t=st.floats(min_value=-1e9, max_value=1e9))
def test_wind_angle_bounded_and_periodic(t):
    w = WindTrack(psi_mean=0.2, psi_amplitude=0.3)
    psi = wind_angle(w, t)
    assert abs(psi - 0.2) <= 0.3 + 1e-15
    assert wind_angle(w, t + w.period) == pytest.approx(psi, abs=1e-12)


def test_wind_sign_flips_twice_per_period():
    w = WindTrack(psi_mean=0.0, psi_amplitude=0.3, period=1000.0, phase_zero_day=0.0)
    t = np.linspace(0.0, w.period, 100_001)[:-1] + 0.123
    s = np.sign(wind_angle(w, t))
    flips = np.count_nonzero(s != np.roll(s, 1))
    assert flips == 2


def test_wind_period_must_be_positive():
    with pytest.raises(ValueError):
        WindTrack(period=0.0)
