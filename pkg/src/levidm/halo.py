"""Standard-halo environment: densities, speeds and the annual wind angle."""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import optimize, special

from .units import C_LIGHT, EV_TO_KG, HBAR

GEV_PER_CM3_TO_EV_PER_M3 = 1e9 * 1e6
SIDEREAL_YEAR_S = 365.256363004 * 86400.0
DAY_S = 86400.0


@dataclass(frozen=True)
class HaloModel:
    """Local dark-matter halo.

    Parameters
    ----------
    rho_local : float
        Local mass density in GeV/cm^3.
    v_mean : float
        Mean speed of the (truncated) speed distribution, m/s.
    v_escape : float
        Galactic escape speed, m/s; the speed distribution is cut here.
    m_chi : float
        Candidate mass in eV.
    """

    rho_local: float = 0.3
    v_mean: float = 220e3
    v_escape: float = 544e3
    m_chi: float = 1e9

    def __post_init__(self):
        if not self.rho_local >= 0:
            raise ValueError("rho_local must be non-negative")
        if not 0 < self.v_mean < self.v_escape < C_LIGHT:
            raise ValueError("require 0 < v_mean < v_escape < c")
        if not self.m_chi > 0:
            raise ValueError("m_chi must be positive")

    @cached_property
    def _mb_scale(self) -> float:
        # Maxwell-Boltzmann scale a (v_p = sqrt(2) a) such that the
        # truncated distribution has mean exactly v_mean.
        a0 = self.v_mean * math.sqrt(math.pi / 8.0)
        return optimize.brentq(
            lambda a: _truncated_mb_mean(a, self.v_escape) - self.v_mean,
            0.5 * a0, 2.0 * a0, xtol=1e-12 * a0, rtol=1e-14,
        )

    @cached_property
    def _mb_norm(self) -> float:
        return _mb_cdf(self.v_escape, self._mb_scale)


def _mb_cdf(v, a):
    x = np.asarray(v, dtype=float) / a
    return special.erf(x / math.sqrt(2.0)) - math.sqrt(2.0 / math.pi) * x * np.exp(-0.5 * x * x)


def _truncated_mb_mean(a, v_esc):
    # int_0^V v f(v) dv for f the MB pdf with scale a, divided by the CDF.
    x = v_esc / a
    first_moment = a * math.sqrt(2.0 / math.pi) * (2.0 - (x * x + 2.0) * math.exp(-0.5 * x * x))
    return first_moment / float(_mb_cdf(v_esc, a))


def number_density(h: HaloModel) -> float:
    """Number density rho/m_chi in m^-3."""
    if not h.m_chi > 0:
        raise ValueError("m_chi must be positive")
    return h.rho_local * GEV_PER_CM3_TO_EV_PER_M3 / h.m_chi


def speed_pdf(h: HaloModel, v):
    """Truncated Maxwell-Boltzmann speed density in 1/(m/s).

    Zero above ``h.v_escape``; normalised to unit integral on [0, v_escape].
    """
    v = np.asarray(v, dtype=float)
    if np.any(v < 0):
        raise ValueError("speeds must be non-negative")
    a = h._mb_scale
    pdf = math.sqrt(2.0 / math.pi) * v * v / a**3 * np.exp(-0.5 * (v / a) ** 2)
    out = np.where(v <= h.v_escape, pdf / h._mb_norm, 0.0)
    return out if out.ndim else float(out)


def sample_speeds(h: HaloModel, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``n`` speeds from :func:`speed_pdf` by rejection of the MB tail."""
    a = h._mb_scale
    out = np.empty(0)
    while out.size < n:
        need = n - out.size
        batch = int(need / h._mb_norm * 1.05) + 16
        v = a * np.sqrt(rng.chisquare(3, size=batch))
        out = np.concatenate([out, v[v <= h.v_escape]])
    return out[:n]


def de_broglie(m_chi: float, v: float) -> float:
    """de Broglie wavelength 2*pi*hbar/(m v) in metres, ``m_chi`` in eV."""
    if not (m_chi > 0 and v > 0):
        raise ValueError("m_chi and v must be positive")
    return 2.0 * math.pi * HBAR / (m_chi * EV_TO_KG * v)


@dataclass(frozen=True)
class WindTrack:
    """Single-harmonic model of the yearly swing of the wind orientation.

    ``psi_mean`` and ``psi_amplitude`` are in radians, ``period`` in seconds,
    ``phase_zero_day`` is the day of maximal orientation.
    """

    psi_mean: float = 0.0
    psi_amplitude: float = 0.3
    period: float = SIDEREAL_YEAR_S
    phase_zero_day: float = 0.0

    def __post_init__(self):
        if not self.period > 0:
            raise ValueError("period must be positive")


def wind_angle(w: WindTrack, t):
    """Orientation of the wind in the sensor x-y plane at time ``t`` (s)."""
    t0 = w.phase_zero_day * DAY_S
    # reduce the phase first so that psi(t + period) == psi(t) exactly
    cycles = np.mod(np.asarray(t, dtype=float) - t0, w.period) / w.period
    out = w.psi_mean + w.psi_amplitude * np.cos(2.0 * np.pi * cycles)
    return out if out.ndim else float(out)
