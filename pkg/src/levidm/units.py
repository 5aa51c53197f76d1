"""Physical constants and SI <-> natural-unit conversion.

Natural units here mean hbar = c = 1 with energies in eV.  Every dimension
in :class:`Dimension` maps to a power of eV:

=============  =========  ==========
dimension      SI unit    natural
=============  =========  ==========
mass           kg         eV
energy         J          eV
length         m          1/eV
time           s          1/eV
inverse-time   1/s        eV
cross-section  m^2        1/eV^2
=============  =========  ==========
"""
from __future__ import annotations

import enum
from dataclasses import dataclass


@dataclass(frozen=True)
class Constants:
    """CODATA-2018 exact and recommended values (SI)."""

    hbar: float = 1.054571817e-34
    k_boltzmann: float = 1.380649e-23
    c: float = 299792458.0
    ev_to_joule: float = 1.602176634e-19
    amu_to_kg: float = 1.66053906660e-27

    @property
    def ev_to_kg(self) -> float:
        return self.ev_to_joule / self.c**2

    @property
    def hbar_ev_s(self) -> float:
        """hbar in eV s."""
        return self.hbar / self.ev_to_joule

    @property
    def hbar_c_ev_m(self) -> float:
        """hbar*c in eV m (length of one inverse eV)."""
        return self.hbar * self.c / self.ev_to_joule


CONSTANTS = Constants()

HBAR = CONSTANTS.hbar
K_B = CONSTANTS.k_boltzmann
C_LIGHT = CONSTANTS.c
EV = CONSTANTS.ev_to_joule
EV_TO_KG = CONSTANTS.ev_to_kg
AMU = CONSTANTS.amu_to_kg
HBAR_EV_S = CONSTANTS.hbar_ev_s
HBAR_C_EV_M = CONSTANTS.hbar_c_ev_m


class Dimension(enum.Enum):
    MASS = "mass"
    ENERGY = "energy"
    LENGTH = "length"
    TIME = "time"
    INVERSE_TIME = "inverse-time"
    CROSS_SECTION = "cross-section"


# SI value = natural value * factor
_SI_PER_NATURAL = {
    Dimension.MASS: EV_TO_KG,
    Dimension.ENERGY: EV,
    Dimension.LENGTH: HBAR_C_EV_M,
    Dimension.TIME: HBAR_EV_S,
    Dimension.INVERSE_TIME: 1.0 / HBAR_EV_S,
    Dimension.CROSS_SECTION: HBAR_C_EV_M**2,
}


@dataclass(frozen=True)
class Quantity:
    value: float
    dimension: Dimension


def _factor(dimension) -> float:
    try:
        return _SI_PER_NATURAL[Dimension(dimension)]
    except (ValueError, KeyError):
        raise ValueError(f"unsupported dimension: {dimension!r}") from None


def to_si(q: Quantity) -> Quantity:
    """Convert a natural-unit quantity to SI."""
    return Quantity(q.value * _factor(q.dimension), Dimension(q.dimension))


def to_natural(q: Quantity) -> Quantity:
    """Convert an SI quantity to natural units (powers of eV)."""
    return Quantity(q.value / _factor(q.dimension), Dimension(q.dimension))


def mass_ev_to_kg(m_ev: float) -> float:
    return m_ev * EV_TO_KG


def length_m_to_inv_ev(length_m: float) -> float:
    return length_m / HBAR_C_EV_M


def rate_ev_to_per_s(rate_ev: float) -> float:
    return rate_ev / HBAR_EV_S


def cm2_to_inv_ev2(sigma_cm2: float) -> float:
    return sigma_cm2 * 1e-4 / HBAR_C_EV_M**2
