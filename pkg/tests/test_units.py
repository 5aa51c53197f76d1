import pytest
from hypothesis import given, strategies as st

from levidm.units import (
    CONSTANTS,
    Constants,
    Dimension,
    Quantity,
    cm2_to_inv_ev2,
    to_natural,
    to_si,
)

positive = st.floats(min_value=1e-30, max_value=1e30, allow_nan=False, allow_infinity=False)


def test_ev_to_kg_consistent_with_joule_and_c():
    c = CONSTANTS
    assert c.ev_to_kg == pytest.approx(c.ev_to_joule / c.c**2, rel=1e-12)


def test_constants_are_frozen():
    with pytest.raises(AttributeError):
        CONSTANTS.hbar = 1.0


def test_codata_2018_values():
    c = Constants()
    assert c.hbar == 1.054571817e-34
    assert c.k_boltzmann == 1.380649e-23
    assert c.c == 299792458.0
    assert c.ev_to_joule == 1.602176634e-19
    assert c.amu_to_kg == 1.66053906660e-27


def test_gev_to_kg():
    q = to_si(Quantity(1e9, Dimension.MASS))
    assert q.value == pytest.approx(1.78266192e-27, rel=1e-8)
    assert q.dimension is Dimension.MASS


def test_kg_to_gev():
    q = to_natural(Quantity(1.78266192e-27, Dimension.MASS))
    assert q.value == pytest.approx(1e9, rel=1e-9)


def test_zero_values():
    assert to_si(Quantity(0.0, Dimension.ENERGY)).value == 0.0
    assert to_natural(Quantity(0.0, Dimension.MASS)).value == 0.0


def test_length_round_trip():
    q = to_si(to_natural(Quantity(1.0, Dimension.LENGTH)))
    assert q.value == pytest.approx(1.0, rel=1e-12)


def test_cross_section_in_inverse_ev2():
    # (hbar c)^2 evaluated independently at 30 digits
    q = to_natural(Quantity(1e-32, Dimension.CROSS_SECTION))
    assert q.value == pytest.approx(2.5681894642946595e-19, rel=1e-12)
    assert cm2_to_inv_ev2(1e-28) == pytest.approx(q.value, rel=1e-12)


def test_unsupported_dimension_rejected():
    with pytest.raises(ValueError):
        to_si(Quantity(1.0, "luminosity"))
    with pytest.raises(ValueError):
        to_natural(Quantity(1.0, "charge"))


@given(value=positive, dim=st.sampled_from(list(Dimension)))
def test_round_trip_property(value, dim):
    back = to_natural(to_si(Quantity(value, dim)))
    assert back.value == pytest.approx(value, rel=1e-12)


@given(a=positive, b=positive, dim=st.sampled_from(list(Dimension)))
def test_conversion_strictly_monotone(a, b, dim):
    lo, hi = sorted((a, b))
    if hi <= lo * (1 + 1e-12):
        return  # rounding may merge neighbouring floats
    assert to_si(Quantity(lo, dim)).value < to_si(Quantity(hi, dim)).value
    assert to_natural(Quantity(lo, dim)).value < to_natural(Quantity(hi, dim)).value
