import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from acsphere.errors import InvalidPotentialError
from acsphere.potential import QUARTIC, by_name, polynomial, sigma, validate


def test_quartic_values():
    t = np.array([-1.0, 0.0, 1.0, 0.5])
    assert np.array_equal(QUARTIC.w(t[:3]), [0.0, 0.25, 0.0])
    assert QUARTIC.w1(np.array(0.5)) == pytest.approx(-0.375)
    assert QUARTIC.w2(np.array(0.0)) == -1.0
    assert QUARTIC.w2(np.array(1.0)) == 2.0


def test_sigma_closed_form():
    assert abs(sigma(QUARTIC) - math.sqrt(2) / 3) <= 1e-10


def test_sigma_independent_quadrature():
    mpmath.mp.dps = 30
    ref = mpmath.quad(lambda t: mpmath.sqrt((1 - t**2) ** 2 / 8), [-1, 0, 1])
    assert sigma(QUARTIC) == pytest.approx(float(ref), abs=1e-12)


def test_mass_normalizer():
    assert 2 * sigma(QUARTIC) == pytest.approx(0.9428090, abs=1e-7)


@settings(max_examples=25, deadline=None)
@given(c=st.floats(0.1, 10.0))
def test_sigma_scaling(c):
    assert sigma(QUARTIC.scaled(c * c)) == pytest.approx(c * sigma(QUARTIC), rel=1e-10)


@settings(max_examples=25, deadline=None)
@given(a=st.floats(0.05, 2.0), s=st.floats(0.0, 1.9))
def test_valid_polynomial_wells_have_positive_sigma(a, s):
    # (1 - t^2)^2 (a + b t^2) is an even double well for a > 0, 0 <= b < 2a
    b = s * a
    base = np.polynomial.Polynomial([1.0, 0.0, -2.0, 0.0, 1.0]) * np.polynomial.Polynomial([a, 0.0, b])
    spec = polynomial(base.coef)
    assert sigma(spec) > 0


def test_polynomial_matches_quartic():
    spec = polynomial([0.25, 0.0, -0.5, 0.0, 0.25])
    assert sigma(spec) == pytest.approx(sigma(QUARTIC), rel=1e-12)
    t = np.linspace(-1.5, 1.5, 31)
    assert np.allclose(spec.w2(t), QUARTIC.w2(t))


@pytest.mark.parametrize(
    "coeffs",
    [
        [0.25, 0.1, -0.5, 0.0, 0.25],  # odd term
        [1.0, 0.0, -0.5],  # W(1) != 0
        [-0.25, 0.0, 0.5, 0.0, -0.25],  # negative well
    ],
)
def test_invalid_polynomials_rejected(coeffs):
    with pytest.raises(InvalidPotentialError):
        polynomial(coeffs)


def test_validate_catches_bad_derivative():
    bad = QUARTIC.__class__("bad", QUARTIC.w, lambda t: 2 * QUARTIC.w1(t), QUARTIC.w2, QUARTIC.w3)
    with pytest.raises(InvalidPotentialError):
        validate(bad)


def test_by_name():
    assert by_name("quartic") is QUARTIC
    with pytest.raises(InvalidPotentialError):
        by_name("sextic")
