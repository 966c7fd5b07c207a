import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import special

from slext import oracles
from slext.bessel import (
    SERIES_MAX,
    bessel_j,
    bessel_j_zero,
    hardy_constant,
    lamb_G,
    lamb_G_derivative_form,
    lamb_zero,
    rayleigh_verify,
    symmetric_bessel_friedrichs_spectrum,
)
from slext.errors import InequalityViolated
from slext.problem import builtin_bessel
from slext.specs import PI, Separated
from slext.spectra import first_eigenvalues, lowest_eigenvalue

# pinned from scipy.special scans, independent of the series/asymptotic code
LAMB_0_1 = 0.9407705639
LAMB_03_1 = 1.3248928167


def test_closed_forms():
    assert bessel_j(0.5, 1.0) == pytest.approx(math.sqrt(2 / PI) * math.sin(1.0), abs=1e-14)
    assert bessel_j(-0.5, 2.0) == pytest.approx(math.sqrt(1 / PI) * math.cos(2.0), abs=1e-14)
    assert bessel_j(0.0, 0.0) == 1.0
    assert bessel_j(0.3, 0.0) == 0.0


def test_negative_integer_order():
    assert bessel_j(-1.0, 3.0) == pytest.approx(-bessel_j(1.0, 3.0), abs=1e-15)


@pytest.mark.parametrize("g", [-0.7, -0.3, 0.0, 0.3, 0.5, 0.99])
def test_against_scipy(g):
    ys = np.concatenate([np.linspace(0.01, SERIES_MAX + 2, 120), np.linspace(14, 200, 120)])
    assert np.max(np.abs(bessel_j(g, ys) - special.jv(g, ys))) <= 1e-12


def test_array_input_shape():
    assert bessel_j(0.3, np.ones((2, 3))).shape == (2, 3)


@given(st.floats(-0.9, 0.9), st.floats(0.1, 150.0))
def test_recurrence(g, y):
    lhs = bessel_j(g - 1, y) + bessel_j(g + 1, y)
    assert lhs == pytest.approx(2 * g / y * bessel_j(g, y), abs=1e-11)


def test_zero_examples():
    for k in (1, 2, 5, 10):
        assert bessel_j_zero(0.5, k) == pytest.approx(k * PI, rel=1e-11)
    assert 2.40 < bessel_j_zero(0.0, 1) < 2.41
    assert bessel_j_zero(0.0, 1) == pytest.approx(special.jn_zeros(0, 1)[0], rel=1e-11)


@pytest.mark.parametrize("g", [0.0, 0.3, 0.7])
def test_zeros_interlace_and_match_oracle(g):
    zs = [bessel_j_zero(g, k) for k in range(1, 7)]
    assert all(a < b for a, b in zip(zs, zs[1:]))
    assert np.allclose(zs, oracles.bessel_zeros(g, 6), rtol=1e-11)


def test_lamb_G_special_cases():
    for y in (0.5, 1.7, 9.0, 30.0):
        assert lamb_G(0.5, y) == pytest.approx(2 * math.sqrt(2 / PI) * math.cos(y), abs=1e-11)
        assert lamb_G(0.0, y) == pytest.approx(bessel_j(0, y) - 2 * y * bessel_j(1, y), abs=1e-11)


@given(st.floats(0.0, 0.95), st.floats(0.05, 60.0))
def test_two_forms_agree(g, y):
    assert lamb_G(g, y) == pytest.approx(lamb_G_derivative_form(g, y), abs=1e-11 * (1 + y))


def test_lamb_zero_examples():
    for k in (1, 2, 3):
        assert lamb_zero(0.5, k).value == pytest.approx((2 * k - 1) * PI / 2, rel=1e-10)
    z = lamb_zero(0.0)
    assert 0.9 < z.value < 1.0 and z.value == pytest.approx(LAMB_0_1, abs=1e-9)
    assert lamb_zero(0.3).value == pytest.approx(LAMB_03_1, abs=1e-9)
    assert z.residual <= 1e-10


@pytest.mark.parametrize("g", [0.0, 0.25, 0.5, 0.75])
def test_lamb_below_bessel_and_oracle(g):
    lz = [lamb_zero(g, k).value for k in (1, 2, 3)]
    assert lz[0] < bessel_j_zero(g, 1)
    assert np.allclose(lz, oracles.lamb_zeros(g, 3), rtol=1e-10)


def test_friedrichs_spectrum_closed_form():
    s = symmetric_bessel_friedrichs_spectrum(0.5, 0.0, 2.0, 4)
    assert np.allclose(s.values(), [(m * PI / 2) ** 2 for m in range(1, 9)], rtol=1e-10)
    half = symmetric_bessel_friedrichs_spectrum(0.3, 0.0, 1.0, 3).values()
    full = symmetric_bessel_friedrichs_spectrum(0.3, 0.0, 2.0, 3).values()
    assert np.allclose(half, 4 * full, rtol=1e-12)


@pytest.mark.parametrize("g", [0.0, 0.7])
def test_lamb_constant_is_neumann_eigenvalue(g):
    half = builtin_bessel(g, 0.0, 1.0)
    assert lowest_eigenvalue(half, Separated(PI, PI / 2)) == pytest.approx(
        hardy_constant(g, 0.0, 2.0), rel=1e-7)
    assert first_eigenvalues(half, Separated(PI, PI), 2) == pytest.approx(
        [bessel_j_zero(g, k) ** 2 for k in (1, 2)], rel=1e-7)


def test_hardy_constant_examples():
    assert hardy_constant(0.5, 0.0, 1.0) == pytest.approx(PI**2, rel=1e-10)
    assert hardy_constant(0.5, 0.0, 2.0) == pytest.approx(PI**2 / 4, rel=1e-10)


def test_rayleigh_equality_at_half():
    r = rayleigh_verify(0.5, 0.0, 1.0, trial_count=1)
    assert abs(r.min_margin) <= 1e-9


@pytest.mark.parametrize("g", [0.0, 0.3, 0.5, 0.9])
def test_rayleigh_passes(g):
    assert rayleigh_verify(g, 0.0, 1.0, trial_count=200, seed=42).passed


def test_rayleigh_inflated_constant_fails():
    C = 1.01 * hardy_constant(0.5, 0.0, 1.0)
    with pytest.raises(InequalityViolated, match="coefficients"):
        rayleigh_verify(0.5, 0.0, 1.0, 200, 42, constant=C)
    r = rayleigh_verify(0.5, 0.0, 1.0, 200, 42, constant=C, raise_on_violation=False)
    assert not r.passed and r.violations[0][0] == 0
