import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from slext.boundary import distinguished_nonprincipal, nonprincipal_solution, principal_solution
from slext.config import default_config
from slext.errors import RangeMismatch
from slext.odecore import integrate_tau, l2r_inner, solve, wronskian
from slext.problem import builtin_bessel
from slext.spectra import fundamental_system


def test_linear_solution(free):
    f = integrate_tau(free, 0.0, 1e-9, 1 - 1e-9, (1e-9, 1.0))
    y, y1 = f(np.array([0.25, 0.75]))
    assert np.allclose(y, [0.25, 0.75], atol=1e-12) and np.allclose(y1, 1.0)


def test_sine_solution(free):
    z = math.pi**2
    f = integrate_tau(free, z, 1e-12, 1 - 1e-12, (1e-12, 1.0))
    assert abs(f(1 - 1e-12)[0]) <= 1e-9


def test_bessel_zero_principal(bessel0):
    u = principal_solution(bessel0)
    assert float(u(0.5)[0]) == pytest.approx(math.sqrt(0.5), rel=1e-8)


def test_bessel_principal_power(bessel03):
    u = principal_solution(bessel03)
    assert float(u(0.7)[0]) == pytest.approx(0.7**0.8, rel=1e-8)


def test_wronskian_normalization(free):
    uh, u = nonprincipal_solution(free), principal_solution(free)
    for x in (0.1, 0.5, 0.9):
        assert wronskian(uh, u, x) == pytest.approx(1.0, abs=1e-12)
        assert wronskian(u, u, x) == 0.0


def test_wronskian_out_of_range(free):
    f = integrate_tau(free, 0.0, 0.2, 0.4, (1.0, 0.0))
    with pytest.raises(RangeMismatch):
        wronskian(f, f, 0.9)


@given(st.floats(-50, 50), st.floats(-2, 2), st.floats(-2, 2), st.floats(-2, 2), st.floats(-2, 2))
def test_wronskian_constant(z, a, b, c, d):
    P = builtin_bessel(0.3, 0.0, 1.0)
    f = solve(P, z, 0.5, (a, b))
    g = solve(P, z, 0.5, (c, d))
    xs = np.linspace(0.01, 0.99, 25)
    W = wronskian(f, g, xs)
    assert np.max(np.abs(W - W[12])) <= 1e-8 * (1 + abs(W[12]))


@given(st.floats(-50, 500))
def test_fundamental_determinant(z):
    fd = fundamental_system(builtin_bessel(0.3, 0.0, 1.0), z)
    assert fd.determinant()[0] == pytest.approx(1.0, abs=1e-8)


def test_fundamental_at_7_3(free):
    assert fundamental_system(free, 7.3).determinant()[0] == pytest.approx(1.0, abs=1e-10)


@pytest.mark.parametrize("g", [0.0, 0.25, 0.5, 0.75])
def test_norm_closed_form(g):
    P = builtin_bessel(g, 0.0, 1.0)
    u = principal_solution(P)
    q = l2r_inner(P, u, u)
    assert q.value == pytest.approx(1 / (2 + 2 * g), rel=1e-8)
    assert q.abs_error_estimate >= 0


def test_cross_inner_product_half():
    P = builtin_bessel(0.5, 0.0, 1.0)
    assert l2r_inner(P, nonprincipal_solution(P), principal_solution(P)).value == pytest.approx(0.5, rel=1e-10)


def test_distinguished_is_orthogonal(bessel03):
    v, u = distinguished_nonprincipal(bessel03), principal_solution(bessel03)
    assert abs(l2r_inner(bessel03, v, u).value) <= 1e-9


def test_tolerance_refinement_improves(free):
    z = math.pi**2
    errs = []
    for tol in (1e-6, 1e-9):
        cfg = default_config().replace(rtol=tol, atol=1e-16, method="RK45")
        f = integrate_tau(free, z, 1e-12, 1 - 1e-12, (1e-12, 1.0), cfg)
        errs.append(abs(float(f(0.5)[0]) - 1 / math.pi))
    assert errs[1] * 4 <= errs[0]
