import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from slext.errors import DetNotOne
from slext.extensions import krein_spec
from slext.problem import builtin_bessel, builtin_free, builtin_regular
from slext.problem import Interval
from slext.specs import PI, Coupled, Separated, parse_spec
from slext.spectra import (
    Spectrum,
    char_coupled,
    char_coupled_real,
    char_separated,
    characteristic,
    eigenvalues,
    first_eigenvalues,
    fundamental_system,
    lowest_eigenvalue,
)
from slext import oracles


@pytest.fixture(scope="module")
def free2():
    return builtin_regular(Interval(0.0, 2.0), 1.0, 0.0, 1.0)


def test_fundamental_free_zero(free):
    fd = fundamental_system(free, 0.0)
    assert (fd.theta_b, fd.thetap_b, fd.phi_b, fd.phip_b) == pytest.approx((1, 0, 1, 1), abs=1e-10)
    assert fd.determinant() == pytest.approx(1.0, abs=1e-10)


def test_fundamental_vectorized(free):
    zs = np.array([1.0, 4.0, 9.0])
    fd = fundamental_system(free, zs)
    assert np.allclose(fd.phi_b, np.sin(np.sqrt(zs)) / np.sqrt(zs), atol=1e-10)


def test_char_separated_values(free):
    for k in (1, 2, 3):
        assert char_separated(fundamental_system(free, (k * PI) ** 2), PI, PI) == pytest.approx(0, abs=1e-9)
    assert char_separated(fundamental_system(free, 1.0), PI, PI) == pytest.approx(math.sin(1.0), abs=1e-10)
    # with this sign convention the Neumann-Dirichlet value at z = 0 is +theta(b)
    assert char_separated(fundamental_system(free, 0.0), PI / 2, PI) == pytest.approx(1.0, abs=1e-10)


def test_char_coupled_periodic(free2):
    for k in (1, 2):
        fd = fundamental_system(free2, (k * PI) ** 2)
        assert char_coupled_real(fd, 0.0, np.eye(2)) == pytest.approx(0, abs=1e-8)


def test_char_coupled_real_when_eta_zero(free2, rng):
    R = np.array([[2.0, 1.0], [1.0, 1.0]])
    for z in rng.uniform(-5, 40, 5):
        v = char_coupled(fundamental_system(free2, z), 0.0, R)
        assert abs(np.imag(v)) <= 1e-12 * (1 + abs(v))


def test_char_coupled_checks_det(free):
    with pytest.raises(DetNotOne):
        char_coupled(fundamental_system(free, 1.0), 0.0, [[2.0, 0.0], [0.0, 1.0]])


def test_krein_double_root(free):
    R = krein_spec(free).matrix
    vals = [char_coupled_real(fundamental_system(free, z), 0.0, R) for z in (-1e-3, 0.0, 1e-3)]
    assert abs(vals[1]) <= 1e-10
    assert vals[0] * vals[2] > 0  # touches zero without crossing
    s = eigenvalues(free, krein_spec(free), n_max=3)
    assert s.eigenvalues[0].multiplicity == 2 and abs(s.eigenvalues[0].value) <= 1e-7


def test_dirichlet_spectrum(free):
    assert np.allclose(first_eigenvalues(free, Separated(PI, PI), 5), oracles.free_dirichlet(5), rtol=1e-8)


def test_dirichlet_neumann(free):
    want = ((2 * np.arange(1, 4) - 1) * PI / 2) ** 2
    assert np.allclose(first_eigenvalues(free, Separated(PI, PI / 2), 3), want, rtol=1e-8)


def test_periodic_multiplicities(free2):
    s = eigenvalues(free2, Coupled(0.0, np.eye(2)), n_max=5)
    assert s.values(5) == pytest.approx([0, PI**2, PI**2, 4 * PI**2, 4 * PI**2], abs=1e-7)
    assert [e.multiplicity for e in s.eigenvalues[:3]] == [1, 2, 2]


def test_lowest_eigenvalue_examples(free):
    assert lowest_eigenvalue(free, Separated(PI, PI)) == pytest.approx(PI**2, rel=1e-8)
    assert abs(lowest_eigenvalue(free, Separated(PI / 4, PI))) <= 1e-7
    assert lowest_eigenvalue(free, Separated(PI / 8, PI)) < 0


def test_negative_eigenvalue_closed_form(free):
    # cot(alpha) = 2 with Dirichlet at b: eigenfunction sinh(k(1-x)), tanh(k) = k/2
    from scipy.optimize import brentq
    k = brentq(lambda k: math.tanh(k) - k / 2, 1.0, 3.0)
    assert lowest_eigenvalue(free, Separated(math.atan2(1, 2), PI)) == pytest.approx(-k * k, rel=1e-8)


def test_bessel_against_oracle(bessel03):
    want = oracles.bessel_zeros(0.3, 4) ** 2
    assert np.allclose(first_eigenvalues(bessel03, Separated(PI, PI), 4), want, rtol=1e-8)


def test_characteristic_dispatch(free):
    assert characteristic(free, {"type": "separated", "alpha": PI, "beta": PI}, 1.0) == pytest.approx(
        math.sin(1.0), abs=1e-10)


def test_csv_round_trip(free):
    s = eigenvalues(free, Separated(PI, PI), n_max=4)
    back = Spectrum.from_csv(s.to_csv())
    assert np.array_equal(back.values(), s.values())
    assert [e.multiplicity for e in back.eigenvalues] == [e.multiplicity for e in s.eigenvalues]


def test_json_shape(free):
    d = eigenvalues(free, Separated(PI, PI), n_max=2).to_dict()
    assert d["spec"] == {"type": "separated", "alpha": PI, "beta": PI}
    assert [e["index"] for e in d["eigenvalues"]] == [1, 2]


@settings(max_examples=8)
@given(st.floats(0.3, PI - 0.3))
def test_interlacing_dirichlet_neumann(beta):
    # changing one boundary condition interlaces the two spectra
    P = builtin_free()
    a = first_eigenvalues(P, Separated(PI, beta), 4)
    b = first_eigenvalues(P, Separated(PI, PI), 4)
    assert np.all(a <= b + 1e-9) and np.all(b[:-1] <= a[1:] + 1e-9)


@settings(max_examples=6)
@given(st.floats(0.9, 2.0), st.floats(0.05, 0.8))
def test_monotone_in_alpha(a1, da):
    P = builtin_bessel(0.3, 0.0, 1.0)
    lo = first_eigenvalues(P, Separated(a1, PI), 3)
    hi = first_eigenvalues(P, Separated(min(a1 + da, PI), PI), 3)
    assert np.all(lo <= hi + 1e-9)


def test_parse_spec_roundtrip():
    s = parse_spec({"type": "coupled", "eta": 0.0, "R": [[1, 0], [-1, 1]]})
    assert parse_spec(s.to_dict()).to_dict() == s.to_dict()
