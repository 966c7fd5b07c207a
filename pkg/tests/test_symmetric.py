import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from slext.errors import NotReflectionInvariant, NotSymmetric, UnsupportedCoupling
from slext.extensions import PartialOrderResult as P
from slext.extensions import krein_spec
from slext.problem import Interval, builtin_bessel, builtin_regular, builtin_symmetric_bessel
from slext.specs import PI, Coupled, Separated, arccot
from slext.spectra import fundamental_system
from slext.symmetric import (
    OuterCoupled,
    OuterFixed,
    OuterLimitPoint,
    check_symmetry,
    compare_coupled_symmetric,
    compare_two_interval,
    decompose,
    decompose_coupled,
    decompose_separated,
    decomposition_report,
    factorization_residual,
    half_problem,
    match_multisets,
    nu_mu,
    pack_floor_check,
    stated_factorization_residual,
    recompose_coupled,
    reflected_boundary_data,
    spec_is_reflection_invariant,
    two_interval_decompose,
    union_check,
)


@pytest.fixture(scope="module")
def free2():
    return builtin_regular(Interval(0.0, 2.0), 1.0, 0.0, 1.0)


def test_check_symmetry(sym_half, bessel03, free2):
    assert check_symmetry(sym_half) and check_symmetry(builtin_symmetric_bessel(0.3, 0.0, 2.0))
    assert not check_symmetry(bessel03)
    assert check_symmetry(free2)


def test_half_problem_requires_symmetry(bessel03):
    with pytest.raises(NotSymmetric):
        half_problem(bessel03)


def test_reflection_invariance():
    assert spec_is_reflection_invariant(Separated(PI, PI))
    assert spec_is_reflection_invariant(Coupled(0.0, np.eye(2)))
    assert not spec_is_reflection_invariant(Coupled(0.0, [[2, 1], [1, 1]]))
    assert not spec_is_reflection_invariant(Separated(1.0, 2.0))


def test_decompose_separated():
    d = decompose_separated(PI)
    assert (d.dirichlet_spec, d.neumann_spec) == (Separated(PI, PI), Separated(PI, PI / 2))
    assert decompose_separated(PI / 2).alphas == (PI / 2, PI / 2)


def test_decompose_coupled_examples():
    assert decompose_coupled(np.eye(2)) == pytest.approx((PI, PI / 2))
    assert decompose_coupled(-np.eye(2)) == pytest.approx((PI / 2, PI))
    with pytest.raises(NotReflectionInvariant):
        decompose_coupled([[2, 1], [1, 1]])


angle = st.floats(0.05, PI - 0.05)


@given(angle, angle)
def test_recompose_inverts_decompose(a, ap):
    if abs(1 / math.tan(a) - 1 / math.tan(ap)) < 1e-3:
        return
    R = recompose_coupled(a, ap)
    assert np.linalg.det(R) == pytest.approx(1.0, abs=1e-8 * (1 + np.abs(R).max() ** 2))
    assert decompose_coupled(R) == pytest.approx((a, ap), abs=1e-9)


@given(angle)
def test_recompose_special_rows(a):
    assert decompose_coupled(recompose_coupled(a, PI)) == pytest.approx((a, PI), abs=1e-10)
    assert decompose_coupled(recompose_coupled(PI, a)) == pytest.approx((PI, a), abs=1e-10)


def test_krein_matrix_maps_to_floors():
    P2 = builtin_symmetric_bessel(0.3, 0.0, 2.0)
    # the reflected z = 0 data give R_K with an exactly equal diagonal
    fd = reflected_boundary_data(fundamental_system(half_problem(P2), 0.0))
    R = np.array([[fd.theta_b[0], fd.phi_b[0]], [fd.thetap_b[0], fd.phip_b[0]]])
    assert np.allclose(R, krein_spec(P2).matrix, atol=1e-9)
    a, ap = decompose(Coupled(0.0, R)).alphas
    assert (a, ap) == pytest.approx(nu_mu(half_problem(P2)), abs=1e-8)


def test_nu_mu_examples(sym_half):
    assert nu_mu(half_problem(sym_half)) == pytest.approx((PI / 4, PI / 2), abs=1e-9)
    nu, mu = nu_mu(half_problem(builtin_symmetric_bessel(0.0, 0.0, 2.0)))
    assert nu == pytest.approx(PI / 2, abs=1e-8)
    assert mu == pytest.approx(arccot(-2.0), abs=1e-8)


@pytest.mark.parametrize("g", [0.0, 0.3, 0.7])
def test_floors_two_routes(g):
    half = half_problem(builtin_symmetric_bessel(g, 0.0, 2.0))
    nu, mu = nu_mu(half)
    alt = pack_floor_check(half)
    assert (alt["nu"], alt["mu"]) == pytest.approx((nu, mu), abs=1e-8)


def test_reflected_data_free(free2):
    half = half_problem(free2)
    fd = reflected_boundary_data(fundamental_system(half, 0.0))
    assert float(fd.phi_b[0]) == pytest.approx(2.0, abs=1e-10)


@pytest.mark.parametrize("z", [-3.0, 2.0, 17.0])
def test_reflected_data_matches_full(z):
    P2 = builtin_symmetric_bessel(0.3, 0.0, 2.0)
    a = reflected_boundary_data(fundamental_system(half_problem(P2), z))
    b = fundamental_system(P2, z)
    for k in ("theta_b", "thetap_b", "phi_b", "phip_b"):
        assert float(getattr(a, k)[0]) == pytest.approx(float(getattr(b, k)[0]), abs=1e-8)


@pytest.mark.parametrize("spec", [Separated(PI, PI), Separated(2.0, 2.0), Coupled(0.0, np.eye(2)),
                                  Coupled(0.0, [[0.5, 1.0], [-0.75, 0.5]])])
@pytest.mark.parametrize("z", [1.0, 5.0, 20.0])
def test_factorization(free2, spec, z):
    r = factorization_residual(free2, spec, z)
    assert r["residual"] <= 1e-8 * max(1.0, abs(r["full"]))


def test_stated_constant_is_off(free2):
    # the stated constant has the opposite sign to direct evaluation
    r = stated_factorization_residual(free2, Separated(PI, PI), 5.0)
    assert r["residual"] > 1e-3 * abs(r["full"])


def test_periodic_union(free2):
    res = union_check(free2, Coupled(0.0, np.eye(2)), n=6)
    assert res["ok"], res


def test_bessel_union():
    res = union_check(builtin_symmetric_bessel(0.3, 0.0, 2.0), Separated(2.0, 2.0), n=6)
    assert res["ok"], res


def test_compare_coupled_symmetric():
    fl = (0.0, 0.0)
    assert compare_coupled_symmetric(np.eye(2), np.eye(2), fl) is P.EQUAL
    assert compare_coupled_symmetric(np.eye(2), [[1, 0], [-1, 1]], fl) is P.LESS_OR_EQUAL
    assert compare_coupled_symmetric([[0, 1], [-1, 0]], [[0, 2], [-0.5, 0]], fl) is P.INCOMPARABLE


def test_two_interval_examples():
    d = two_interval_decompose(np.eye(2), OuterFixed(PI))
    assert d.specs == (Separated(PI, PI), Separated(PI / 2, PI))
    d = two_interval_decompose(-np.eye(2), OuterFixed(PI / 2))
    assert d.specs == (Separated(PI / 2, PI / 2), Separated(PI, PI / 2))
    assert two_interval_decompose(np.eye(2), OuterLimitPoint()).angles["beta_p"] == PI
    d = two_interval_decompose(np.eye(2), OuterCoupled(((-1, 0), (0, -1))))
    assert d.specs == (Separated(PI, PI / 2), Separated(PI / 2, PI))


def test_two_interval_errors():
    with pytest.raises(UnsupportedCoupling):
        two_interval_decompose(np.eye(4), OuterFixed(PI))
    with pytest.raises(NotReflectionInvariant):
        two_interval_decompose([[2, 1], [1, 1]], OuterFixed(PI))


def test_two_interval_order():
    a = two_interval_decompose(np.eye(2), OuterFixed(PI / 2))
    b = two_interval_decompose(np.eye(2), OuterFixed(PI))
    assert compare_two_interval(a, b) is P.LESS_OR_EQUAL
    assert compare_two_interval(a, a) is P.EQUAL


def test_match_multisets():
    r = match_multisets([1, 2, 2], [2, 1, 2 + 1e-9])
    assert r["ok"] and r["max_error"] <= 1e-8
    r = match_multisets([1, 2], [1, 3])
    assert not r["ok"] and r["unmatched_left"] == [2.0]


def test_report_lines(sym_half):
    text = decomposition_report(sym_half, Separated(PI, PI))
    keys = [line.split(":")[0] for line in text.splitlines()]
    for k in ("problem", "source", "alpha", "alpha_p", "dirichlet_piece", "neumann_piece", "nonnegative"):
        assert k in keys
    assert "nonnegative: yes" in text
