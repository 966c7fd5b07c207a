import json
import math

import numpy as np
import pytest

from slext.errors import GammaOutOfRange, NonPositiveCoefficient, ProblemFileError, WronskianNotNormalized
from slext.problem import (
    CoefficientSet,
    Endpoint,
    EndpointKind,
    Interval,
    bessel_seed,
    builtin_bessel,
    builtin_regular,
    builtin_symmetric_bessel,
    classify_endpoint,
    constant_coefficient_seed,
    distance_to_boundary,
    load_problem_file,
    make_problem,
    problem_from_dict,
)
from slext.spectra import first_eigenvalues
from slext.specs import PI, Separated


def _one(x):
    return np.ones_like(np.asarray(x, dtype=float))


def _zero(x):
    return np.zeros_like(np.asarray(x, dtype=float))


def free_coeffs():
    return CoefficientSet(_one, _zero, _one)


def test_free_problem_from_seeds():
    iv = Interval(0.0, 1.0)
    P = make_problem(iv, free_coeffs(), constant_coefficient_seed(1.0, 0.0, Endpoint.LEFT),
                     constant_coefficient_seed(1.0, 0.0, Endpoint.RIGHT))
    assert P.a == 0.0 and P.b == 1.0


def test_seed_wronskian_must_be_one():
    good = constant_coefficient_seed(1.0, 0.0, Endpoint.LEFT)

    def doubled(t):
        y, y1 = good.nonprincipal(t)
        return 2 * y, 2 * y1

    bad = type(good)(good.kind, good.principal, doubled, good.seed_offset, good.reach)
    with pytest.raises(WronskianNotNormalized):
        make_problem(Interval(0.0, 1.0), free_coeffs(), bad,
                     constant_coefficient_seed(1.0, 0.0, Endpoint.RIGHT))


def test_negative_weight_rejected():
    co = CoefficientSet(_one, _zero, lambda x: -_one(x))
    with pytest.raises(NonPositiveCoefficient):
        make_problem(Interval(0.0, 1.0), co, constant_coefficient_seed(1.0, 0.0, Endpoint.LEFT),
                     constant_coefficient_seed(1.0, 0.0, Endpoint.RIGHT))


def test_bessel_half_is_free_seed():
    s = bessel_seed(0.5)
    t = np.array([0.1, 0.4])
    uh, uh1 = s.nonprincipal(t)
    u, u1 = s.principal(t)
    assert np.allclose(u, t) and np.allclose(uh, 1.0)


def test_bessel_zero_log_seed():
    s = bessel_seed(0.0)
    t = np.array([0.2, 0.5])
    uh, _ = s.nonprincipal(t)
    assert np.allclose(uh, np.sqrt(t) * np.log(1 / t))


@pytest.mark.parametrize("g", [1.0, -0.1, 1.5])
def test_gamma_out_of_range(g):
    with pytest.raises(GammaOutOfRange):
        builtin_bessel(g, 0.0, 1.0)


@pytest.mark.parametrize("g", [0.0, 0.25, 0.5, 0.75])
def test_seed_wronskian_normalized(g):
    P = builtin_bessel(g, 0.0, 1.0)
    t = np.geomspace(1e-6, 0.2, 10)
    uh, uh1, u, u1 = P.seed_values(Endpoint.LEFT, t)
    assert np.max(np.abs(uh * u1 - uh1 * u - 1)) <= 1e-9


def test_symmetric_bessel_coefficients():
    P = builtin_symmetric_bessel(0.0, 0.0, 2.0)
    assert P.coeffs.q(np.array(1.0)) == pytest.approx(-0.25)
    g = 0.3
    Q = builtin_symmetric_bessel(g, 0.0, 2.0)
    assert float(Q.coeffs.q(np.array(1.5))) == pytest.approx((g * g - 0.25) / 0.25)
    assert float(distance_to_boundary(1.5, 0.0, 2.0)) == 0.5
    xs = np.linspace(0.05, 0.95, 17)
    assert np.allclose(Q.coeffs.q(xs), Q.coeffs.q(2.0 - xs), rtol=1e-12, atol=0)


def test_symmetric_bessel_half_is_free():
    P = builtin_symmetric_bessel(0.5, 0.0, 2.0)
    assert np.all(P.coeffs.q(np.linspace(0.1, 1.9, 9)) == 0)


def test_regular_matches_free_bessel():
    a = first_eigenvalues(builtin_regular((0.0, 1.0), 1.0, 0.0, 1.0), Separated(PI, PI), 4)
    b = first_eigenvalues(builtin_bessel(0.5, 0.0, 1.0), Separated(PI, PI), 4)
    assert np.allclose(a, b, rtol=1e-9)


def test_regular_on_zero_pi():
    ev = first_eigenvalues(builtin_regular((0.0, PI), 1.0, 0.0, 1.0), Separated(PI, PI), 4)
    assert np.allclose(ev, [1, 4, 9, 16], rtol=1e-9)


def test_potential_shift():
    base = first_eigenvalues(builtin_regular((0.0, 1.0), 1.0, 0.0, 2.0), Separated(PI, 1.0), 3)
    shifted = first_eigenvalues(builtin_regular((0.0, 1.0), 1.0, 5.0, 2.0), Separated(PI, 1.0), 3)
    assert np.allclose(shifted - base, 2.5, atol=1e-8)


def test_classify_endpoint():
    assert classify_endpoint(builtin_bessel(0.3, 0.0, 1.0), "a") is EndpointKind.LIMIT_CIRCLE
    assert classify_endpoint(builtin_regular((0.0, 1.0)), "a") is EndpointKind.REGULAR
    assert classify_endpoint(builtin_bessel(0.3, 0.0, 1.0), "b") is EndpointKind.REGULAR


def test_classify_endpoint_limit_point():
    # x^-2 coupling 2 (gamma = 3/2) with its own power seeds
    g = 1.5

    def principal(t):
        return t ** (0.5 + g), (0.5 + g) * t ** (g - 0.5)

    def nonprincipal(t):
        return t ** (0.5 - g) / (2 * g), (0.5 - g) * t ** (-0.5 - g) / (2 * g)

    co = CoefficientSet(_one, lambda x: (g * g - 0.25) / np.asarray(x, dtype=float) ** 2, _one)
    seed = type(bessel_seed(0.3))(EndpointKind.LIMIT_CIRCLE, principal, nonprincipal, None, 0.25)
    P = make_problem(Interval(0.0, 1.0), co, seed, builtin_bessel(0.3, 0.0, 1.0).seed_b)
    assert classify_endpoint(P, "a") is not EndpointKind.LIMIT_CIRCLE


def test_problem_file_roundtrip(tmp_path):
    f = tmp_path / "p.json"
    f.write_text(json.dumps({"label": "b", "interval": {"a": 0, "b": 1}, "family": "bessel", "gamma": 0.3}))
    P = load_problem_file(f)
    assert P.label == "b" and P.gamma == 0.3


def test_problem_file_custom_coefficients():
    P = problem_from_dict({"interval": {"a": 0, "b": 1}, "family": "custom",
                           "coefficients": {"p": "1", "q": "x^2", "r": "1 + x"}})
    assert float(P.coeffs.q(np.array(0.5))) == pytest.approx(0.25)
    ev = first_eigenvalues(P, Separated(PI, PI), 1)
    assert 0 < ev[0] < PI**2


@pytest.mark.parametrize("bad", [{}, {"interval": {"a": 0}}, {"interval": {"a": 0, "b": 1}, "family": "x"}])
def test_problem_file_errors(bad):
    with pytest.raises(ProblemFileError):
        problem_from_dict(bad)


def test_missing_problem_file(tmp_path):
    with pytest.raises(ProblemFileError):
        load_problem_file(tmp_path / "missing.json")


@pytest.mark.parametrize("g", [0.0, 0.25, 0.5, 0.75])
def test_principal_norm_closed_form(g):
    from slext.boundary import principal_solution
    from slext.odecore import l2r_inner

    P = builtin_bessel(g, 0.0, 1.0)
    u = principal_solution(P)
    assert l2r_inner(P, u, u).value == pytest.approx(1 / (2 + 2 * g), rel=1e-8)


def test_interval_mid():
    assert Interval(1.0, 3.0).mid == 2.0
    assert math.isclose(Interval(0.0, 2.0).length, 2.0)
