import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from slext.boundary import b_side_data, extension_data_pack, krein_matrix
from slext.errors import ComplexCWithNonrealBoundary, NonnegativityViolated, NotNonnegative
from slext.extensions import (
    INFINITY,
    AuxB1,
    AuxB2,
    PartialOrderResult as P,
    b_side_floor,
    classify_dim1,
    classify_dim2,
    compare_dim2,
    compare_separated,
    friedrichs_spec,
    invert_spec,
    is_nonnegative,
    krein_spec,
    nonneg_range_fixed_beta,
    nonneg_range_fixed_beta_alt,
    separated_floors,
)
from slext.problem import builtin_bessel, builtin_free
from slext.specs import PI, Coupled, Separated, arccot
from slext.spectra import lowest_eigenvalue


@pytest.fixture(scope="module")
def pack():
    return extension_data_pack(builtin_free())


def test_friedrichs_spec():
    assert friedrichs_spec() == Separated(PI, PI)


def test_zero_B_is_krein(pack, free):
    s = classify_dim2(pack, AuxB2(0.0, 0.0, 0.0))
    assert isinstance(s, Coupled) and s.eta == 0.0
    assert np.allclose(s.matrix, krein_matrix(free), atol=1e-12)


@pytest.mark.parametrize("b11", [0.5, 1.5, 2.0])
def test_dim2_separated_branch(pack, b11):
    b12 = (b11 * -0.5 * (1 / 3) - 1.0) / 0.25
    b22 = 1.01 * b12**2 * 0.25 / (b11 / 3)  # just inside the nonnegative cone
    s = classify_dim2(pack, AuxB2(b11, b12, b22))
    assert isinstance(s, Separated)
    assert s.beta == pytest.approx(arccot(1 - b11 / 3), abs=1e-12)


def test_dim2_rejects_indefinite(pack):
    with pytest.raises(NonnegativityViolated):
        classify_dim2(pack, AuxB2(0.0, 1.0, 0.0))


def test_dim1_examples(pack):
    s = classify_dim1(pack, AuxB1(0.0))
    assert s.alpha == PI and s.beta == pytest.approx(PI / 4, abs=1e-12)
    s = classify_dim1(pack, AuxB1(0.0, pack.c_f))
    assert isinstance(s, Separated) and s.beta == PI
    assert s.alpha == pytest.approx(nonneg_range_fixed_beta(pack, PI), abs=1e-12)
    c = classify_dim1(pack, AuxB1(0.0, 1.0))
    assert isinstance(c, Coupled) and c.R[0][0] == pytest.approx(0.5, abs=1e-12)


def test_dim1_rejects_complex_c_and_negative_kappa(pack):
    with pytest.raises(ComplexCWithNonrealBoundary):
        classify_dim1(pack, AuxB1(1.0, 1.0 + 1.0j))
    with pytest.raises(NonnegativityViolated):
        AuxB1(-0.1)


def test_range_floor_examples(pack):
    assert nonneg_range_fixed_beta(pack, PI) == pytest.approx(PI / 4, abs=1e-12)
    assert nonneg_range_fixed_beta(pack, PI / 2) == pytest.approx(PI / 2, abs=1e-12)
    assert separated_floors(pack) == pytest.approx((PI / 4, PI / 4), abs=1e-12)


def test_range_floor_half_bessel():
    p = extension_data_pack(builtin_bessel(0.5, 0.0, 1.0))
    assert nonneg_range_fixed_beta(p, PI / 2) == pytest.approx(PI / 2, abs=1e-10)


@pytest.mark.parametrize("bp", [PI, PI / 2, 2.0, 2.8])
def test_range_floor_two_routes(free, pack, bp):
    assert b_side_floor(free, bp) == pytest.approx(nonneg_range_fixed_beta(pack, bp), abs=1e-9)


def test_alt_route_monotone_in_B(free):
    bs = b_side_data(free)
    vals = [nonneg_range_fixed_beta_alt(bs, PI, B, eta_norm2=1 / 3) for B in (0, 1, 10, 100, 1e4)]
    assert vals[0] == pytest.approx(PI / 4, abs=1e-10)
    assert all(x < y for x, y in zip(vals, vals[1:])) and vals[-1] < PI


def test_range_floor_has_zero_eigenvalue(free):
    assert abs(lowest_eigenvalue(free, Separated(PI / 4, PI))) <= 1e-7


def test_compare_separated_examples():
    assert compare_separated(Separated(PI / 2, PI), Separated(PI, PI)) is P.LESS_OR_EQUAL
    assert compare_separated(Separated(PI / 2, PI), Separated(PI, PI / 2)) is P.INCOMPARABLE
    assert compare_separated(Separated(1.0, 2.0), Separated(1.0, 2.0)) is P.EQUAL
    with pytest.raises(NotNonnegative):
        compare_separated(Separated(0.5, PI), Separated(PI, PI), PI / 4, PI / 4)


def test_compare_dim2_examples(pack):
    B = AuxB2(1.0, 0.5, 2.0)
    assert compare_dim2(AuxB2(0, 0, 0), B, pack) is P.LESS_OR_EQUAL
    assert compare_dim2(B, AuxB2(0, 0, 0), pack) is P.GREATER_OR_EQUAL
    assert compare_dim2(B, B, pack) is P.EQUAL
    assert compare_dim2(B, AuxB2(1.5, 0.9, 2.0), pack) is P.INCOMPARABLE


nonneg_B = st.tuples(st.floats(0.05, 5), st.floats(0.05, 5), st.floats(-0.95, 0.95)).map(
    lambda t: AuxB2(t[0], t[2] * math.sqrt(t[0] * t[1] * (1 / 3) / 0.25), t[1])
)


@given(nonneg_B)
def test_invert_round_trip(B):
    pack = extension_data_pack(builtin_free())
    spec = classify_dim2(pack, B)
    assume(isinstance(spec, Coupled))
    back = invert_spec(pack, spec)
    assert back["dim_W"] == 2
    for k in ("b11", "b12", "b22"):
        assert complex(back[k]) == pytest.approx(complex(getattr(B, k)), abs=1e-8 * (1 + abs(getattr(B, k))))


@given(st.floats(0.0, 20.0), st.floats(-3.0, 3.0))
def test_invert_dim1_round_trip(kappa, c):
    pack = extension_data_pack(builtin_free())
    assume(abs(c - pack.c_f) > 1e-3 and abs(c * pack.u_b + pack.v_b) > 1e-2)
    back = invert_spec(pack, classify_dim1(pack, AuxB1(kappa, c)))
    assert back["dim_W"] == 1
    assert complex(back["kappa"]).real == pytest.approx(kappa, abs=1e-8 * (1 + kappa))
    assert back["c"] == pytest.approx(c, abs=1e-9 * (1 + abs(c)))


def test_invert_separated_cases(pack):
    assert invert_spec(pack, Separated(PI, PI)) == {"dim_W": 0}
    p = invert_spec(pack, Separated(PI, PI / 4))
    assert p["c"] is INFINITY and p["kappa"] == pytest.approx(0.0, abs=1e-12)


def test_is_nonnegative_examples(free):
    r = is_nonnegative(free, Separated(PI, PI))
    assert r and r.witness["name"] == "Friedrichs"
    r = is_nonnegative(free, Separated(PI / 8, PI))
    assert not r and r.lowest_eigenvalue < 0
    r = is_nonnegative(free, krein_spec(free))
    assert r and r.kernel_dim == 2
