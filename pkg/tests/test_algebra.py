import cmath
import json
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nctorus.algebra import (
    ThetaMatrix,
    ThetaMismatchError,
    TorusElement,
    derive,
    grade_decompose,
    homogeneous_degree,
    multiply,
    star,
    trace,
)

from oracles import product_oracle

THETA = ThetaMatrix(0.6180339887498949, 0.41421356237309515, 0.7320508075688772)
TUPLE = (THETA.theta21, THETA.theta31, THETA.theta32)

angles = st.floats(min_value=-2.0, max_value=2.0, allow_nan=False)
thetas = st.builds(ThetaMatrix, angles, angles, angles)
index = st.integers(min_value=-3, max_value=3)
coeff = st.complex_numbers(max_magnitude=2.0, allow_nan=False, allow_infinity=False)
coeff_maps = st.dictionaries(st.tuples(index, index, index), coeff, max_size=4)


def elem(coeffs, theta=THETA):
    return TorusElement(theta, coeffs)


def mono(k, l, m, c=1.0):
    return TorusElement.monomial(THETA, k, l, m, c)


def as_dict(a):
    return dict(a.coeffs)


def close(a, b, tol=1e-11):
    keys = set(a) | set(b)
    return all(abs(a.get(k, 0) - b.get(k, 0)) <= tol for k in keys)


# examples ---------------------------------------------------------------------------


def test_commutation_relation():
    lhs = multiply(mono(0, 1, 0), mono(1, 0, 0))
    assert lhs.allclose(mono(1, 1, 0, cmath.exp(2j * math.pi * THETA.theta21)))


def test_unit_is_neutral():
    a = elem({(1, 2, -1): 1 + 2j, (0, 0, 3): -0.5})
    one = TorusElement.one(THETA)
    assert multiply(one, a).allclose(a) and multiply(a, one).allclose(a)


def test_product_against_rewriting_oracle():
    a, b = mono(1, 0, 1), mono(0, 1, -1)
    assert close(as_dict(multiply(a, b)), product_oracle({(1, 0, 1): 1}, {(0, 1, -1): 1}, TUPLE))


def test_theta_mismatch_is_rejected():
    other = ThetaMatrix(0.1, 0.2, 0.3)
    with pytest.raises(ThetaMismatchError):
        multiply(mono(1, 0, 0), TorusElement.monomial(other, 1, 0, 0))


def test_star_examples():
    assert star(mono(1, 0, 0)).allclose(mono(-1, 0, 0))
    u12 = mono(1, 1, 0)
    # (U1 U2)^* = U2^-1 U1^-1, normal ordered by the rewriting oracle
    expected = product_oracle({(0, -1, 0): 1}, {(-1, 0, 0): 1}, TUPLE)
    assert close(as_dict(star(u12)), expected)
    a = elem({(1, -2, 1): 0.3 - 1j, (0, 1, 0): 2})
    assert star(star(a)).allclose(a)


def test_trace_examples():
    assert trace(TorusElement.one(THETA)) == 1
    assert trace(mono(1, 0, 0)) == 0
    x, y = mono(1, 1, 0), star(mono(1, 1, 0))
    assert abs(trace(multiply(x, y)) - 1) < 1e-14
    assert abs(trace(multiply(x, y)) - trace(multiply(y, x))) < 1e-14


def test_derivation_examples():
    assert derive(mono(0, 0, 1), 3).allclose(mono(0, 0, 1))
    for j in (1, 2, 3):
        assert derive(TorusElement.one(THETA), j).is_zero()
    assert derive(mono(2, 1, 0), 1).allclose(mono(2, 1, 0, 2.0))


def test_grading_examples():
    parts = grade_decompose(mono(1, 0, 0) + mono(0, 0, 1))
    assert [(p.degree, p.element) for p in parts] == [(0, mono(1, 0, 0)), (1, mono(0, 0, 1))]
    assert [p.degree for p in grade_decompose(mono(2, -1, 0) + mono(1, 0, 0))] == [0]
    a = multiply(mono(0, 0, -1), mono(1, 0, 0)) + mono(0, 0, 2)
    assert [p.degree for p in grade_decompose(a)] == [-1, 2]
    with pytest.raises(ValueError):
        homogeneous_degree(a)


def test_base_membership():
    assert mono(3, -2, 0).in_base()
    assert not (mono(3, -2, 0) + mono(0, 0, 1)).in_base()


def test_zero_coefficients_are_dropped():
    a = elem({(1, 0, 0): 1.0, (0, 1, 0): 0.0})
    assert a.support() == [(1, 0, 0)]
    assert (a - a).is_zero()


def test_json_round_trip_is_sorted():
    a = elem({(1, -1, 0): 1 - 1j, (-2, 0, 1): 0.5})
    data = a.to_json()
    assert [(c["k"], c["l"], c["m"]) for c in data["coeffs"]] == sorted(a.coeffs)
    back = TorusElement.from_json(json.loads(json.dumps(data)))
    assert back == a and back.theta == THETA


def test_json_rejects_malformed_coefficients():
    with pytest.raises(ValueError):
        TorusElement.from_json({"theta": THETA.to_json(), "coeffs": [{"k": 1, "l": 0, "re": 1.0}]})


# properties -------------------------------------------------------------------------


@settings(max_examples=60, deadline=None)
@given(thetas, coeff_maps, coeff_maps)
def test_multiply_matches_rewriting_oracle(theta, a, b):
    got = multiply(elem(a, theta), elem(b, theta))
    ref = product_oracle(a, b, (theta.theta21, theta.theta31, theta.theta32))
    assert close(as_dict(got), ref, 1e-10)


@settings(max_examples=60, deadline=None)
@given(thetas, coeff_maps, coeff_maps, coeff_maps)
def test_associativity(theta, a, b, c):
    a, b, c = elem(a, theta), elem(b, theta), elem(c, theta)
    assert multiply(multiply(a, b), c).allclose(multiply(a, multiply(b, c)), 1e-10)


@settings(max_examples=60, deadline=None)
@given(thetas, coeff_maps, coeff_maps)
def test_star_is_antimultiplicative(theta, a, b):
    a, b = elem(a, theta), elem(b, theta)
    assert star(multiply(a, b)).allclose(multiply(star(b), star(a)), 1e-10)
    assert abs(star(a).max_abs() - a.max_abs()) < 1e-12


@settings(max_examples=60, deadline=None)
@given(thetas, coeff_maps, coeff_maps)
def test_trace_property(theta, a, b):
    a, b = elem(a, theta), elem(b, theta)
    assert abs(trace(multiply(a, b)) - trace(multiply(b, a))) < 1e-10


@settings(max_examples=60, deadline=None)
@given(thetas, coeff_maps, coeff_maps, st.sampled_from([1, 2, 3]))
def test_leibniz_and_star_compatibility(theta, a, b, j):
    a, b = elem(a, theta), elem(b, theta)
    lhs = derive(multiply(a, b), j)
    rhs = multiply(derive(a, j), b) + multiply(a, derive(b, j))
    assert lhs.allclose(rhs, 1e-10)
    assert derive(star(a), j).allclose(-star(derive(a, j)), 1e-12)


@settings(max_examples=60, deadline=None)
@given(coeff_maps, coeff_maps)
def test_grading_is_additive(a, b):
    a, b = elem(a), elem(b)
    total = TorusElement.zero(THETA)
    for part in grade_decompose(a):
        assert derive(part.element, 3).allclose(part.element * part.degree)
        total = total + part.element
    assert total == a
    for pa in grade_decompose(a):
        for pb in grade_decompose(b):
            prod = multiply(pa.element, pb.element)
            if not prod.is_zero():
                assert homogeneous_degree(prod) == pa.degree + pb.degree
