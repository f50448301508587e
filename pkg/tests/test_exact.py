import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from schrosym.exact import (
    ArityError,
    GaussianRational,
    LaurentPoly,
    PoleError,
    RationalMatrix,
    rref,
    rref_nullspace,
)
from schrosym.exact.scalars import I

from conftest import laurent

T = LaurentPoly.var(2, 0)
X = LaurentPoly.var(2, 1)


def test_difference_of_squares():
    assert (X + T) * (X - T) == X**2 - T**2


def test_scale_laurent():
    assert (X**-2).scale(2).scale(Fraction(3, 2)) == (X**-2).scale(3)


def test_add_zero_is_identity():
    p = X**3 - T * X + 7
    assert p + LaurentPoly.zero(2) == p


def test_power_rule_negative_exponents():
    U = (X**-2).scale(2)
    assert U.diff(1) == (X**-3).scale(-4)
    assert U.diff(1, 4) == (X**-6).scale(240)
    assert (X**2 - T**2).diff(0) == T.scale(-2)


def test_derivative_of_constant_is_zero():
    assert LaurentPoly.constant(2, 5).diff(1).is_zero()


def test_evaluate():
    U = (X**-2).scale(2)
    assert U.evaluate([0, 0.5]) == pytest.approx(8)
    assert (X**2 - T**2).evaluate([1, 1]) == 0
    with pytest.raises(PoleError):
        (X**-1).evaluate([0, 0])


def test_arity_mismatch():
    with pytest.raises(ArityError):
        LaurentPoly.var(2, 1) + LaurentPoly.var(3, 1)


def test_no_stored_zeros():
    p = X + T - X
    assert p == T
    assert all(c for c in p.terms.values())


def test_gaussian_rational_basics():
    z = GaussianRational(Fraction(1, 2), Fraction(-3, 4))
    assert z.conjugate().conjugate() == z
    assert z.norm2() == Fraction(13, 16)
    assert z * z.inverse() == GaussianRational(1)
    assert I * I == GaussianRational(-1)
    assert GaussianRational(Fraction(2, 4)).re == Fraction(1, 2)


@settings(max_examples=60, deadline=None)
@given(laurent(3), laurent(3), st.integers(0, 2))
def test_leibniz(p, q, v):
    assert (p * q).diff(v) == p.diff(v) * q + p * q.diff(v)


@settings(max_examples=60, deadline=None)
@given(laurent(2, 6))
def test_mixed_partials_commute(p):
    assert p.diff(0).diff(1) == p.diff(1).diff(0)


@settings(max_examples=60, deadline=None)
@given(laurent(2), laurent(2), laurent(2))
def test_ring_axioms(a, b, c):
    assert (a * b) * c == a * (b * c)
    assert a * b == b * a
    assert a * (b + c) == a * b + a * c


@settings(max_examples=60, deadline=None)
@given(laurent(3), laurent(3), st.tuples(*[st.floats(0.5, 1.5)] * 3), st.tuples(*[st.sampled_from([-1, 1])] * 3))
def test_eval_multiplicative(a, b, mag, sign):
    pt = [m * s for m, s in zip(mag, sign)]
    lhs = (a * b).evaluate(pt)
    rhs = a.evaluate(pt) * b.evaluate(pt)
    assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(rhs), abs(a.evaluate(pt)) * abs(b.evaluate(pt)))


def test_rref_examples():
    r, ns = rref_nullspace(RationalMatrix.from_dense([[1, 2], [2, 4]]))
    assert r == 1
    assert ns == [[GaussianRational(-2), GaussianRational(1)]]
    r, ns = rref_nullspace(RationalMatrix.identity(3))
    assert (r, ns) == (3, [])
    r, ns = rref_nullspace(RationalMatrix.zeros(2, 3))
    assert r == 0 and len(ns) == 3


def _random_sparse(rng, rows, cols, density=0.08):
    entries = {}
    for i in range(rows):
        for j in range(cols):
            if rng.random() < density:
                re = Fraction(rng.randint(-4, 4), rng.randint(1, 3))
                im = Fraction(rng.randint(-1, 1)) if rng.random() < 0.3 else 0
                entries[(i, j)] = GaussianRational(re, im)
    return RationalMatrix(rows, cols, entries)


@pytest.mark.parametrize("seed", range(6))
def test_rank_nullity_random(seed):
    rng = random.Random(seed)
    rows, cols = rng.randint(1, 50), rng.randint(1, 80)
    A = _random_sparse(rng, rows, cols)
    r, ns = rref_nullspace(A)
    assert r + len(ns) == cols
    assert all(A.annihilates(v) for v in ns)


def test_low_rank_product():
    rng = random.Random(7)
    B = _random_sparse(rng, 30, 4, 0.9)
    C = _random_sparse(rng, 4, 60, 0.9)
    dense_b, dense_c = B.to_dense(), C.to_dense()
    prod = [[sum((dense_b[i][k] * dense_c[k][j] for k in range(4)), GaussianRational(0)) for j in range(60)]
            for i in range(30)]
    r, ns = rref_nullspace(RationalMatrix.from_dense(prod))
    assert r <= 4
    assert r + len(ns) == 60


def test_rref_idempotent_and_deterministic():
    rng = random.Random(3)
    A = _random_sparse(rng, 20, 30, 0.2)
    first = rref(A)
    again = rref(RationalMatrix.from_rows(first.reduced_rows, A.cols))
    assert again.reduced_rows == first.reduced_rows
    assert rref(A).nullspace == first.nullspace
