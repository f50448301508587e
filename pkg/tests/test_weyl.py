import random
from fractions import Fraction

import pytest

from schrosym.exact import GaussianRational, LaurentPoly
from schrosym.exact.scalars import I
from schrosym.weyl import (
    DiffOp,
    OperatorError,
    SymTensorField,
    anticommutator,
    build_L,
    commutator,
    commutator_with_L,
    nested_anticommutator,
    multiplicity,
    op_compose,
    sorted_indices,
)

from conftest import rand_poly

N = 2
X = LaurentPoly.var(N, 1)
T = LaurentPoly.var(N, 0)
Dx = DiffOp.partial(N, 1)
Dt = DiffOp.partial(N, 0)


def mult(p):
    return DiffOp.multiplication(p)


def test_compose_examples():
    assert op_compose(Dx, mult(X)) == Dx.left_multiply(X) + DiffOp.identity(N)
    q = Dx.left_multiply(X**2) + mult(T)
    assert op_compose(DiffOp.identity(N), q) == q
    lhs = op_compose(DiffOp.partial(N, 1, 2), mult(X**2))
    rhs = DiffOp.partial(N, 1, 2).left_multiply(X**2) + Dx.left_multiply(X.scale(4)) + DiffOp.identity(N).scale(2)
    assert lhs == rhs


def test_commutator_examples():
    assert commutator(Dx, mult(X)) == DiffOp.identity(N)
    assert commutator(Dx, Dt).is_zero()
    assert commutator(DiffOp.partial(N, 1, 2), mult(X)) == Dx.scale(2)


def test_nested_anticommutator_examples():
    one = LaurentPoly.constant(N, 1)
    assert nested_anticommutator(SymTensorField(2, 1, {(1, 1): one})) == DiffOp.partial(N, 1, 2).scale(4)
    assert nested_anticommutator(SymTensorField(1, 1, {(1,): X})) == Dx.left_multiply(X.scale(2)) + DiffOp.identity(N)
    a = Fraction(5, 3)
    K3 = SymTensorField(3, 1, {(1, 1, 1): LaurentPoly.constant(N, a)})
    assert nested_anticommutator(K3) == DiffOp.partial(N, 1, 3).scale(8 * a)
    K0 = SymTensorField.scalar(X**2)
    assert nested_anticommutator(K0) == mult(X**2)


def test_build_L_examples():
    half = Fraction(1, 2)
    assert build_L(1) == Dt.scale(I) + DiffOp.partial(N, 1, 2).scale(half)
    L2 = build_L(2)
    assert L2 == (DiffOp.partial(3, 0).scale(I) + DiffOp.partial(3, 1, 2).scale(half)
                  + DiffOp.partial(3, 2, 2).scale(half))
    assert build_L(1, 1, X**-2) == build_L(1) - mult(X**-2)
    with pytest.raises(OperatorError):
        build_L(1, 1, T)


def test_commutator_with_L_examples():
    L = build_L(1)
    assert commutator_with_L(L, Dx).is_zero()
    assert commutator_with_L(L, mult(X)) == Dx
    boost = Dx.left_multiply(T) - mult(X.scale(I))
    assert commutator_with_L(L, boost).is_zero()
    with pytest.raises(OperatorError):
        commutator_with_L(L, Dt)


def test_plane_wave_sign():
    # e^{i(kx - k^2 t/2)} solves L psi = 0 only with p^2 = -Laplacian; check on symbols
    L = build_L(1)
    k = Fraction(3)
    symbol = L.coefficient((1, 0)).coefficient((0, 0)) * GaussianRational(0, -k * k / 2) \
        + L.coefficient((0, 2)).coefficient((0, 0)) * GaussianRational(0, k) ** 2
    assert symbol == 0


def _rand_op(rng, nvars=2, order=2):
    terms = {}
    for _ in range(3):
        alpha = tuple(rng.randint(0, order) for _ in range(nvars))
        while sum(alpha) > order:
            alpha = tuple(max(0, a - 1) for a in alpha)
        terms[alpha] = rand_poly(rng, nvars, 3, -1, 2)
    return DiffOp(nvars, terms)


@pytest.mark.parametrize("seed", range(8))
def test_associativity(seed):
    rng = random.Random(seed)
    a, b, c = (_rand_op(rng) for _ in range(3))
    assert op_compose(op_compose(a, b), c) == op_compose(a, op_compose(b, c))


@pytest.mark.parametrize("seed", range(8))
def test_antisymmetry_and_jacobi(seed):
    rng = random.Random(100 + seed)
    a, b, c = (_rand_op(rng) for _ in range(3))
    assert commutator(a, b) == -commutator(b, a)
    jac = commutator(a, commutator(b, c)) + commutator(b, commutator(c, a)) + commutator(c, commutator(a, b))
    assert jac.is_zero()
    assert anticommutator(a, b) == anticommutator(b, a)


@pytest.mark.parametrize("m,j", [(1, 1), (1, 3), (2, 2), (2, 3), (3, 2)])
def test_leading_coefficient(m, j):
    rng = random.Random(m * 10 + j)
    comps = {idx: rand_poly(rng, m + 1, 2, 0, 2) for idx in sorted_indices(j, m)}
    Q = nested_anticommutator(SymTensorField(j, m, comps))
    for idx, p in comps.items():
        alpha = [0] * (m + 1)
        for a in idx:
            alpha[a] += 1
        assert Q.coefficient(alpha) == p.scale(2**j * multiplicity(idx))
    assert Q.order() == j


@pytest.mark.parametrize("m", [1, 2, 3])
def test_translations_commute_with_free_L(m):
    L = build_L(m, Fraction(2, 3))
    for a in range(1, m + 1):
        assert commutator_with_L(L, DiffOp.partial(m + 1, a)).is_zero()


@pytest.mark.parametrize("mass", [1, Fraction(1, 2), 3])
def test_boost_with_mass(mass):
    L = build_L(1, mass)
    boost = Dx.left_multiply(T) - mult(X.scale(I * GaussianRational(mass)))
    assert commutator_with_L(L, boost).is_zero()
