import random
from itertools import product
from fractions import Fraction

import pytest

from schrosym.deteqs import (
    Ansatz,
    DetEqError,
    compare_solution_spaces,
    generate_det_system,
    instantiate,
    operator_in_span,
    oracle_system,
    random_potential,
    solution_operators,
    v_coupling,
)
from schrosym.exact import LaurentPoly, RationalMatrix, rref_nullspace
from schrosym.exact.scalars import I
from schrosym.killing import ansatz_bounds
from schrosym.weyl import DiffOp, SymTensorField, gradient_tensor, symmetrize, symmetrize_tensor

from conftest import rand_poly


def uniform_bounds(n, deg):
    return {j: (deg, deg) for j in range(n + 1)}


def test_symmetrize_examples():
    x1 = LaurentPoly.var(2, 1)
    K = SymTensorField(1, 1, {(1,): x1**3})
    assert symmetrize(K)[(1, 1)] == (x1**2).scale(3)

    x1, x2 = LaurentPoly.var(3, 1), LaurentPoly.var(3, 2)
    S = symmetrize(SymTensorField(1, 2, {(1,): x2}))
    assert S[(1, 2)] == LaurentPoly.constant(3, Fraction(1, 2))
    assert S[(2, 1)] == S[(1, 2)]
    rot = SymTensorField(1, 2, {(1,): x2, (2,): -x1})
    assert not symmetrize(rot).components


@pytest.mark.parametrize("rank,dim", [(1, 2), (2, 2), (2, 3), (3, 2)])
def test_symmetrize_idempotent(rank, dim):
    rng = random.Random(rank * 7 + dim)
    T = {idx: rand_poly(rng, dim + 1, 2) for idx in product(range(1, dim + 1), repeat=rank)}
    once = symmetrize_tensor(T, rank, dim, dim + 1)
    twice = symmetrize_tensor(once, rank, dim, dim + 1)
    assert once == twice


def test_symmetrize_matches_full_average():
    rng = random.Random(5)
    comps = {(1, 1): rand_poly(rng, 3), (1, 2): rand_poly(rng, 3), (2, 2): rand_poly(rng, 3)}
    K = SymTensorField(2, 2, comps)
    full = symmetrize_tensor(gradient_tensor(K), 3, 2, 3)
    fast = symmetrize(K)
    for idx, p in full.items():
        assert fast[idx] == p


def test_n1_m1_structure():
    s = generate_det_system(1, 1)
    assert len(s.equations) == 3
    top, mid, low = s.equations
    assert top.rank == 2 and [(t.rank, t.x_deriv) for t in top.terms] == [(1, (1,))]
    assert {(t.coefficient, t.rank, t.t_order, t.x_deriv) for t in mid.terms} == {
        (2, 1, 1, ()), (1, 0, 0, (1,))}
    assert {(t.coefficient, t.rank, t.t_order, t.v_deriv) for t in low.terms} == {
        (2, 0, 1, None), (-4, 1, 0, (1,))}


def test_v_coupling_values():
    assert v_coupling(1, 0) == -4
    assert v_coupling(3, 0) == 4
    assert v_coupling(3, 2) == -12
    with pytest.raises(DetEqError):
        v_coupling(2, 0)


def test_mass_scaling():
    s = generate_det_system(1, 1, mass=Fraction(3))
    mid = s.equations[1]
    assert Fraction(1, 3) in {t.coefficient for t in mid.terms}


@pytest.mark.parametrize("n", [1, 2, 3, 4])
@pytest.mark.parametrize("m", [1, 2])
def test_stationary_chains_disjoint(n, m):
    s = generate_det_system(n, m, stationary=True, include_lower=True)
    even, odd = s.ranks_referenced("even"), s.ranks_referenced("odd")
    assert not even & odd
    assert all(r % 2 == 0 for r in even) and all(r % 2 == 1 for r in odd)
    assert not any(t.t_order for eq in s.equations for t in eq.terms)


def test_stationary_n2_even_only():
    for m in (1, 2, 3):
        s = generate_det_system(2, m, stationary=True)
        assert s.ranks_referenced() == {0, 2}
        assert s.chains() == ["even"]


@pytest.mark.parametrize("n,m", [(1, 1), (3, 2), (4, 1)])
def test_ranks_in_range(n, m):
    for stat in (False, True):
        s = generate_det_system(n, m, stationary=stat, include_lower=True)
        for eq in s.equations:
            assert list(eq.free) == sorted(eq.free)
            for t in eq.terms:
                assert 0 <= t.rank <= n
                assert t.coefficient != 0


def test_instantiate_n1_free():
    a = Ansatz(1, 1, uniform_bounds(1, 2))
    A = instantiate(generate_det_system(1, 1), a, LaurentPoly.zero(2))
    _, ns = rref_nullspace(A)
    assert len(ns) == 3


def test_instantiate_linear_potential():
    n2 = 2
    x = LaurentPoly.var(n2, 1)
    t = LaurentPoly.var(n2, 0)
    a = Ansatz(1, 1, uniform_bounds(1, 2))
    A = instantiate(generate_det_system(1, 1), a, x)
    _, ns = rref_nullspace(A)
    ops = solution_operators(a, ns)
    accel = DiffOp.partial(n2, 1) + DiffOp.multiplication(t.scale(I))
    assert operator_in_span(accel, ops)
    assert compare_solution_spaces(A, oracle_system(1, 1, a, x)).passed


def test_identity_survives_minimal_ansatz():
    a = Ansatz(2, 2, {0: (0, 0)})
    A = instantiate(generate_det_system(2, 2), a, LaurentPoly.zero(3))
    _, ns = rref_nullspace(A)
    assert len(ns) >= 1


@pytest.mark.parametrize("n,m,deg,V", [
    (1, 1, 2, "zero"),
    (2, 1, 4, "zero"),
    (2, 2, 3, "oscillator"),
    (3, 1, 2, "cubic"),
])
def test_oracle_equivalence(n, m, deg, V):
    if V == "zero":
        pot = LaurentPoly.zero(m + 1)
    elif V == "oscillator":
        pot = sum((LaurentPoly.var(m + 1, a) ** 2 for a in range(1, m + 1)), LaurentPoly.zero(m + 1))
    else:
        pot = random_potential(m, 3, seed=11)
    a = Ansatz(n, m, uniform_bounds(n, deg) if V != "cubic" else ansatz_bounds(n, m, 1))
    rep = compare_solution_spaces(instantiate(generate_det_system(n, m), a, pot), oracle_system(n, m, a, pot))
    assert rep.passed, rep.to_json()


def test_compare_detects_difference():
    rep = compare_solution_spaces(RationalMatrix.identity(3), RationalMatrix.identity(3))
    assert rep.passed
    rep = compare_solution_spaces(RationalMatrix.zeros(3, 3), RationalMatrix.identity(3))
    assert not rep.passed and rep.witness is not None
    with pytest.raises(DetEqError):
        compare_solution_spaces(RationalMatrix.zeros(2, 3), RationalMatrix.zeros(2, 4))


def test_time_dependent_potential_rejected():
    a = Ansatz(1, 1, uniform_bounds(1, 1))
    with pytest.raises(DetEqError):
        instantiate(generate_det_system(1, 1), a, LaurentPoly.var(2, 0))
