from fractions import Fraction

import pytest

from schrosym.deteqs import operator_in_span
from schrosym.exact import LaurentPoly, vectors_rank
from schrosym.killing import (
    ansatz_bounds,
    boost_operator,
    count_formula,
    dimension_report,
    free_dimension,
    products_in_span,
    rotation_operator,
    solve_free,
)
from schrosym.weyl import DiffOp, build_L, commutator_with_L


def test_bounds_examples():
    assert ansatz_bounds(1, 1) == {1: (0, 1), 0: (1, 1)}
    b = ansatz_bounds(3, 1)
    assert [b[j][0] for j in (3, 2, 1, 0)] == [0, 1, 2, 3]
    for n in (1, 2, 4):
        for m in (1, 2):
            lo, hi = ansatz_bounds(n, m), ansatz_bounds(n, m, 2)
            assert all(hi[j] == (lo[j][0] + 2, lo[j][1] + 2) for j in lo)
    with pytest.raises(ValueError):
        ansatz_bounds(1, 1, -1)


def test_count_formula():
    assert [count_formula(n) for n in range(4)] == [1, 9, 40, 125]


def test_n1_m1_basis():
    basis = solve_free(1, 1)
    assert len(basis) == 3
    ops = basis.operators
    assert operator_in_span(DiffOp.partial(2, 1), ops)
    assert operator_in_span(boost_operator(1, 1), ops)
    assert operator_in_span(DiffOp.identity(2), ops)


@pytest.mark.parametrize("m", [2, 3])
def test_n1_contains_translations_and_rotations(m):
    ops = solve_free(1, m).operators
    for a in range(1, m + 1):
        assert operator_in_span(DiffOp.partial(m + 1, a), ops)
        for b in range(a + 1, m + 1):
            assert operator_in_span(rotation_operator(m, a, b), ops)


@pytest.mark.parametrize("n,m", [(1, 1), (2, 1), (3, 1), (1, 2), (2, 2), (1, 3)])
def test_basis_commutes_and_is_independent(n, m):
    basis = solve_free(n, m)
    L = build_L(m)
    for Q in basis.operators:
        assert commutator_with_L(L, Q).is_zero()
    assert vectors_rank(basis.vectors) == len(basis)
    assert basis.margins_checked == [0, 1, 2]


def test_known_dimensions():
    assert [free_dimension(n, 1) for n in range(4)] == [1, 3, 6, 10]
    assert [free_dimension(n, 2) for n in range(3)] == [1, 6, 20]


def test_products_of_first_order_in_second_order_span():
    lower = solve_free(1, 1).operators
    upper = solve_free(2, 1).operators
    assert products_in_span(lower, upper)


def test_mass_parameter():
    M = Fraction(5, 2)
    ops = solve_free(1, 1, mass=M).operators
    assert operator_in_span(boost_operator(1, 1, M), ops)
    assert not operator_in_span(boost_operator(1, 1, 1), ops)


def test_dimension_report_m3():
    rows = dimension_report(2, 3)
    assert [r.computed for r in rows] == [1, 10, 50]
    assert [r.formula for r in rows] == [1, 9, 40]
    assert rows[0].match_total
    assert [r.match_increment for r in rows[1:]] == [True, True]


def test_dimension_report_m1_mismatch():
    row = dimension_report(1, 1)[1]
    assert (row.computed, row.formula, row.match_total) == (3, 9, False)


def test_invalid():
    with pytest.raises(ValueError):
        solve_free(0, 1)


def test_basis_json():
    js = solve_free(1, 1).to_json()
    assert js["dimension"] == 3 and len(js["operators"]) == 3
