"""Symmetry operators of the free Schroedinger equation of arbitrary order.

With V = 0 the determining equations are solved exactly on a polynomial
ansatz (generalized Killing tensors are polynomial), and completeness of the
ansatz is checked by saturation: enlarging every degree bound must not change
the solution dimension.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .deteqs import Ansatz, generate_det_system, instantiate, operator_in_span
from .exact import GaussianRational, LaurentPoly, rref_nullspace, to_rational
from .weyl import DiffOp, build_L, commutator_with_L, op_compose


class SaturationError(RuntimeError):
    """Solution dimension still grows with the ansatz margin."""


def ansatz_bounds(n: int, m: int, margin: int = 0) -> dict[int, tuple[int, int]]:
    """rank j -> (x-degree bound, t-degree bound).

    In one dimension the rank-j tensor satisfies d^{n-j+1} K = 0, so its
    x-degree is at most n - j. For m > 1 rotations already break that, and we
    use the looser n + j. Each unit of tensor rank carries at most one power of
    t, hence the t bound n.
    """
    if margin < 0:
        raise ValueError("margin must be >= 0")
    out = {}
    for j in range(n + 1):
        xd = n - j if m == 1 else n + j
        out[j] = (xd + margin, n + margin)
    return out


@dataclass
class SymmetryBasis:
    order: int
    dim: int
    mass: Fraction
    operators: list
    vectors: list                      # nullspace vector behind each operator
    ansatz: Ansatz
    margins_checked: list = field(default_factory=list)

    def __len__(self):
        return len(self.operators)

    def to_json(self):
        return {
            "order": self.order,
            "dim": self.dim,
            "mass": [self.mass.numerator, self.mass.denominator],
            "dimension": len(self.operators),
            "margins_checked": self.margins_checked,
            "operators": [Q.to_json() for Q in self.operators],
            "operators_text": [Q.to_str() for Q in self.operators],
        }


def _nullity(n, m, mass, margin, system=None):
    ansatz = Ansatz(n, m, ansatz_bounds(n, m, margin))
    system = system or generate_det_system(n, m, mass=mass)
    A = instantiate(system, ansatz, LaurentPoly.zero(m + 1))
    _, basis = rref_nullspace(A)
    return ansatz, basis


def free_dimension(n: int, m: int, mass=1, margins: Sequence[int] = (0, 1, 2)) -> int:
    """Saturation-checked dimension of the space of order <= n symmetries."""
    if n == 0:
        return 1
    dims = []
    system = generate_det_system(n, m, mass=mass)
    for mg in margins:
        _, basis = _nullity(n, m, mass, mg, system)
        dims.append(len(basis))
    if len(set(dims)) != 1:
        raise SaturationError(f"n={n}, m={m}: dimension changes with margin {list(margins)}: {dims}")
    return dims[0]


def solve_free(n: int, m: int, mass=1, margins: Sequence[int] = (0, 1, 2), verify: bool = True) -> SymmetryBasis:
    """Exact basis of the symmetry operators of order <= n for V = 0."""
    if n < 1 or m < 1:
        raise ValueError("order and dimension must be >= 1")
    mass_q = to_rational(mass)
    system = generate_det_system(n, m, mass=mass_q)
    dims = []
    first = None
    for mg in margins:
        ansatz, basis = _nullity(n, m, mass_q, mg, system)
        dims.append(len(basis))
        if first is None:
            first = (ansatz, basis)
    if len(set(dims)) != 1:
        raise SaturationError(
            f"n={n}, m={m}: dimension changes with ansatz margin {list(margins)}: {dims}; enlarge bounds"
        )
    ansatz, basis = first
    ops = [ansatz.operator(v) for v in basis]
    if verify:
        L = build_L(m, mass_q)
        for k, Q in enumerate(ops):
            if not commutator_with_L(L, Q).is_zero():
                raise AssertionError(f"basis element {k} does not commute with L")
    return SymmetryBasis(n, m, Fraction(int(mass_q.numerator), int(mass_q.denominator)),
                         ops, basis, ansatz, list(margins))


def count_formula(n: int) -> int:
    """N_n = (n+1)(n+2)^3(n+3)/4!  (exact; always an integer)."""
    if n < 0:
        raise ValueError("n must be >= 0")
    num = (n + 1) * (n + 2) ** 3 * (n + 3)
    q, r = divmod(num, 24)
    assert r == 0
    return q


@dataclass
class DimensionRow:
    order: int
    computed: int          # dimension of order <= n symmetries
    increment: int         # new at exactly order n
    formula: int
    match_total: bool
    match_increment: bool

    def to_json(self):
        return dict(self.__dict__)


def dimension_report(n_max: int, m: int, mass=1) -> list[DimensionRow]:
    """Computed dimensions against N_n, comparing both the total and the
    per-order increment since the formula does not fix which one it counts."""
    rows = []
    prev = 0
    for n in range(n_max + 1):
        d = free_dimension(n, m, mass)
        N = count_formula(n)
        inc = d - prev
        rows.append(DimensionRow(n, d, inc, N, d == N, inc == N))
        prev = d
    return rows


def rotation_operator(m: int, a: int, b: int) -> DiffOp:
    """x_a d_b - x_b d_a."""
    n = m + 1
    xa = LaurentPoly.var(n, a)
    xb = LaurentPoly.var(n, b)
    return DiffOp.partial(n, b).left_multiply(xa) - DiffOp.partial(n, a).left_multiply(xb)


def boost_operator(m: int, a: int, mass=1) -> DiffOp:
    """t d_a - i M x_a."""
    n = m + 1
    M = GaussianRational.coerce(to_rational(mass))
    t = LaurentPoly.var(n, 0)
    x = LaurentPoly.var(n, a)
    return DiffOp.partial(n, a).left_multiply(t) - DiffOp.multiplication(x.scale(M * GaussianRational(0, 1)))


def products_in_span(lower: Sequence[DiffOp], basis: Sequence[DiffOp]) -> bool:
    """Squares and symmetrized products of ``lower`` all lie in span(basis)."""
    for i, A in enumerate(lower):
        for B in lower[i:]:
            sym = op_compose(A, B) + op_compose(B, A)
            if not operator_in_span(sym, basis):
                return False
    return True


__all__ = [
    "DimensionRow",
    "SaturationError",
    "SymmetryBasis",
    "ansatz_bounds",
    "boost_operator",
    "count_formula",
    "dimension_report",
    "free_dimension",
    "products_in_span",
    "rotation_operator",
    "solve_free",
]
