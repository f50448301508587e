"""Determining equations for n-th order symmetry operators of
L = i d_t + (1/2M) Laplacian - V(x), as structured data.

The operator is Q = sum_j Q_j with Q_j the j-fold nested anticommutator of a
symmetric tensor K^{(j)} with the momenta p_a = -i d_a. With that choice the
residual [L, Q] is again a sum of nested anticommutators, and its rank-r part
vanishes iff

    2 dK^{(r)}/dt + (1/M) d^(a_r K^{(r-1)} a_1..a_{r-1})
        + sum_{j>r, j-r odd} (-1)^{q+1} 4 C(j, r) K^{(r) b_1..b_{j-r}} d_{b_1..b_{j-r}} V = 0,

q = (j - r - 1)/2, for r = 0..n, together with the Killing-type top
equation d^(a_{n+1} K^{(n)} a_1..a_n) = 0. The parenthesized indices are
averaged over permutations. Every coefficient here is checked against a
direct expansion of the commutator (``oracle_system``).

For a time-independent operator of a stationary equation the d/dt terms drop
out, the equations are multiplied by M, and they split into a chain on
even-rank tensors and a chain on odd-rank tensors.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb
from typing import Mapping, Sequence

from .exact import GaussianRational, LaurentPoly, RationalMatrix, in_span, rref_nullspace, to_rational
from .exact.poly import monomials_up_to
from .weyl import (
    DiffOp,
    SymTensorField,
    build_L,
    commutator_with_L,
    multiplicity,
    nested_anticommutator,
    sorted_indices,
)

CONVENTION = (
    "Q_j = nested anticommutators of K^(j) with p_a = -i d_a; "
    "V-coupling coefficient 4*C(j,r) (commutator-derived)"
)


class DetEqError(ValueError):
    pass


@dataclass(frozen=True)
class DetTerm:
    """coefficient * d_t^t_order d_{x_deriv} K^{component} * (d_{v_deriv} V)."""

    coefficient: Fraction
    rank: int
    component: tuple
    t_order: int = 0
    x_deriv: tuple = ()
    v_deriv: tuple | None = None
    symmetrized: bool = False

    def __post_init__(self):
        if not self.coefficient:
            raise DetEqError("DetTerm coefficient must be nonzero")
        if self.rank < 0 or len(self.component) != self.rank:
            raise DetEqError(f"component {self.component} does not match rank {self.rank}")
        if list(self.component) != sorted(self.component):
            raise DetEqError("component indices must be sorted")


@dataclass(frozen=True)
class DetEquation:
    rank: int          # number of free indices of this residual component
    free: tuple        # sorted free indices
    chain: str         # "full", "even" or "odd"
    terms: tuple


@dataclass(frozen=True)
class DetSystem:
    order: int
    dim: int
    stationary: bool
    mass: Fraction
    equations: tuple
    convention: str = CONVENTION

    def ranks_referenced(self, chain: str | None = None) -> set[int]:
        return {
            t.rank
            for eq in self.equations
            if chain is None or eq.chain == chain
            for t in eq.terms
        }

    def chains(self) -> list[str]:
        seen = []
        for eq in self.equations:
            if eq.chain not in seen:
                seen.append(eq.chain)
        return seen


def _frac(x) -> Fraction:
    q = to_rational(x)
    return Fraction(int(q.numerator), int(q.denominator))


def v_coupling(j: int, r: int) -> Fraction:
    """Coefficient of K^{(j)} d^{j-r}V in the rank-r equation (j - r odd)."""
    d = j - r
    if d <= 0 or d % 2 == 0:
        raise DetEqError(f"no V coupling between ranks {j} and {r}")
    q = (d - 1) // 2
    return Fraction((-1) ** (q + 1) * 4 * comb(j, r))


def _grad_terms(free: tuple, coeff: Fraction) -> list[DetTerm]:
    """Averaged symmetrization of d_a K^{rest} at the sorted index ``free``."""
    r = len(free)
    counts: dict = {}
    for p in range(r):
        a = free[p]
        counts[a] = counts.get(a, 0) + 1
    out = []
    for a in sorted(counts):
        rest = list(free)
        rest.remove(a)
        out.append(
            DetTerm(coeff * Fraction(counts[a], r), r - 1, tuple(rest), 0, (a,), None, symmetrized=r > 1)
        )
    return out


def _v_terms(free: tuple, j: int, dim: int, coeff: Fraction) -> list[DetTerm]:
    """coeff * K^{free b_1..b_d} d_{b_1..b_d} V summed over all ordered b."""
    d = j - len(free)
    out = []
    for b in sorted_indices(d, dim):
        comp = tuple(sorted(free + b))
        out.append(DetTerm(coeff * multiplicity(b), j, comp, 0, (), b))
    return out


def _chain_of(residual_rank: int) -> str:
    # the rank-r equation links K^{(r-1)} with K^{(j)}, j = r-1 mod 2
    return "even" if (residual_rank - 1) % 2 == 0 else "odd"


def generate_det_system(n: int, m: int, stationary: bool = False, mass=1,
                        include_lower: bool = False) -> DetSystem:
    """Emit all component equations for order ``n`` in ``m`` dimensions.

    Stationary systems contain the chain whose ranks have the parity of n
    (the n-th order part of an integral of motion); ``include_lower`` adds
    the complementary chain, which is the (n-1)-th order part.
    """
    if n < 1 or m < 1:
        raise DetEqError("order and dimension must be >= 1")
    M = _frac(mass)
    if M <= 0:
        raise DetEqError("mass must be positive")
    equations = []
    top_chain = "even" if n % 2 == 0 else "odd"
    for r in range(n + 1, -1, -1):
        chain = "full"
        if stationary:
            chain = _chain_of(r)
            if chain != top_chain and not include_lower:
                continue
        for free in sorted_indices(r, m):
            terms: list[DetTerm] = []
            if r == n + 1:
                terms += _grad_terms(free, Fraction(1))
            else:
                if not stationary:
                    terms.append(DetTerm(Fraction(2), r, free, 1, (), None))
                if r >= 1:
                    terms += _grad_terms(free, Fraction(1) if stationary else 1 / M)
                for j in range(r + 1, n + 1, 2):
                    c = v_coupling(j, r)
                    terms += _v_terms(free, j, m, c * M if stationary else c)
            if terms:
                equations.append(DetEquation(r, free, chain, tuple(terms)))
    return DetSystem(n, m, stationary, M, tuple(equations))


# --- ansatz and instantiation ---------------------------------------------


@dataclass(frozen=True)
class Unknown:
    rank: int
    component: tuple
    monomial: tuple


@dataclass
class Ansatz:
    """Polynomial ansatz: one unknown coefficient per (rank, component, monomial)."""

    order: int
    dim: int
    bounds: dict                       # rank -> (x_degree, t_degree)
    unknowns: list = field(default_factory=list)

    def __post_init__(self):
        if not self.unknowns:
            nv = self.dim + 1
            for j in range(self.order + 1):
                xd, td = self.bounds.get(j, (-1, -1))
                if xd < 0 or td < 0:
                    continue
                xs = monomials_up_to(nv, xd, list(range(1, nv)))
                for comp in sorted_indices(j, self.dim):
                    for e0 in range(td + 1):
                        for mono in xs:
                            self.unknowns.append(Unknown(j, comp, (e0,) + mono[1:]))
        self.index = {u: k for k, u in enumerate(self.unknowns)}

    def __len__(self):
        return len(self.unknowns)

    @property
    def nvars(self) -> int:
        return self.dim + 1

    def by_component(self) -> dict:
        out: dict = {}
        for k, u in enumerate(self.unknowns):
            out.setdefault((u.rank, u.component), []).append((k, u.monomial))
        return out

    def tensors(self, vec: Sequence[GaussianRational]) -> dict[int, SymTensorField]:
        comps: dict = {}
        for u, c in zip(self.unknowns, vec):
            if c:
                key = (u.rank, u.component)
                comps[key] = comps.get(key, LaurentPoly.zero(self.nvars)) + LaurentPoly.monomial(u.monomial, c)
        out = {}
        for j in range(self.order + 1):
            out[j] = SymTensorField(j, self.dim, {c: p for (r, c), p in comps.items() if r == j})
        return out

    def operator(self, vec: Sequence[GaussianRational]) -> DiffOp:
        Q = DiffOp.zero(self.nvars)
        for K in self.tensors(vec).values():
            if K.components:
                Q = Q + nested_anticommutator(K, momentum_form=True)
        return Q


def stationary_ansatz(order: int, dim: int, x_degree: int, parity: int | None = None) -> Ansatz:
    bounds = {}
    for j in range(order + 1):
        if parity is None or j % 2 == parity:
            bounds[j] = (x_degree, 0)
    return Ansatz(order, dim, bounds)


def _check_potential(V: LaurentPoly, m: int):
    if V.nvars != m + 1:
        raise DetEqError(f"potential arity {V.nvars - 1} does not match dimension {m}")
    if V.depends_on(0):
        raise DetEqError("potential must be time independent")


def instantiate(system: DetSystem, ansatz: Ansatz, V: LaurentPoly) -> RationalMatrix:
    """Linear system over the ansatz unknowns; rows are (equation, monomial)."""
    _check_potential(V, system.dim)
    if ansatz.dim != system.dim:
        raise DetEqError("ansatz and system dimensions differ")
    groups = ansatz.by_component()
    dV_cache: dict = {}

    def dV(b):
        if b not in dV_cache:
            orders = [0] * V.nvars
            for a in b:
                orders[a] += 1
            dV_cache[b] = V.diff_multi(orders)
        return dV_cache[b]

    rows = []
    for eq in system.equations:
        acc: dict = {}
        for term in eq.terms:
            members = groups.get((term.rank, term.component))
            if not members:
                continue
            c = GaussianRational.coerce(term.coefficient)
            factor = dV(term.v_deriv) if term.v_deriv is not None else None
            if factor is not None and not factor:
                continue
            orders = [0] * ansatz.nvars
            orders[0] = term.t_order
            for a in term.x_deriv:
                orders[a] += 1
            for col, mono in members:
                p = LaurentPoly.monomial(mono, c).diff_multi(orders)
                if factor is not None:
                    p = p * factor
                for mon, v in p.terms.items():
                    row = acc.setdefault(mon, {})
                    s = row.get(col)
                    row[col] = v if s is None else s + v
        for mon in sorted(acc):
            row = {k: v for k, v in acc[mon].items() if v}
            if row:
                rows.append(row)
    return RationalMatrix.from_rows(rows, len(ansatz))


def oracle_system(n: int, m: int, ansatz: Ansatz, V: LaurentPoly, mass=1) -> RationalMatrix:
    """The same linear system derived directly: build Q from each unknown via
    nested anticommutators, expand [L, Q] and equate every normal-ordered
    coefficient to zero. Independent of ``generate_det_system``."""
    _check_potential(V, m)
    if ansatz.order != n or ansatz.dim != m:
        raise DetEqError("ansatz does not match (n, m)")
    L = build_L(m, mass, V)
    acc: dict = {}
    for col, u in enumerate(ansatz.unknowns):
        K = SymTensorField(u.rank, m, {u.component: LaurentPoly.monomial(u.monomial, 1)})
        R = commutator_with_L(L, nested_anticommutator(K, momentum_form=True))
        for alpha, poly in R.terms.items():
            for mon, v in poly.terms.items():
                acc.setdefault((alpha, mon), {})[col] = v
    rows = [acc[k] for k in sorted(acc)]
    return RationalMatrix.from_rows(rows, len(ansatz))


@dataclass
class ComparisonReport:
    passed: bool
    rank_a: int
    rank_b: int
    nullity_a: int
    nullity_b: int
    witness: dict | None = None

    def to_json(self):
        return {
            "passed": self.passed,
            "rank_a": self.rank_a,
            "rank_b": self.rank_b,
            "nullity_a": self.nullity_a,
            "nullity_b": self.nullity_b,
            "witness": self.witness,
        }


def compare_solution_spaces(A: RationalMatrix, B: RationalMatrix) -> ComparisonReport:
    """Rank equality plus mutual containment of the two nullspaces."""
    if A.cols != B.cols:
        raise DetEqError(f"unknown counts differ: {A.cols} vs {B.cols}")
    ra, na = rref_nullspace(A)
    rb, nb = rref_nullspace(B)
    witness = None
    for k, v in enumerate(na):
        if not B.annihilates(v):
            witness = {"side": "a", "index": k, "vector": [c.to_pair() for c in v]}
            break
    if witness is None:
        for k, v in enumerate(nb):
            if not A.annihilates(v):
                witness = {"side": "b", "index": k, "vector": [c.to_pair() for c in v]}
                break
    return ComparisonReport(witness is None and ra == rb, ra, rb, len(na), len(nb), witness)


def random_potential(m: int, degree: int, seed: int = 0, span: int = 3) -> LaurentPoly:
    """Dense spatial polynomial with small random rational coefficients."""
    rng = random.Random(seed)
    terms = {}
    for mono in monomials_up_to(m + 1, degree, list(range(1, m + 1))):
        num = rng.randint(-span, span)
        den = rng.randint(1, span)
        if num:
            terms[mono] = Fraction(num, den)
    return LaurentPoly(m + 1, terms)


def solution_operators(ansatz: Ansatz, basis) -> list[DiffOp]:
    return [ansatz.operator(v) for v in basis]


def operator_in_span(Q: DiffOp, ops: Sequence[DiffOp]) -> bool:
    keys = sorted({k for op in list(ops) + [Q] for k in op.flatten()})
    pos = {k: i for i, k in enumerate(keys)}

    def vec(op):
        v = [GaussianRational.coerce(0)] * len(keys)
        for k, c in op.flatten().items():
            v[pos[k]] = c
        return v

    return in_span(vec(Q), [vec(o) for o in ops])


__all__ = [
    "Ansatz",
    "ComparisonReport",
    "DetEqError",
    "DetEquation",
    "DetSystem",
    "DetTerm",
    "Unknown",
    "compare_solution_spaces",
    "generate_det_system",
    "instantiate",
    "operator_in_span",
    "oracle_system",
    "random_potential",
    "stationary_ansatz",
    "v_coupling",
]
