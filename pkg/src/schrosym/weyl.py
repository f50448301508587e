"""Normal-ordered linear differential operators with Laurent coefficients.

A ``DiffOp`` is a finite sum ``sum_alpha c_alpha(t, x) * d^alpha`` with every
coefficient written to the left of the derivatives. ``alpha`` is an exponent
vector over (d_t, d_x1, ..., d_xm), the same slot layout as ``LaurentPoly``.

Momentum convention: p_a = -i d_a, so p^2 = -Laplacian and the Schroedinger
operator is L = i d_t + (1/2M) Laplacian - V.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations_with_replacement, permutations, product
from math import comb, factorial
from typing import Iterator, Mapping, Sequence

from .exact import ZERO, GaussianRational, LaurentPoly, to_rational
from .exact.scalars import I

Deriv = tuple


class OperatorError(ValueError):
    pass


class DiffOp:
    __slots__ = ("nvars", "terms")

    def __init__(self, nvars: int, terms: Mapping[Deriv, LaurentPoly] | None = None):
        self.nvars = nvars
        clean = {}
        for alpha, c in (terms or {}).items():
            alpha = tuple(alpha)
            if len(alpha) != nvars or any(a < 0 for a in alpha):
                raise OperatorError(f"bad derivative multi-index {alpha}")
            if not isinstance(c, LaurentPoly):
                c = LaurentPoly.constant(nvars, c)
            if c.nvars != nvars:
                raise OperatorError("coefficient arity does not match operator")
            if c:
                clean[alpha] = c
        self.terms = clean

    @classmethod
    def _raw(cls, nvars, terms):
        obj = object.__new__(cls)
        obj.nvars = nvars
        obj.terms = terms
        return obj

    @property
    def dim(self) -> int:
        return self.nvars - 1

    @classmethod
    def zero(cls, nvars: int) -> "DiffOp":
        return cls._raw(nvars, {})

    @classmethod
    def identity(cls, nvars: int) -> "DiffOp":
        return cls.multiplication(LaurentPoly.constant(nvars, 1))

    @classmethod
    def multiplication(cls, f: LaurentPoly) -> "DiffOp":
        return cls(f.nvars, {(0,) * f.nvars: f})

    @classmethod
    def partial(cls, nvars: int, index: int, order: int = 1) -> "DiffOp":
        alpha = [0] * nvars
        alpha[index] = order
        return cls(nvars, {tuple(alpha): LaurentPoly.constant(nvars, 1)})

    def is_zero(self) -> bool:
        return not self.terms

    def order(self) -> int:
        return max((sum(a) for a in self.terms), default=-1)

    def spatial_order(self) -> int:
        return max((sum(a[1:]) for a in self.terms), default=-1)

    def has_time_derivative(self) -> bool:
        return any(a[0] for a in self.terms)

    def coefficient(self, alpha: Sequence[int]) -> LaurentPoly:
        return self.terms.get(tuple(alpha), LaurentPoly.zero(self.nvars))

    def top_terms(self) -> dict:
        k = self.order()
        return {a: c for a, c in self.terms.items() if sum(a) == k}

    def _check(self, other: "DiffOp"):
        if self.nvars != other.nvars:
            raise OperatorError(f"dimension mismatch: {self.nvars - 1} vs {other.nvars - 1}")

    def __add__(self, other):
        if not isinstance(other, DiffOp):
            other = DiffOp.multiplication(_as_poly(self.nvars, other))
        self._check(other)
        out = dict(self.terms)
        for a, c in other.terms.items():
            s = out.get(a)
            s = c if s is None else s + c
            if s:
                out[a] = s
            else:
                out.pop(a, None)
        return DiffOp._raw(self.nvars, out)

    __radd__ = __add__

    def __neg__(self):
        return DiffOp._raw(self.nvars, {a: -c for a, c in self.terms.items()})

    def __sub__(self, other):
        if not isinstance(other, DiffOp):
            other = DiffOp.multiplication(_as_poly(self.nvars, other))
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, c) -> "DiffOp":
        c = GaussianRational.coerce(c)
        if not c:
            return DiffOp.zero(self.nvars)
        return DiffOp._raw(self.nvars, {a: p.scale(c) for a, p in self.terms.items()})

    def left_multiply(self, f: LaurentPoly) -> "DiffOp":
        out = {}
        for a, c in self.terms.items():
            p = f * c
            if p:
                out[a] = p
        return DiffOp._raw(self.nvars, out)

    def __mul__(self, other):
        if isinstance(other, DiffOp):
            return op_compose(self, other)
        if isinstance(other, LaurentPoly):
            return op_compose(self, DiffOp.multiplication(other))
        return self.scale(other)

    def __rmul__(self, other):
        if isinstance(other, LaurentPoly):
            return self.left_multiply(other)
        return self.scale(other)

    def apply(self, f: LaurentPoly) -> LaurentPoly:
        """Act on a function."""
        out = LaurentPoly.zero(self.nvars)
        for a, c in self.terms.items():
            out = out + c * f.diff_multi(a)
        return out

    def __eq__(self, other):
        if not isinstance(other, DiffOp):
            return NotImplemented
        return self.nvars == other.nvars and self.terms == other.terms

    def __hash__(self):
        return hash((self.nvars, frozenset(self.terms.items())))

    def sorted_terms(self):
        return sorted(self.terms.items(), key=lambda kv: (sum(kv[0]), kv[0]), reverse=True)

    def flatten(self) -> dict:
        """(derivative index, monomial) -> scalar; the coordinates used for
        linear-membership tests between operators."""
        out = {}
        for a, c in self.terms.items():
            for mono, v in c.terms.items():
                out[(a, mono)] = v
        return out

    def to_str(self, names: Sequence[str] | None = None) -> str:
        from .exact.poly import default_names

        names = list(names) if names else default_names(self.nvars)
        if not self.terms:
            return "0"
        parts = []
        for a, c in self.sorted_terms():
            d = "".join(
                (f"d{n}" if k == 1 else f"d{n}^{k}") for n, k in zip(names, a) if k
            )
            cs = c.to_str(names)
            if not d:
                parts.append(cs)
            elif cs == "1":
                parts.append(d)
            else:
                parts.append(f"({cs})*{d}")
        return " + ".join(parts)

    def __str__(self):
        return self.to_str()

    def __repr__(self):
        return f"DiffOp({self.to_str()!r})"

    def to_json(self):
        return [{"deriv": list(a), "coeff": c.to_json()} for a, c in self.sorted_terms()]

    @classmethod
    def from_json(cls, nvars: int, data) -> "DiffOp":
        return cls(nvars, {tuple(t["deriv"]): LaurentPoly.from_json(nvars, t["coeff"]) for t in data})


def _as_poly(nvars, value) -> LaurentPoly:
    if isinstance(value, LaurentPoly):
        return value
    return LaurentPoly.constant(nvars, value)


def op_compose(a: DiffOp, b: DiffOp) -> DiffOp:
    """Normal-ordered product a*b by the generalized Leibniz rule:
    (f d^alpha)(g d^beta) = sum_{gamma <= alpha} C(alpha, gamma) f (d^gamma g) d^{alpha-gamma+beta}.
    """
    a._check(b)
    n = a.nvars
    acc: dict = {}
    for alpha, f in a.terms.items():
        ranges = [range(k + 1) for k in alpha]
        for gamma in product(*ranges):
            weight = 1
            for al, ga in zip(alpha, gamma):
                weight *= comb(al, ga)
            rest = tuple(al - ga for al, ga in zip(alpha, gamma))
            for beta, g in b.terms.items():
                dg = g.diff_multi(gamma)
                if not dg:
                    continue
                key = tuple(r + be for r, be in zip(rest, beta))
                piece = (f * dg).scale(weight)
                s = acc.get(key)
                acc[key] = piece if s is None else s + piece
    return DiffOp._raw(n, {k: v for k, v in acc.items() if v})


def commutator(a: DiffOp, b: DiffOp) -> DiffOp:
    return op_compose(a, b) - op_compose(b, a)


def anticommutator(a: DiffOp, b: DiffOp) -> DiffOp:
    return op_compose(a, b) + op_compose(b, a)


def momentum(nvars: int, a: int) -> DiffOp:
    """p_a = -i d/dx_a   (a is 1-based)."""
    return DiffOp.partial(nvars, a).scale(-I)


# --- symmetric tensors --------------------------------------------------------


def sorted_indices(rank: int, dim: int) -> list[tuple]:
    """Sorted multi-indices of length ``rank`` over 1..dim (component labels)."""
    return list(combinations_with_replacement(range(1, dim + 1), rank))


def multiplicity(index: Sequence[int]) -> int:
    """Number of ordered tuples that sort to ``index``."""
    counts: dict = {}
    for a in index:
        counts[a] = counts.get(a, 0) + 1
    out = factorial(len(index))
    for c in counts.values():
        out //= factorial(c)
    return out


@dataclass(frozen=True)
class SymTensorField:
    """Symmetric rank-j tensor on R^m with Laurent components.

    Components are stored under sorted multi-indices; missing ones are zero.
    ``nvars`` is m + 1 (time slot included).
    """

    rank: int
    dim: int
    components: Mapping[tuple, LaurentPoly]

    def __post_init__(self):
        comps = {}
        for idx, p in self.components.items():
            key = tuple(sorted(idx))
            if len(key) != self.rank or any(not 1 <= a <= self.dim for a in key):
                raise OperatorError(f"bad component index {idx} for rank {self.rank}, dim {self.dim}")
            if key in comps:
                raise OperatorError(f"component {key} given twice")
            comps[key] = p
        object.__setattr__(self, "components", comps)

    @property
    def nvars(self) -> int:
        return self.dim + 1

    @classmethod
    def scalar(cls, p: LaurentPoly) -> "SymTensorField":
        return cls(0, p.nvars - 1, {(): p})

    def __getitem__(self, idx) -> LaurentPoly:
        return self.components.get(tuple(sorted(idx)), LaurentPoly.zero(self.nvars))

    @staticmethod
    def component_count(rank: int, dim: int) -> int:
        return comb(dim + rank - 1, rank)

    def gradient_symmetrized(self) -> "SymTensorField":
        """Averaged symmetrization of the gradient: the rank-(j+1) tensor
        d^(a_{j+1} K^{a_1...a_j)}, i.e. the mean over all (j+1)! orderings."""
        return symmetrize(self)


def symmetrize(K: SymTensorField) -> SymTensorField:
    """Idempotent averaging of d_b K^{a_1..a_j} over all placements of b.

    For a sorted target index (c_1..c_{j+1}) the average over permutations
    reduces to (1/(j+1)) sum_p d_{c_p} K^{c without c_p}.
    """
    r = K.rank + 1
    out = {}
    for idx in sorted_indices(r, K.dim):
        acc = LaurentPoly.zero(K.nvars)
        for p in range(r):
            rest = idx[:p] + idx[p + 1:]
            acc = acc + K[rest].diff(idx[p])
        acc = acc.scale(to_rational(1) / r)
        if acc:
            out[idx] = acc
    return SymTensorField(r, K.dim, out)


def gradient_tensor(K: SymTensorField) -> dict:
    """Unsymmetrized gradient as an ordered-index tensor: G[(b, a_1..a_j)] = d_b K^{a_1..a_j}."""
    out = {}
    for idx in iter_ordered(K.rank + 1, K.dim):
        p = K[idx[1:]].diff(idx[0])
        if p:
            out[idx] = p
    return out


def symmetrize_tensor(T: Mapping[tuple, LaurentPoly], rank: int, dim: int, nvars: int) -> dict:
    """Average an ordered-index tensor over all rank! index permutations."""
    out = {}
    perms = list(permutations(range(rank)))
    scale = to_rational(1) / len(perms)
    zero = LaurentPoly.zero(nvars)
    for idx in iter_ordered(rank, dim):
        acc = zero
        for perm in perms:
            acc = acc + T.get(tuple(idx[k] for k in perm), zero)
        acc = acc.scale(scale)
        if acc:
            out[idx] = acc
    return out


def from_ordered(T: Mapping[tuple, LaurentPoly], rank: int, dim: int) -> SymTensorField:
    """Read a symmetric ordered-index tensor back into sorted-component form."""
    return SymTensorField(rank, dim, {idx: p for idx, p in T.items() if list(idx) == sorted(idx)})


def nested_anticommutator(K: SymTensorField, momentum_form: bool = False) -> DiffOp:
    """Q_j = [[...[K^{a_1..a_j}, d_{a_1}]_+, d_{a_2}]_+ ..., d_{a_j}]_+ summed over
    repeated indices. With ``momentum_form`` the d's are replaced by p = -i d,
    which multiplies the result by (-i)^j.
    """
    n = K.nvars
    total = DiffOp.zero(n)
    for idx, comp in K.components.items():
        if not comp:
            continue
        op = DiffOp.multiplication(comp)
        for a in idx:
            d = DiffOp.partial(n, a)
            op = op_compose(op, d) + op_compose(d, op)
        total = total + op.scale(multiplicity(idx))
    if momentum_form and K.rank:
        total = total.scale((-I) ** K.rank)
    return total


def build_L(m: int, mass=1, V: LaurentPoly | None = None) -> DiffOp:
    """L = i d_t + (1/2M) Laplacian - V(x)."""
    mass = to_rational(mass)
    if mass <= 0:
        raise OperatorError("mass must be positive")
    n = m + 1
    if V is None:
        V = LaurentPoly.zero(n)
    if V.nvars != n:
        raise OperatorError(f"potential has {V.nvars - 1} spatial slots, expected {m}")
    if V.depends_on(0):
        raise OperatorError("potential must not depend on t")
    L = DiffOp.partial(n, 0).scale(I)
    half = to_rational(1) / (2 * mass)
    for a in range(1, m + 1):
        L = L + DiffOp.partial(n, a, 2).scale(half)
    return L - DiffOp.multiplication(V)


def build_H(m: int, mass=1, V: LaurentPoly | None = None) -> DiffOp:
    """Stationary Hamiltonian H = -(1/2M) Laplacian + V, so that L = i d_t - H."""
    L = build_L(m, mass, V)
    n = m + 1
    return -(L - DiffOp.partial(n, 0).scale(I))


def commutator_with_L(L: DiffOp, Q: DiffOp) -> DiffOp:
    """[L, Q]. Q must be purely spatial: with no d_t in Q the residual cannot
    contain d_t, so alpha_Q = 0 and Q is a symmetry iff this vanishes."""
    if Q.has_time_derivative():
        raise OperatorError("symmetry candidate must not contain d/dt")
    return commutator(L, Q)


def iter_ordered(rank: int, dim: int) -> Iterator[tuple]:
    return product(range(1, dim + 1), repeat=rank)


__all__ = [
    "DiffOp",
    "OperatorError",
    "SymTensorField",
    "anticommutator",
    "build_H",
    "build_L",
    "commutator",
    "commutator_with_L",
    "momentum",
    "multiplicity",
    "nested_anticommutator",
    "op_compose",
    "sorted_indices",
    "from_ordered",
    "gradient_tensor",
    "symmetrize",
    "symmetrize_tensor",
]
