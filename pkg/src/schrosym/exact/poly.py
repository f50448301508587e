"""Sparse multivariate Laurent polynomials over the Gaussian rationals.

Variables are indexed 0..m: slot 0 is ``t``, slots 1..m are ``x_1..x_m``.
Exponents may be negative. Terms are kept in a plain dict and never
mutated after construction.

Canonical order is graded lexicographic: a monomial sorts first by total
degree, then lexicographically on the exponent tuple read from ``t`` to
``x_m``. Iteration, printing and serialization all use this order.
"""

from __future__ import annotations

from math import comb, prod
from typing import Iterable, Mapping, Sequence

from .scalars import ZERO, GaussianRational

Monomial = tuple


class ArityError(ValueError):
    """Operands live in polynomial rings with different variable counts."""


class PoleError(ZeroDivisionError):
    """Evaluation hit a negative power of a variable that is zero."""


def monomial_key(exps: Monomial):
    return (sum(exps), exps)


def default_names(nvars: int) -> list[str]:
    m = nvars - 1
    if m == 1:
        return ["t", "x"]
    return ["t"] + [f"x{a}" for a in range(1, m + 1)]


class LaurentPoly:
    __slots__ = ("nvars", "terms")

    def __init__(self, nvars: int, terms: Mapping[Monomial, object] | None = None):
        self.nvars = nvars
        clean = {}
        if terms:
            for mono, c in terms.items():
                mono = tuple(mono)
                if len(mono) != nvars:
                    raise ArityError(f"monomial {mono} has {len(mono)} slots, expected {nvars}")
                c = GaussianRational.coerce(c)
                if c:
                    clean[mono] = c
        self.terms = clean

    @classmethod
    def _raw(cls, nvars, terms):
        obj = object.__new__(cls)
        obj.nvars = nvars
        obj.terms = terms
        return obj

    # constructors

    @classmethod
    def zero(cls, nvars: int) -> "LaurentPoly":
        return cls._raw(nvars, {})

    @classmethod
    def constant(cls, nvars: int, c) -> "LaurentPoly":
        return cls(nvars, {(0,) * nvars: c})

    @classmethod
    def monomial(cls, exps: Sequence[int], c=1) -> "LaurentPoly":
        return cls(len(exps), {tuple(exps): c})

    @classmethod
    def var(cls, nvars: int, index: int, power: int = 1) -> "LaurentPoly":
        exps = [0] * nvars
        exps[index] = power
        return cls(nvars, {tuple(exps): 1})

    # predicates / access

    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self):
        return bool(self.terms)

    def is_constant(self) -> bool:
        return all(not any(e) for e in self.terms)

    def depends_on(self, index: int) -> bool:
        return any(e[index] for e in self.terms)

    def sorted_terms(self) -> list[tuple[Monomial, GaussianRational]]:
        return sorted(self.terms.items(), key=lambda kv: monomial_key(kv[0]))

    def coefficient(self, exps: Sequence[int]) -> GaussianRational:
        return self.terms.get(tuple(exps), ZERO)

    def degree(self, index: int | None = None) -> int:
        if not self.terms:
            return -(10**9)
        if index is None:
            return max(sum(e) for e in self.terms)
        return max(e[index] for e in self.terms)

    def min_exponent(self, index: int) -> int:
        return min((e[index] for e in self.terms), default=0)

    # arithmetic

    def _check(self, other: "LaurentPoly"):
        if self.nvars != other.nvars:
            raise ArityError(f"arity mismatch: {self.nvars} vs {other.nvars}")

    def _lift(self, other):
        if isinstance(other, LaurentPoly):
            self._check(other)
            return other
        try:
            return LaurentPoly.constant(self.nvars, other)
        except TypeError:
            return None

    def __add__(self, other):
        o = self._lift(other)
        if o is None:
            return NotImplemented
        if len(o.terms) > len(self.terms):
            big, small = o.terms, self.terms
        else:
            big, small = self.terms, o.terms
        out = dict(big)
        for mono, c in small.items():
            s = out.get(mono)
            if s is None:
                out[mono] = c
            else:
                s = s + c
                if s:
                    out[mono] = s
                else:
                    del out[mono]
        return LaurentPoly._raw(self.nvars, out)

    __radd__ = __add__

    def __neg__(self):
        return LaurentPoly._raw(self.nvars, {m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        o = self._lift(other)
        if o is None:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other):
        o = self._lift(other)
        if o is None:
            return NotImplemented
        return o + (-self)

    def scale(self, c) -> "LaurentPoly":
        c = GaussianRational.coerce(c)
        if not c:
            return LaurentPoly.zero(self.nvars)
        return LaurentPoly._raw(self.nvars, {m: v * c for m, v in self.terms.items()})

    def __mul__(self, other):
        if not isinstance(other, LaurentPoly):
            try:
                return self.scale(other)
            except TypeError:
                return NotImplemented
        self._check(other)
        out: dict = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                mono = tuple(a + b for a, b in zip(m1, m2))
                s = out.get(mono)
                out[mono] = c1 * c2 if s is None else s + c1 * c2
        return LaurentPoly._raw(self.nvars, {m: c for m, c in out.items() if c})

    def __rmul__(self, other):
        return self.scale(other)

    def __truediv__(self, other):
        if isinstance(other, LaurentPoly):
            if len(other.terms) != 1:
                raise ZeroDivisionError("division only by a single monomial")
            (mono, c), = other.terms.items()
            inv = LaurentPoly._raw(self.nvars, {tuple(-e for e in mono): c.inverse()})
            return self * inv
        return self.scale(GaussianRational.coerce(other).inverse())

    def __pow__(self, k: int):
        if not isinstance(k, int):
            return NotImplemented
        if k < 0:
            if len(self.terms) != 1:
                raise ZeroDivisionError("negative power of a non-monomial")
            (mono, c), = self.terms.items()
            return LaurentPoly._raw(self.nvars, {tuple(e * k for e in mono): c ** k})
        result = LaurentPoly.constant(self.nvars, 1)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def conjugate(self) -> "LaurentPoly":
        return LaurentPoly._raw(self.nvars, {m: c.conjugate() for m, c in self.terms.items()})

    # calculus

    def diff(self, index: int, order: int = 1) -> "LaurentPoly":
        if not 0 <= index < self.nvars:
            raise IndexError(f"variable index {index} out of range 0..{self.nvars - 1}")
        if order < 0:
            raise ValueError("derivative order must be non-negative")
        if order == 0:
            return self
        out = {}
        for mono, c in self.terms.items():
            e = mono[index]
            factor = 1
            for k in range(order):
                factor *= e - k
            if factor:
                new = list(mono)
                new[index] = e - order
                out[tuple(new)] = c * factor
        return LaurentPoly._raw(self.nvars, out)

    def diff_multi(self, orders: Sequence[int]) -> "LaurentPoly":
        p = self
        for index, k in enumerate(orders):
            if k:
                p = p.diff(index, k)
        return p

    def antiderivative(self, index: int) -> "LaurentPoly":
        """Term-by-term antiderivative with zero integration constant."""
        out = {}
        for mono, c in self.terms.items():
            e = mono[index]
            if e == -1:
                raise ValueError("antiderivative of a 1/x term needs a logarithm")
            new = list(mono)
            new[index] = e + 1
            out[tuple(new)] = c / (e + 1)
        return LaurentPoly._raw(self.nvars, out)

    def evaluate(self, point: Sequence[complex]) -> complex:
        if len(point) != self.nvars:
            raise ArityError(f"point has {len(point)} coordinates, expected {self.nvars}")
        total = 0j
        for mono, c in self.terms.items():
            term = complex(c)
            for x, e in zip(point, mono):
                if e < 0 and x == 0:
                    raise PoleError(f"pole: negative power of a zero coordinate in {mono}")
                if e:
                    term *= complex(x) ** e
            total += term
        return total

    def substitute_scalar(self, index: int, value) -> "LaurentPoly":
        """Set variable ``index`` to an exact scalar; the slot stays (exponent 0)."""
        value = GaussianRational.coerce(value)
        acc: dict = {}
        for mono, c in self.terms.items():
            e = mono[index]
            if e < 0 and not value:
                raise PoleError("pole in substitution")
            new = list(mono)
            new[index] = 0
            new = tuple(new)
            acc[new] = acc.get(new, ZERO) + c * value ** e
        return LaurentPoly(self.nvars, acc)

    def extend(self, nvars: int, positions: Sequence[int]) -> "LaurentPoly":
        """Embed into a ring with more variables; slot i goes to positions[i]."""
        out = {}
        for mono, c in self.terms.items():
            new = [0] * nvars
            for i, e in enumerate(mono):
                new[positions[i]] = e
            out[tuple(new)] = c
        return LaurentPoly._raw(nvars, out)

    # comparison

    def __eq__(self, other):
        if isinstance(other, LaurentPoly):
            return self.nvars == other.nvars and self.terms == other.terms
        try:
            return self == LaurentPoly.constant(self.nvars, other)
        except TypeError:
            return NotImplemented

    def __hash__(self):
        return hash((self.nvars, frozenset(self.terms.items())))

    # printing

    def to_str(self, names: Sequence[str] | None = None) -> str:
        names = list(names) if names else default_names(self.nvars)
        if not self.terms:
            return "0"
        pieces = []
        for mono, c in self.sorted_terms():
            factors = []
            for name, e in zip(names, mono):
                if e == 1:
                    factors.append(name)
                elif e:
                    factors.append(f"{name}^{e}" if e > 0 else f"{name}^({e})")
            body = "*".join(factors)
            if not c.im:
                mag = abs(c.re)
                sign = "-" if c.re < 0 else "+"
                if body:
                    coeff = "" if mag == 1 else f"{mag}*"
                else:
                    coeff = str(mag)
                pieces.append((sign, coeff + body))
            else:
                cs = _complex_coeff_str(c)
                pieces.append(("+", cs + ("*" + body if body else "")))
        out = ""
        for k, (sign, text) in enumerate(pieces):
            if k == 0:
                out = text if sign == "+" else "-" + text
            else:
                out += f" {sign} {text}"
        return out

    def __str__(self):
        return self.to_str()

    def __repr__(self):
        return f"LaurentPoly({self.nvars}, {self.to_str()!r})"

    def to_json(self):
        return [[list(m), c.to_pair()] for m, c in self.sorted_terms()]

    @classmethod
    def from_json(cls, nvars: int, data) -> "LaurentPoly":
        return cls(nvars, {tuple(m): GaussianRational.from_pair(c) for m, c in data})


def _complex_coeff_str(c: GaussianRational) -> str:
    if not c.re:
        if c.im == 1:
            return "i"
        if c.im == -1:
            return "(-i)"
        return f"({c.im}*i)"
    sign = "+" if c.im > 0 else "-"
    mag = abs(c.im)
    im = "i" if mag == 1 else f"{mag}*i"
    return f"({c.re} {sign} {im})"


def poly_sum(polys: Iterable[LaurentPoly], nvars: int) -> LaurentPoly:
    acc: dict = {}
    for p in polys:
        if p.nvars != nvars:
            raise ArityError(f"arity mismatch: {p.nvars} vs {nvars}")
        for mono, c in p.terms.items():
            s = acc.get(mono)
            acc[mono] = c if s is None else s + c
    return LaurentPoly._raw(nvars, {m: c for m, c in acc.items() if c})


def monomials_up_to(nvars: int, max_degree: int, slots: Sequence[int]) -> list[tuple]:
    """All non-negative monomials in the given slots with total degree <= max_degree."""
    out = []

    def rec(i, remaining, current):
        if i == len(slots):
            exps = [0] * nvars
            for s, e in zip(slots, current):
                exps[s] = e
            out.append(tuple(exps))
            return
        for e in range(remaining + 1):
            rec(i + 1, remaining - e, current + [e])

    if max_degree < 0:
        return []
    rec(0, max_degree, [])
    return sorted(out, key=monomial_key)


def binomial_factor(alpha: Sequence[int], gamma: Sequence[int]) -> int:
    return prod(comb(a, g) for a, g in zip(alpha, gamma))
