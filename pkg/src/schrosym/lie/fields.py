"""Point-symmetry vector fields X = xi_t d_t + xi_a d_a + eta d_psi + etac d_psic.

Multiplication by a scalar expression is literal on every component, so
``i*theta*(dpsi - dpsic)`` has eta = i theta and etac = -i theta. Use
``shift(e)`` for the conjugate-paired field e d_psi + conj(e) d_psic.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Mapping

from .expr import (
    ExprError,
    Node,
    ParseContext,
    Parser,
    ZERO,
    add,
    conj,
    const,
    lift,
    mul,
    power,
    var,
)


@dataclass(frozen=True)
class VectorField:
    xi_t: Node
    xi: tuple            # xi_a, a = 1..m
    eta: Node
    etac: Node
    label: str = ""

    @property
    def m(self) -> int:
        return len(self.xi)

    def _combine(self, other: "VectorField", sign: int) -> "VectorField":
        if not isinstance(other, VectorField):
            raise ExprError("cannot add a scalar to a vector field")
        if other.m != self.m:
            raise ExprError("dimension mismatch")
        s = const(sign)
        return VectorField(
            add(self.xi_t, mul(s, other.xi_t)),
            tuple(add(a, mul(s, b)) for a, b in zip(self.xi, other.xi)),
            add(self.eta, mul(s, other.eta)),
            add(self.etac, mul(s, other.etac)),
        )

    def __add__(self, other):
        return self._combine(other, 1)

    def __sub__(self, other):
        return self._combine(other, -1)

    def __radd__(self, other):
        raise ExprError("cannot add a scalar to a vector field")

    __rsub__ = __radd__

    def scale(self, s) -> "VectorField":
        s = lift(s)
        return VectorField(mul(s, self.xi_t), tuple(mul(s, a) for a in self.xi), mul(s, self.eta), mul(s, self.etac))

    def __mul__(self, other):
        if isinstance(other, VectorField):
            raise ExprError("cannot multiply two vector fields")
        return self.scale(other)

    __rmul__ = __mul__

    def __neg__(self):
        return self.scale(-1)

    def __truediv__(self, other):
        return self.scale(const(1) / lift(other))

    def with_label(self, label: str) -> "VectorField":
        return VectorField(self.xi_t, self.xi, self.eta, self.etac, label)

    def conjugate_partner(self) -> "VectorField":
        """The field with psi <-> psic swapped and values conjugated; equals
        self for real fields."""
        return VectorField(conj(self.xi_t), tuple(conj(a) for a in self.xi), conj(self.etac), conj(self.eta))

    def to_json(self) -> dict:
        return {
            "label": self.label,
            "xi_t": self.xi_t.to_str(),
            "xi": [a.to_str() for a in self.xi],
            "eta": self.eta.to_str(),
            "etac": self.etac.to_str(),
        }


def _vf(m, xi_t=ZERO, xi=None, eta=ZERO, etac=ZERO) -> VectorField:
    xi = tuple(xi) if xi is not None else (ZERO,) * m
    return VectorField(lift(xi_t), tuple(lift(a) for a in xi), lift(eta), lift(etac))


def generators(m: int) -> dict[str, VectorField]:
    """Named generators for dimension m."""
    psi, psic, t = var("psi"), var("psic"), var("t")
    xs = [var(f"x{a}") for a in range(1, m + 1)]
    r2 = add(*[power(x, 2) for x in xs])
    out = {}
    out["P0"] = _vf(m, xi_t=1)
    out["dpsi"] = _vf(m, eta=1)
    out["dpsic"] = _vf(m, etac=1)
    out["I"] = _vf(m, eta=psi, etac=psic)
    Mf = _vf(m, eta=mul(const(1j), psi), etac=mul(const(-1j), psic))
    out["M"] = Mf
    out["D"] = _vf(m, xi_t=t, xi=[mul(const(0.5), x) for x in xs])
    for a in range(m):
        e = [ZERO] * m
        e[a] = const(1)
        out[f"P{a + 1}"] = _vf(m, xi=e)
        e = [ZERO] * m
        e[a] = t
        out[f"G{a + 1}"] = _vf(m, xi=e) + Mf.scale(mul(const(0.5), xs[a]))
        for b in range(a + 1, m):
            # x_a d_b - x_b d_a
            e = [ZERO] * m
            e[b] = xs[a]
            e[a] = mul(const(-1), xs[b])
            out[f"J{a + 1}{b + 1}"] = _vf(m, xi=e)
    out["Pi"] = (
        _vf(m, xi_t=power(t, 2), xi=[mul(t, x) for x in xs])
        + out["I"].scale(mul(const(-m / 2), t))
        + Mf.scale(mul(const(0.25), r2))
    )
    return {k: v.with_label(k) for k, v in out.items()}


def expand_template(text: str, m: int) -> list[str]:
    """Expand the index templates ``_a`` (a = 1..m) and ``_ab`` (a < b)."""
    if "_ab" in text:
        return [text.replace("_ab", f"{a}{b}") for a in range(1, m + 1) for b in range(a + 1, m + 1)]
    if re.search(r"_a(?![A-Za-z0-9_])", text):
        return [re.sub(r"_a(?![A-Za-z0-9_])", str(a), text) for a in range(1, m + 1)]
    return [text]


def parse_field(text: str, m: int, params: Mapping | None = None) -> VectorField:
    gens = generators(m)
    ctx = ParseContext(m, dict(params or {}), symbols=gens)

    def shift(args):
        if len(args) != 1 or not isinstance(args[0], Node):
            raise ExprError("shift() takes one scalar expression")
        e = args[0]
        return _vf(m, eta=e, etac=conj(e))

    ctx.functions = {"shift": shift}
    v = Parser(text, ctx).parse()
    if not isinstance(v, VectorField):
        raise ExprError(f"{text!r} is not a vector field")
    return v.with_label(text)


def parse_fields(text: str, m: int, params: Mapping | None = None) -> list[VectorField]:
    return [parse_field(s, m, params) for s in expand_template(text, m)]


__all__ = ["VectorField", "expand_template", "generators", "parse_field", "parse_fields"]
