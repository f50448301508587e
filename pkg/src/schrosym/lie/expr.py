"""Expression trees over (t, x_a, psi, psi*) with symbolic Wirtinger derivatives.

Nodes evaluate on complex scalars or on ``Series``; the same tree serves for
values at a point, for Taylor expansions along a solution, and (after
``diff``) for partial derivatives with respect to psi or psi*.

Opaque functions ``f(arg, ...)`` carry the orders of the partial derivatives
applied so far; their values come from an atom sampler, so passing a check
with random samples means passing for an arbitrary function.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .series import Series

CONJ_VAR = {"psi": "psic", "psic": "psi"}


class ExprError(ValueError):
    pass


class ParseError(ExprError):
    def __init__(self, msg, text="", pos=0):
        super().__init__(f"{msg} at position {pos}: {text[:pos]}<!>{text[pos:]}" if text else msg)
        self.pos = pos


class Node:
    __slots__ = ("op", "args", "data")

    def __init__(self, op: str, args: tuple = (), data=None):
        self.op = op
        self.args = args
        self.data = data

    # --- construction with light folding ---

    def __add__(self, other):
        if not _scalar_like(other):
            return NotImplemented
        return add(self, lift(other))

    def __radd__(self, other):
        if not _scalar_like(other):
            return NotImplemented
        return add(lift(other), self)

    def __sub__(self, other):
        if not _scalar_like(other):
            return NotImplemented
        return add(self, neg(lift(other)))

    def __rsub__(self, other):
        if not _scalar_like(other):
            return NotImplemented
        return add(lift(other), neg(self))

    def __mul__(self, other):
        if not _scalar_like(other):
            return NotImplemented
        return mul(self, lift(other))

    def __rmul__(self, other):
        if not _scalar_like(other):
            return NotImplemented
        return mul(lift(other), self)

    def __truediv__(self, other):
        if not _scalar_like(other):
            return NotImplemented
        return div(self, lift(other))

    def __neg__(self):
        return neg(self)

    def is_const(self) -> bool:
        return self.op == "const"

    def free_vars(self) -> set:
        if self.op in ("var", "field"):
            return {self.data}
        out = set()
        for a in self.args:
            out |= a.free_vars()
        return out

    # --- evaluation ---

    def evaluate(self, env: Mapping, atoms: "AtomSampler | None" = None):
        op = self.op
        if op == "const":
            return self.data
        if op in ("var", "field"):
            try:
                return env[self.data]
            except KeyError:
                raise ExprError(f"no value for {self.data!r}") from None
        vals = [a.evaluate(env, atoms) for a in self.args]
        if op == "add":
            out = vals[0]
            for v in vals[1:]:
                out = out + v
            return out
        if op == "mul":
            out = vals[0]
            for v in vals[1:]:
                out = out * v
            return out
        if op == "neg":
            return -vals[0]
        if op == "div":
            return vals[0] / vals[1]
        if op == "pow":
            return _power(vals[0], self.data)
        if op in ("exp", "log", "sin", "cos"):
            return _elementary(op, vals[0])
        if op == "conj":
            v = vals[0]
            return v.conj() if isinstance(v, Series) else complex(v).conjugate()
        if op == "abs":
            v = vals[0]
            if isinstance(v, Series):
                return v.abs_real()
            v = complex(v)
            if abs(v.imag) > 1e-9 * max(1.0, abs(v)):
                raise ExprError("abs() needs a real argument")
            return complex(abs(v.real))
        if op == "func":
            if atoms is None:
                raise ExprError(f"opaque function {self.data[0]!r} needs an atom sampler")
            return _opaque(self.data[0], self.data[1], vals, atoms)
        raise ExprError(f"unknown node {op!r}")

    # --- differentiation ---

    def diff(self, var: str) -> "Node":
        """Partial derivative w.r.t. ``var`` with the other variables fixed;
        psi and psic are independent (Wirtinger)."""
        op = self.op
        if op == "const" or op == "field":
            return ZERO
        if op == "var":
            return ONE if self.data == var else ZERO
        a = self.args
        if op == "add":
            return add(*[x.diff(var) for x in a])
        if op == "mul":
            terms = []
            for i in range(len(a)):
                d = a[i].diff(var)
                if d is ZERO or (d.op == "const" and d.data == 0):
                    continue
                terms.append(mul(*(a[:i] + (d,) + a[i + 1:])))
            return add(*terms) if terms else ZERO
        if op == "neg":
            return neg(a[0].diff(var))
        if op == "div":
            num, den = a
            return sub(div(num.diff(var), den), div(mul(num, den.diff(var)), power(den, 2)))
        if op == "pow":
            p = self.data
            d = a[0].diff(var)
            if _is_zero(d):
                return ZERO
            return mul(const(p), power(a[0], p - 1), d)
        if op == "exp":
            return mul(self, a[0].diff(var))
        if op == "log":
            return div(a[0].diff(var), a[0])
        if op == "sin":
            return mul(Node("cos", a), a[0].diff(var))
        if op == "cos":
            return neg(mul(Node("sin", a), a[0].diff(var)))
        if op == "conj":
            other = CONJ_VAR.get(var)
            if other is None:
                return conj(a[0].diff(var))
            return conj(a[0].diff(other))
        if op == "abs":
            return mul(div(self, a[0]), a[0].diff(var))
        if op == "func":
            name, orders = self.data
            terms = []
            for i, arg in enumerate(a):
                d = arg.diff(var)
                if _is_zero(d):
                    continue
                o = list(orders)
                o[i] += 1
                terms.append(mul(Node("func", a, (name, tuple(o))), d))
            return add(*terms) if terms else ZERO
        raise ExprError(f"cannot differentiate node {op!r}")

    def __repr__(self):
        return f"Node({self.to_str()})"

    def to_str(self) -> str:
        op = self.op
        if op == "const":
            return _fmt_const(self.data)
        if op in ("var", "field"):
            return self.data
        if op == "add":
            return "(" + " + ".join(a.to_str() for a in self.args) + ")"
        if op == "mul":
            return "*".join(a.to_str() for a in self.args)
        if op == "neg":
            return "-" + self.args[0].to_str()
        if op == "div":
            return f"({self.args[0].to_str()})/({self.args[1].to_str()})"
        if op == "pow":
            return f"({self.args[0].to_str()})^{_fmt_const(self.data)}"
        if op == "func":
            name, orders = self.data
            tag = "" if not any(orders) else "_" + "".join(str(o) for o in orders)
            return f"{name}{tag}(" + ", ".join(a.to_str() for a in self.args) + ")"
        return f"{op}(" + ", ".join(a.to_str() for a in self.args) + ")"


def _scalar_like(v) -> bool:
    return isinstance(v, (Node, int, float, complex))


def _fmt_const(c) -> str:
    c = complex(c)
    if c.imag == 0:
        r = c.real
        return str(int(r)) if r.is_integer() else repr(r)
    return repr(c)


def _is_zero(n: Node) -> bool:
    return n.op == "const" and n.data == 0


def const(c) -> Node:
    return Node("const", (), complex(c))


ZERO = const(0)
ONE = const(1)
IMAG = const(1j)


def lift(v) -> Node:
    return v if isinstance(v, Node) else const(v)


def var(name: str) -> Node:
    return Node("var", (), name)


def atom_field(name: str) -> Node:
    return Node("field", (), name)


def add(*args: Node) -> Node:
    flat = []
    c = 0j
    for a in args:
        if a.op == "add":
            items = a.args
        else:
            items = (a,)
        for x in items:
            if x.op == "const":
                c += x.data
            else:
                flat.append(x)
    if c != 0 or not flat:
        flat.append(const(c))
    return flat[0] if len(flat) == 1 else Node("add", tuple(flat))


def mul(*args: Node) -> Node:
    flat = []
    c = 1 + 0j
    for a in args:
        items = a.args if a.op == "mul" else (a,)
        for x in items:
            if x.op == "const":
                c *= x.data
            else:
                flat.append(x)
    if c == 0:
        return ZERO
    if c != 1 or not flat:
        flat.insert(0, const(c))
    return flat[0] if len(flat) == 1 else Node("mul", tuple(flat))


def neg(a: Node) -> Node:
    if a.op == "const":
        return const(-a.data)
    if a.op == "neg":
        return a.args[0]
    return mul(const(-1), a)


def sub(a: Node, b: Node) -> Node:
    return add(a, neg(b))


def div(a: Node, b: Node) -> Node:
    if _is_zero(a):
        return ZERO
    if b.op == "const":
        if b.data == 0:
            raise ExprError("division by the constant zero")
        return mul(const(1 / b.data), a)
    return Node("div", (a, b))


def power(a: Node, p) -> Node:
    p = complex(p)
    if p.imag:
        raise ExprError("exponents must be real")
    p = p.real
    if p == 0:
        return ONE
    if p == 1:
        return a
    if a.op == "const":
        return const(_power(a.data, p))
    return Node("pow", (a,), p)


def func(name: str, *args: Node, orders: tuple | None = None) -> Node:
    return Node("func", tuple(args), (name, orders or (0,) * len(args)))


def elementary(op: str, a: Node) -> Node:
    if a.op == "const":
        return const(_elementary(op, a.data))
    return Node(op, (a,))


def conj(a: Node) -> Node:
    if a.op == "const":
        return const(complex(a.data).conjugate())
    if a.op == "conj":
        return a.args[0]
    if a.op == "var" and a.data in CONJ_VAR:
        return var(CONJ_VAR[a.data])
    if a.op == "var":  # t, x_a are real
        return a
    return Node("conj", (a,))


def _power(v, p):
    if isinstance(v, Series):
        return v.power(p)
    v = complex(v)
    if float(p).is_integer():
        return v ** int(p)
    if v == 0:
        raise ZeroDivisionError("non-integer power of zero")
    return v ** p


def _elementary(op, v):
    if isinstance(v, Series):
        return getattr(v, op)()
    return complex(getattr(np, op)(complex(v)))


# --- opaque atoms ----------------------------------------------------------------


class AtomSampler:
    """Random values for opaque function derivatives, keyed by (name, orders).

    Each value is drawn from its own stream derived from the sample seed and
    the key, so values do not depend on evaluation order.
    """

    def __init__(self, seed_seq: np.random.SeedSequence):
        self.seed_seq = seed_seq
        self.cache: dict = {}

    def value(self, name: str, orders: tuple) -> complex:
        key = (name, tuple(orders))
        if key not in self.cache:
            tag = [ord(ch) for ch in name] + [1000] + list(orders)
            ss = np.random.SeedSequence(self.seed_seq.entropy, spawn_key=tuple(self.seed_seq.spawn_key) + (7,) + tuple(tag))
            rng = np.random.default_rng(ss)
            re_, im_ = rng.uniform(-1.0, 1.0, size=2)
            self.cache[key] = complex(re_, im_)
        return self.cache[key]


def _opaque(name, orders, vals, atoms: AtomSampler):
    if not any(isinstance(v, Series) for v in vals):
        return atoms.value(name, orders)
    space = next(v for v in vals if isinstance(v, Series)).space
    W = space.weight
    deltas = []
    for v in vals:
        if isinstance(v, Series):
            d = v.c.copy()
            d[0] = 0
            deltas.append(Series(space, d))
        else:
            deltas.append(None)
    # multivariate Taylor: sum over k with |k| <= W of f_{orders+k} prod delta_i^k_i / k_i!
    out = space.constant(0)
    n = len(vals)
    powers = []
    for d in deltas:
        row = [space.constant(1)]
        for k in range(1, W + 1):
            row.append(row[-1] * d if d is not None else None)
        powers.append(row)

    def rec(i, ks, total):
        nonlocal out
        if i == n:
            coeff = atoms.value(name, tuple(o + k for o, k in zip(orders, ks)))
            term = space.constant(coeff)
            for j, k in enumerate(ks):
                if k:
                    term = term * powers[j][k] / math.factorial(k)
            out = out + term
            return
        limit = 0 if deltas[i] is None else W - total
        for k in range(limit + 1):
            rec(i + 1, ks + (k,), total + k)

    rec(0, (), 0)
    return out


# --- parser ---------------------------------------------------------------------


_TOKEN = re.compile(r"\s*(?:(\d+\.\d*(?:[eE][-+]?\d+)?|\d*\.\d+(?:[eE][-+]?\d+)?|\d+(?:[eE][-+]?\d+)?)|([A-Za-z_][A-Za-z_0-9]*)|(\S))")

FUNCTIONS = {"exp", "log", "sin", "cos", "sqrt", "abs", "re", "im", "conj"}


@dataclass
class ParseContext:
    m: int
    params: Mapping = field(default_factory=dict)
    opaque: tuple = ("f", "F")
    atoms: tuple = ("theta", "eta0", "eta0c")
    symbols: Mapping = field(default_factory=dict)  # extra identifier -> value (e.g. generators)
    functions: Mapping = field(default_factory=dict)  # extra callables name -> builder(list of args)


class Parser:
    """Recursive descent: expr := term (('+'|'-') term)*; term := unary (('*'|'/') unary)*;
    unary := '-' unary | power; power := atom ('^' unary)?; atom := number | name | name '(' args ')' | '(' expr ')'.

    Combination of values goes through ``ops`` so that the same grammar can
    build vector fields.
    """

    def __init__(self, text: str, ctx: ParseContext):
        self.text = text
        self.ctx = ctx
        self.toks = []
        for mt in _TOKEN.finditer(text):
            if mt.group(0).strip() == "":
                continue
            num, name, sym = mt.groups()
            kind = "num" if num else "name" if name else "sym"
            self.toks.append((kind, num or name or sym, mt.start(mt.lastindex)))
        self.i = 0

    def error(self, msg, pos=None):
        if pos is None:
            pos = self.toks[self.i][2] if self.i < len(self.toks) else len(self.text)
        raise ParseError(msg, self.text, pos)

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else (None, None, len(self.text))

    def take(self, value=None):
        tok = self.peek()
        if tok[0] is None:
            self.error("unexpected end of input")
        if value is not None and tok[1] != value:
            self.error(f"expected {value!r}")
        self.i += 1
        return tok

    def parse(self):
        if not self.toks:
            self.error("empty expression")
        v = self.expr()
        if self.i != len(self.toks):
            self.error("unexpected token")
        return v

    def expr(self):
        v = self.term()
        while self.peek()[1] in ("+", "-"):
            op = self.take()[1]
            w = self.term()
            v = combine(v, op, w)
        return v

    def term(self):
        v = self.unary()
        while self.peek()[1] in ("*", "/"):
            op = self.take()[1]
            pos = self.peek()[2]
            w = self.unary()
            try:
                v = combine(v, op, w)
            except ExprError as exc:
                self.error(str(exc), pos)
        return v

    def unary(self):
        if self.peek()[1] == "-":
            self.take()
            return combine(const(-1), "*", self.unary())
        if self.peek()[1] == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[1] == "^":
            self.take()
            pos = self.peek()[2]
            ex = self.unary()
            if not isinstance(ex, Node) or not ex.is_const():
                self.error("exponent must be a constant", pos)
            if not isinstance(base, Node):
                self.error("cannot raise a vector field to a power", pos)
            try:
                return power(base, ex.data)
            except ExprError as exc:
                self.error(str(exc), pos)
        return base

    def atom(self):
        kind, val, pos = self.take()
        if kind == "num":
            return const(float(val) if any(ch in val for ch in ".eE") else int(val))
        if kind == "sym":
            if val == "(":
                v = self.expr()
                self.take(")")
                return v
            self.error(f"unexpected {val!r}", pos)
        name = val
        if self.peek()[1] == "(":
            self.take("(")
            args = [self.expr()]
            while self.peek()[1] == ",":
                self.take()
                args.append(self.expr())
            self.take(")")
            return self.call(name, args, pos)
        return self.identifier(name, pos)

    def call(self, name, args, pos):
        if name in self.ctx.functions:
            return self.ctx.functions[name](args)
        if any(not isinstance(a, Node) for a in args):
            self.error(f"{name}() takes scalar arguments", pos)
        if name in self.ctx.opaque:
            return func(name, *args)
        if name not in FUNCTIONS:
            self.error(f"unknown function {name!r}", pos)
        if len(args) != 1:
            self.error(f"{name}() takes one argument", pos)
        a = args[0]
        if name == "sqrt":
            return power(a, 0.5)
        if name == "abs":
            return Node("abs", (a,)) if not a.is_const() else const(abs(a.data))
        if name == "re":
            return mul(const(0.5), add(a, conj(a)))
        if name == "im":
            return mul(const(-0.5j), sub(a, conj(a)))
        if name == "conj":
            return conj(a)
        return elementary(name, a)

    def identifier(self, name, pos):
        ctx = self.ctx
        if name in ctx.symbols:
            return ctx.symbols[name]
        if name in ctx.params:
            return const(ctx.params[name])
        if name == "i":
            return IMAG
        if name == "n":
            return const(ctx.m)
        if name == "pi":
            return const(math.pi)
        if name in ("t", "psi", "psic"):
            return var(name)
        if name == "x" and ctx.m == 1:
            return var("x1")
        mt = re.fullmatch(r"x_?(\d+)", name)
        if mt:
            a = int(mt.group(1))
            if not 1 <= a <= ctx.m:
                self.error(f"coordinate {name} outside dimension {ctx.m}", pos)
            return var(f"x{a}")
        if name == "r2":
            return add(*[power(var(f"x{a}"), 2) for a in range(1, ctx.m + 1)])
        if name == "rho":
            return power(mul(var("psi"), var("psic")), 0.5)
        if name == "phase":
            return mul(const(0.5j), sub(elementary("log", var("psic")), elementary("log", var("psi"))))
        if name in ctx.atoms:
            return atom_field(name)
        self.error(f"unknown identifier {name!r}", pos)


def combine(a, op, b):
    """Arithmetic on parse values; vector fields implement __radd__ etc."""
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if op == "/":
        if not isinstance(b, Node):
            raise ExprError("cannot divide by a vector field")
        return a / b
    raise ExprError(f"unknown operator {op!r}")


def parse_expr(text: str, m: int, params: Mapping | None = None) -> Node:
    v = Parser(text, ParseContext(m, dict(params or {}))).parse()
    if not isinstance(v, Node):
        raise ExprError("expression evaluates to a vector field")
    return v


__all__ = [
    "AtomSampler",
    "ExprError",
    "Node",
    "ParseContext",
    "ParseError",
    "Parser",
    "add",
    "atom_field",
    "conj",
    "const",
    "div",
    "elementary",
    "func",
    "mul",
    "neg",
    "parse_expr",
    "power",
    "sub",
    "var",
]
