"""Input parsing and report emission shared by the command-line tools."""

from __future__ import annotations

import json
import re
from fractions import Fraction
from importlib import resources

import jsonschema

from . import __version__
from .deteqs import DetEquation, DetSystem, DetTerm
from .exact import GaussianRational, LaurentPoly

SCHEMA_VERSION = "1.0"

CONVENTIONS = {
    "momentum": "p_a = -i d_a, so p^2 = -Laplacian and L = i d_t + (1/2M) Laplacian - V",
    "symmetrization": "parenthesized indices are averaged over permutations: T^(a_1..a_k) = (1/k!) sum over orderings",
    "equation_form": "nonlinear equation checked as i psi_t + Laplacian psi + F = 0 unless the heat form "
                     "psi_t + Laplacian psi + F = 0 is requested",
}


class PotentialParseError(ValueError):
    def __init__(self, msg, text, pos):
        super().__init__(f"{msg} at position {pos}: {text[:pos]}<!>{text[pos:]}")
        self.pos = pos


# --- potentials ------------------------------------------------------------------

_PTOKEN = re.compile(r"\s*(?:(\d+(?:\.\d*)?|\.\d+)|([A-Za-z][A-Za-z0-9]*)|(\S))")


def _variable_slots(m: int) -> dict:
    slots = {"t": 0}
    for a in range(1, m + 1):
        slots[f"x{a}"] = a
    if m == 1:
        slots["x"] = 1
    return slots


class _PotentialParser:
    def __init__(self, text: str, m: int):
        self.text = text
        self.m = m
        self.nvars = m + 1
        self.slots = _variable_slots(m)
        self.toks = []
        for mt in _PTOKEN.finditer(text):
            if not mt.group(0).strip():
                continue
            num, name, sym = mt.groups()
            self.toks.append(("num" if num else "name" if name else "sym", num or name or sym, mt.start(mt.lastindex)))
        self.i = 0

    def fail(self, msg, pos=None):
        if pos is None:
            pos = self.toks[self.i][2] if self.i < len(self.toks) else len(self.text)
        raise PotentialParseError(msg, self.text, pos)

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else (None, None, len(self.text))

    def take(self, value=None):
        tok = self.peek()
        if tok[0] is None:
            self.fail("unexpected end of input")
        if value is not None and tok[1] != value:
            self.fail(f"expected {value!r}")
        self.i += 1
        return tok

    def parse(self) -> LaurentPoly:
        if not self.toks:
            self.fail("empty expression", 0)
        p = self.expr()
        if self.i != len(self.toks):
            self.fail("unexpected token")
        return p

    def expr(self):
        p = self.term()
        while self.peek()[1] in ("+", "-"):
            op = self.take()[1]
            q = self.term()
            p = p + q if op == "+" else p - q
        return p

    def term(self):
        p = self.unary()
        while self.peek()[1] in ("*", "/"):
            op = self.take()[1]
            pos = self.peek()[2]
            q = self.unary()
            if op == "*":
                p = p * q
            else:
                p = self.divide(p, q, pos)
        return p

    def divide(self, p, q, pos):
        if len(q.terms) != 1:
            self.fail("division only by a nonzero monomial", pos)
        (mono, c), = q.terms.items()
        inv = LaurentPoly.monomial([-e for e in mono], c.inverse())
        return p * inv

    def unary(self):
        if self.peek()[1] == "-":
            self.take()
            return -self.unary()
        if self.peek()[1] == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[1] == "^":
            self.take()
            pos = self.peek()[2]
            e = self.unary()
            if not e.is_constant() and not e.is_zero():
                self.fail("exponent must be an integer constant", pos)
            c = e.coefficient([0] * self.nvars)
            if c.im or c.re.denominator != 1:
                self.fail("non-integer exponent", pos)
            k = int(c.re)
            if k < 0:
                if len(base.terms) != 1:
                    self.fail("negative powers only of monomials", pos)
                base = self.divide(LaurentPoly.constant(self.nvars, 1), base, pos)
                k = -k
            return base ** k
        return base

    def atom(self):
        kind, val, pos = self.take()
        if kind == "num":
            return LaurentPoly.constant(self.nvars, Fraction(val))
        if kind == "name":
            if val in self.slots:
                return LaurentPoly.var(self.nvars, self.slots[val])
            if val == "i":
                return LaurentPoly.constant(self.nvars, GaussianRational(0, 1))
            self.fail(f"unknown symbol {val!r}", pos)
        if val == "(":
            p = self.expr()
            self.take(")")
            return p
        self.fail(f"unexpected {val!r}", pos)


def parse_potential(text: str, m: int = 1) -> LaurentPoly:
    """Exact Laurent polynomial in (t, x_1..x_m) from text.

    Grammar: rationals, t, x (m = 1) or x1..xm, + - * / ^ and parentheses;
    exponents are integers and division is only by monomials.
    """
    if m < 1:
        raise ValueError("dimension must be >= 1")
    return _PotentialParser(text, m).parse()


# --- determining systems -------------------------------------------------------------


def _frac_json(q) -> list:
    q = Fraction(q)
    return [q.numerator, q.denominator]


def detsystem_to_json(sys: DetSystem) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "order": sys.order,
        "dim": sys.dim,
        "stationary": sys.stationary,
        "mass": _frac_json(sys.mass),
        "convention": sys.convention,
        "equations": [
            {
                "rank": eq.rank,
                "free": list(eq.free),
                "chain": eq.chain,
                "terms": [
                    {
                        "coefficient": _frac_json(t.coefficient),
                        "rank": t.rank,
                        "component": list(t.component),
                        "t_order": t.t_order,
                        "x_deriv": list(t.x_deriv),
                        "v_deriv": None if t.v_deriv is None else list(t.v_deriv),
                        "symmetrized": t.symmetrized,
                    }
                    for t in eq.terms
                ],
            }
            for eq in sys.equations
        ],
    }


def detsystem_from_json(data: dict) -> DetSystem:
    validate(data, "detsystem")
    eqs = []
    for e in data["equations"]:
        terms = tuple(
            DetTerm(Fraction(*t["coefficient"]), t["rank"], tuple(t["component"]), t["t_order"],
                    tuple(t["x_deriv"]), None if t["v_deriv"] is None else tuple(t["v_deriv"]), t["symmetrized"])
            for t in e["terms"]
        )
        eqs.append(DetEquation(e["rank"], tuple(e["free"]), e["chain"], terms))
    return DetSystem(data["order"], data["dim"], data["stationary"], Fraction(*data["mass"]), tuple(eqs),
                     data["convention"])


def _idx(ix) -> str:
    return "".join(str(a) for a in ix)


def _latex_coeff(c: Fraction, first: bool) -> str:
    sign = "-" if c < 0 else ("" if first else "+")
    mag = abs(c)
    if mag == 1:
        body = ""
    elif mag.denominator == 1:
        body = str(mag.numerator)
    else:
        body = rf"\tfrac{{{mag.numerator}}}{{{mag.denominator}}}"
    return (f" {sign} " if not first else sign) + body


def _latex_term(t: DetTerm) -> str:
    K = r"\dot{K}" if t.t_order else "K"
    comp = _idx(t.component)
    if t.x_deriv:
        (a,) = t.x_deriv
        return rf"\partial^{{{a}}}{K}^{{{comp}}}" if comp else rf"\partial^{{{a}}}{K}"
    out = f"{K}^{{{comp}}}" if comp else K
    if t.v_deriv is not None:
        out += rf"\,\partial_{{{_idx(t.v_deriv)}}}V"
    return out


def _latex_equation(eq: DetEquation) -> str:
    """Symmetrized gradient terms are folded back into one bracketed term."""
    pieces = []
    sym = [t for t in eq.terms if t.symmetrized]
    done = False
    for t in eq.terms:
        if t.symmetrized:
            if done:
                continue
            done = True
            coeff = sum((u.coefficient for u in sym), Fraction(0))
            f = eq.free
            pieces.append((coeff, rf"\partial^{{({f[0]}}}K^{{{_idx(f[1:])})}}"))
        else:
            pieces.append((t.coefficient, _latex_term(t)))
    return "".join(_latex_coeff(c, k == 0) + body for k, (c, body) in enumerate(pieces))


def detsystem_to_latex(sys: DetSystem) -> str:
    head = "stationary" if sys.stationary else "time-dependent"
    lines = [
        f"% determining equations, order {sys.order}, dimension {sys.dim}, {head}, M = {sys.mass}",
        "% parenthesized indices are symmetrized with weight 1/k!; "
        "V-coupling coefficients (-1)^{q+1} 4 C(j,r) follow from the commutator",
        r"\begin{align*}",
    ]
    body = []
    for eq in sys.equations:
        tag = f"r={eq.rank}" + ("" if eq.chain == "full" else f", {eq.chain}")
        body.append(_latex_equation(eq) + r" &= 0 \quad(" + tag + ")")
    lines.append((r" \\" + "\n").join(body))
    lines.append(r"\end{align*}")
    return "\n".join(lines) + "\n"


# --- reports -------------------------------------------------------------------------


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, complex):
        return [v.real, v.imag]
    if isinstance(v, Fraction):
        return _frac_json(v)
    if hasattr(v, "item") and callable(v.item):  # numpy scalars
        return _jsonable(v.item())
    if isinstance(v, float) and v != v:
        return None
    if isinstance(v, (str, int, float, bool)) or v is None:
        return v
    return str(v)


def make_report(command: str, config: dict, results, passed: bool, failed=(), checks: int = 1,
                seconds: float = 0.0) -> dict:
    rep = {
        "schema_version": SCHEMA_VERSION,
        "tool": {"name": "schrosym", "version": __version__},
        "command": command,
        "config": _jsonable(config),
        "conventions": dict(CONVENTIONS),
        "results": _jsonable(results),
        "summary": {"passed": bool(passed), "checks": int(checks), "failed": [str(f) for f in failed]},
        "timing": {"seconds": round(float(seconds), 6)},
    }
    validate(rep, "report")
    return rep


def dumps(report: dict, exclude_timing: bool = False) -> str:
    """Canonical JSON text; with ``exclude_timing`` the result is deterministic."""
    if exclude_timing:
        report = {k: v for k, v in report.items() if k != "timing"}
    return json.dumps(report, sort_keys=True, indent=2, allow_nan=False) + "\n"


def load_schema(name: str) -> dict:
    with resources.files(__package__).joinpath("schemas", f"{name}.schema.json").open("r", encoding="utf-8") as fh:
        return json.load(fh)


def validate(doc: dict, name: str) -> None:
    jsonschema.validate(doc, load_schema(name))


__all__ = [
    "CONVENTIONS",
    "PotentialParseError",
    "SCHEMA_VERSION",
    "detsystem_from_json",
    "detsystem_to_json",
    "detsystem_to_latex",
    "dumps",
    "load_schema",
    "make_report",
    "parse_potential",
    "validate",
]
