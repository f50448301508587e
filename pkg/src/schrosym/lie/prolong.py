"""Second-prolongation invariance checks for i psi_t + Lap psi + F(psi, psi*) = 0.

A check samples random on-shell jet points. At each point the solution is
expanded as a truncated Taylor series (the t-dependence is generated from
the spatial jet by Picard iteration of the equation itself), the
characteristic Q = eta - xi^mu psi_mu of each field is expanded along it, and
the prolonged coefficients

    eta^t  = D_t Q + xi^mu psi_{mu t},     eta^{aa} = D_a D_a Q + xi^mu psi_{mu aa}

give the residual of pr X applied to the equation and to its conjugate.
Residuals are normalized by the largest single term.
"""

from __future__ import annotations

import json
import math
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from importlib import resources
from itertools import product
from typing import Mapping, Sequence

import numpy as np

from .expr import AtomSampler, ExprError, Node, ParseContext, Parser, conj, parse_expr
from .fields import VectorField, expand_template, parse_fields
from .series import Series, SeriesSpace, series_space

FORMS = ("i", "heat")
WEIGHT = 4
PSI_MIN, PSI_MAX, RE_MIN = 0.5, 1.5, 0.3


class CatalogError(KeyError):
    pass


class ConstraintError(ValueError):
    def __init__(self, row, text, values):
        super().__init__(f"row {row}: parameter constraint violated: {text} (values {values})")
        self.row = row
        self.constraint = text


# --- catalog ---------------------------------------------------------------------


@lru_cache(maxsize=1)
def load_catalog() -> dict:
    with resources.files(__package__).joinpath("catalog.json").open("r", encoding="utf-8") as fh:
        return json.load(fh)


def catalog_rows() -> list[str]:
    return [r["id"] for r in load_catalog()["rows"]]


def _row_record(table, row) -> dict:
    table = str(table)
    for rec in load_catalog()["rows"]:
        if rec["id"] == str(row):
            if str(rec["table"]) != table:
                raise CatalogError(f"row {row} belongs to table {rec['table']}, not {table}")
            return rec
    raise CatalogError(f"no row {row!r} in table {table}")


def _as_complex(v) -> complex:
    if isinstance(v, (list, tuple)):
        return complex(v[0], v[1])
    return complex(v)


def _resolve_params(rec, m, params) -> dict:
    out = {k: _as_complex(v) for k, v in rec["params"].items()}
    for k, v in (params or {}).items():
        if k not in out and k not in rec.get("derived", {}):
            raise CatalogError(f"row {rec['id']} has no parameter {k!r}")
        out[k] = _as_complex(v)
    for k in rec.get("real_params", []):
        if abs(out[k].imag) > 0:
            raise ConstraintError(rec["id"], f"{k} must be real", {k: out[k]})
    for k, text in rec.get("derived", {}).items():
        if params and k in params:
            continue
        out[k] = parse_expr(text, m, out).evaluate({})
    return out


def _check_constraints(rec, m, values):
    for c in rec["constraints"]:
        lhs = parse_expr(c["expr"], m, values).evaluate({})
        rhs = parse_expr(c["value"], m, values).evaluate({})
        tol = 1e-12 * max(1.0, abs(lhs), abs(rhs))
        diff = lhs - rhs
        rel = c["rel"]
        if rel == "!=":
            ok = abs(diff) > tol
        elif rel == "==":
            ok = abs(diff) <= tol
        elif rel in (">", "<"):
            if abs(diff.imag) > tol:
                ok = False
            else:
                ok = diff.real > tol if rel == ">" else diff.real < -tol
        else:
            raise CatalogError(f"unknown relation {rel!r}")
        if not ok:
            shown = {k: values[k] for k in values if k in c["expr"] or k in c["value"]}
            raise ConstraintError(rec["id"], c["text"], shown)


@dataclass
class NonlinearitySpec:
    row: str
    m: int
    F_text: str
    omega_text: str | None
    params: dict
    F: Node
    citation: str = ""

    def __post_init__(self):
        Fc = conj(self.F)
        self.partials = {
            "F_psi": self.F.diff("psi"),
            "F_psic": self.F.diff("psic"),
            "Fc_psi": Fc.diff("psi"),
            "Fc_psic": Fc.diff("psic"),
        }
        self.Fc = Fc

    def to_json(self) -> dict:
        return {
            "row": self.row,
            "m": self.m,
            "F": self.F_text,
            "Omega": self.omega_text,
            "params": {k: [v.real, v.imag] for k, v in self.params.items()},
            "citation": self.citation,
        }


def _parse_nonlinearity(rec, m, values, F_text=None) -> NonlinearitySpec:
    F_text = F_text or rec["F"]
    symbols = {}
    if rec.get("omega"):
        symbols["Omega"] = parse_expr(rec["omega"], m, values)
    ctx = ParseContext(m, values, symbols=symbols)
    F = Parser(F_text, ctx).parse()
    if not isinstance(F, Node):
        raise ExprError("nonlinearity must be a scalar expression")
    return NonlinearitySpec(rec["id"], m, F_text, rec.get("omega"), values, F, rec.get("citation", ""))


def base_fields(m: int) -> list[VectorField]:
    out = []
    for text in load_catalog()["base_fields"]:
        for t in expand_template(text, m):
            out.extend(parse_fields(t, m))
    return out


def catalog_lookup(table, row, m: int, params: Mapping | None = None,
                   field_params: Mapping | None = None, F_text: str | None = None, errata: bool = False):
    """(NonlinearitySpec, base fields + the row's additional fields).

    ``field_params`` overrides parameters inside the fields only and
    ``F_text`` replaces the nonlinearity; both exist for negative controls.
    ``errata`` swaps in the corrected form of fields recorded as misprinted.
    """
    if m < 1:
        raise ValueError("dimension must be >= 1")
    rec = _row_record(table, row)
    values = _resolve_params(rec, m, params)
    _check_constraints(rec, m, values)
    nl = _parse_nonlinearity(rec, m, values, F_text)
    fvalues = values
    if field_params:
        merged = dict(params or {})
        merged.update(field_params)
        fvalues = _resolve_params(rec, m, merged)
    fields = base_fields(m)
    fix = rec.get("errata", {}) if errata else {}
    for text in rec["fields"]:
        fields.extend(parse_fields(fix.get(text, text), m, fvalues))
    return nl, fields


# --- jets ------------------------------------------------------------------------


@dataclass
class JetPoint:
    """Base point and free spatial data; t-derivatives are never stored."""

    t: float
    x: tuple
    psi: dict            # spatial multi-index -> d^alpha psi
    eta0: dict           # spatial jet of an auxiliary solution
    theta: np.ndarray    # random reals, free data for a solution of Lap theta = delta theta
    atoms: AtomSampler
    index: int = 0

    @property
    def m(self):
        return len(self.x)

    def psic(self) -> dict:
        return {k: v.conjugate() for k, v in self.psi.items()}


def _spatial_multi(m, deg):
    return [a for a in product(range(deg + 1), repeat=m) if sum(a) <= deg]


def sample_jet(m: int, seed: int, index: int) -> JetPoint:
    ss = np.random.SeedSequence(seed, spawn_key=(index,))
    rng = np.random.default_rng(ss)
    t = float(rng.uniform(-1, 1))
    x = tuple(float(v) for v in rng.uniform(-1, 1, size=m))
    multis = _spatial_multi(m, WEIGHT)

    def cplx():
        a, b = rng.uniform(-1, 1, size=2)
        return complex(a, b)

    # psi(0): modulus in [0.5, 1.5], real part bounded away from 0 for the Re(psi) rows
    while True:
        r = rng.uniform(PSI_MIN, PSI_MAX)
        ph = rng.uniform(-math.pi, math.pi)
        p0 = complex(r * math.cos(ph), r * math.sin(ph))
        if abs(p0.real) >= RE_MIN:
            break
    psi = {a: (p0 if sum(a) == 0 else cplx()) for a in multis}
    eta0 = {a: cplx() for a in multis}
    theta = rng.uniform(-1, 1, size=len(multis))
    return JetPoint(t, x, psi, eta0, theta, AtomSampler(ss), index)


def _from_spatial(space: SeriesSpace, jet: dict) -> Series:
    return space.from_derivatives({(0,) + a: v for a, v in jet.items()})


def theta_series(space: SeriesSpace, free: np.ndarray, delta: float, mode: str = "random",
                 parity: int = 0) -> Series:
    """A real series in x with Lap theta = delta theta exactly up to truncation.

    ``random`` fixes the coefficients with alpha_1 <= 1 from ``free`` and
    solves for the rest; ``instance`` is 1 or x_1 (delta = 0), exp(sqrt(delta) x_1)
    or cos(sqrt(-delta) x_1).
    """
    m, W = space.m, space.weight
    multis = _spatial_multi(m, W)
    c = {}
    if mode == "instance":
        for a in multis:
            c[a] = 0.0
        k = math.sqrt(abs(delta))
        # expansions about x_1 = 0 in local coordinates are fine: any shift
        # of a solution is again a solution
        for j in range(W + 1):
            a = (j,) + (0,) * (m - 1)
            if delta == 0:
                c[a] = float(j == parity)
            elif delta > 0:
                c[a] = k ** j / math.factorial(j)
            else:
                c[a] = (0.0 if j % 2 else (-1) ** (j // 2) * k ** j / math.factorial(j))
    elif mode == "random":
        for a, v in zip(multis, free):
            if a[0] <= 1:
                c[a] = float(v)
        for a in sorted(multis, key=lambda e: e[0]):
            if a[0] <= 1:
                continue
            b = (a[0] - 2,) + a[1:]
            acc = delta * c[b]
            for i in range(1, m):
                bb = list(b)
                bb[i] += 2
                bb = tuple(bb)
                if sum(bb) <= W:
                    acc -= (bb[i]) * (bb[i] - 1) * c[bb]
            c[a] = acc / (a[0] * (a[0] - 1))
    else:
        raise ValueError(f"unknown theta mode {mode!r}")
    arr = np.zeros(space.size, dtype=complex)
    for a, v in c.items():
        arr[space.index[(0,) + a]] = v
    return Series(space, arr)


@dataclass
class OnShellJet:
    jet: JetPoint
    form: str
    space: SeriesSpace
    env: dict            # series environment for field evaluation
    scalar_env: dict     # values at the base point
    psi: Series
    psic: Series

    @property
    def psi_t(self) -> complex:
        return self.psi.derivative((1,) + (0,) * self.jet.m)

    @property
    def psic_t(self) -> complex:
        return self.psic.derivative((1,) + (0,) * self.jet.m)


def _picard(space, start: Series, rhs_F: Node, coeff: complex, env: dict, atoms) -> Series:
    m = space.m
    P = start
    for _ in range(WEIGHT // 2 + 1):
        lap = space.constant(0)
        for a in range(1, m + 1):
            lap = lap + P.d(a).d(a)
        e = dict(env)
        e["psi"], e["psic"] = P, P.conj()
        Fv = rhs_F.evaluate(e, atoms)
        rhs = (lap + Fv) * coeff
        P = start + rhs.t_integral()
    return P


def onshell_substitute(nl: NonlinearitySpec, jet: JetPoint, form: str = "i", theta_delta: float = 0.0,
                       theta_mode: str = "random", need_eta0: bool = False) -> OnShellJet:
    """Complete a jet on-shell: psi_t = i(Lap psi + F) (heat form: -(Lap psi + F))."""
    if form not in FORMS:
        raise ValueError(f"form must be one of {FORMS}")
    space = series_space(jet.m, WEIGHT)
    coeff = 1j if form == "i" else -1.0
    env = {"t": space.variable(0, jet.t)}
    for a in range(jet.m):
        env[f"x{a + 1}"] = space.variable(a + 1, jet.x[a])
    start = _from_spatial(space, jet.psi)
    try:
        P = _picard(space, start, nl.F, coeff, env, jet.atoms)
        if need_eta0:
            env["eta0"] = _picard(space, _from_spatial(space, jet.eta0), nl.F, coeff, env, jet.atoms)
    except ZeroDivisionError as exc:
        raise ExprError(f"nonlinearity singular at the sampled point: {exc}") from None
    env["theta"] = theta_series(space, jet.theta, theta_delta, theta_mode, jet.index % 2)
    env["psi"], env["psic"] = P, P.conj()
    scalar = {k: v.value for k, v in env.items()}
    return OnShellJet(jet, form, space, env, scalar, P, P.conj())


def total_derivative(e: Node, direction: int, osj: OnShellJet) -> complex:
    """D_direction e at the base point (0 = t, a = x_a), psi on-shell."""
    v = e.evaluate(osj.env, osj.jet.atoms)
    if not isinstance(v, Series):
        return 0j
    return v.d(direction).value


# --- residuals -------------------------------------------------------------------


@dataclass
class Residual:
    r1: complex
    r2: complex
    scale1: float
    scale2: float

    @property
    def raw(self) -> float:
        return max(abs(self.r1), abs(self.r2))

    @property
    def normalized(self) -> float:
        n1 = abs(self.r1) / self.scale1 if self.scale1 > 0 else abs(self.r1)
        n2 = abs(self.r2) / self.scale2 if self.scale2 > 0 else abs(self.r2)
        return max(n1, n2)


def _series(v, space):
    return v if isinstance(v, Series) else space.constant(v)


def _prolonged(Q: Series, P: Series, xi_t0, xi0, m) -> tuple:
    z = [0] * (m + 1)

    def o(*bumps):
        e = list(z)
        for b in bumps:
            e[b] += 1
        return tuple(e)

    eta_t = Q.d(0).value + xi_t0 * P.derivative(o(0, 0)) + sum(xi0[b] * P.derivative(o(b + 1, 0)) for b in range(m))
    eta_aa = []
    for a in range(1, m + 1):
        v = Q.d(a).d(a).value + xi_t0 * P.derivative(o(0, a, a))
        v += sum(xi0[b] * P.derivative(o(b + 1, a, a)) for b in range(m))
        eta_aa.append(v)
    return eta_t, eta_aa


def prolong_residual(X: VectorField, nl: NonlinearitySpec, osj: OnShellJet, _partials=None) -> Residual:
    """pr X applied to Delta_1 = c psi_t + Lap psi + F and to its conjugate, on-shell."""
    m = osj.jet.m
    space = osj.space
    atoms = osj.jet.atoms
    env = osj.env
    xi_t = _series(X.xi_t.evaluate(env, atoms), space)
    xi = [_series(a.evaluate(env, atoms), space) for a in X.xi]
    eta = _series(X.eta.evaluate(env, atoms), space)
    etac = _series(X.etac.evaluate(env, atoms), space)
    P, Pc = osj.psi, osj.psic
    Q = eta - xi_t * P.d(0)
    Qc = etac - xi_t * Pc.d(0)
    for b in range(m):
        Q = Q - xi[b] * P.d(b + 1)
        Qc = Qc - xi[b] * Pc.d(b + 1)
    xi_t0 = xi_t.value
    xi0 = [a.value for a in xi]
    eta_t, eta_aa = _prolonged(Q, P, xi_t0, xi0, m)
    etac_t, etac_aa = _prolonged(Qc, Pc, xi_t0, xi0, m)
    if _partials is None:
        _partials = evaluate_partials(nl, osj)
    Fp, Fpc, Gp, Gpc = _partials
    ct = 1j if osj.form == "i" else 1.0
    e0, ec0 = eta.value, etac.value
    terms1 = [ct * eta_t, *eta_aa, Fp * e0, Fpc * ec0]
    terms2 = [np.conj(ct) * etac_t, *etac_aa, Gp * e0, Gpc * ec0]
    return Residual(complex(sum(terms1)), complex(sum(terms2)),
                    float(max(abs(v) for v in terms1)), float(max(abs(v) for v in terms2)))


def evaluate_partials(nl: NonlinearitySpec, osj: OnShellJet) -> tuple:
    p = nl.partials
    env = osj.scalar_env
    a = osj.jet.atoms
    return tuple(complex(p[k].evaluate(env, a)) for k in ("F_psi", "F_psic", "Fc_psi", "Fc_psic"))


def conjugate_pairing_defect(X: VectorField, osj: OnShellJet) -> float:
    """|etac - conj(eta)| at the base point (0 for real fields)."""
    env, a = osj.scalar_env, osj.jet.atoms
    e = complex(X.eta.evaluate(env, a))
    ec = complex(X.etac.evaluate(env, a))
    xs = [complex(X.xi_t.evaluate(env, a))] + [complex(v.evaluate(env, a)) for v in X.xi]
    return max([abs(ec - e.conjugate())] + [abs(v.imag) for v in xs])


# --- row checks ------------------------------------------------------------------


@dataclass
class FieldResult:
    label: str
    max_normalized: float
    median_normalized: float
    max_raw: float
    conjugate_paired: bool
    conjugation_defect: float      # max |R2 - conj R1| / scale over samples
    passed: bool


@dataclass
class RowReport:
    table: str
    row: str
    m: int
    form: str
    params: dict
    n_samples: int
    seed: int
    tol: float
    theta_delta: float | None
    errata: bool = False
    fields: list = field(default_factory=list)
    max_residual: float = 0.0
    median_residual: float = 0.0
    passed: bool = False
    nonlinearity: dict = field(default_factory=dict)

    def failing(self) -> list[str]:
        return [f.label for f in self.fields if not f.passed]

    def to_json(self) -> dict:
        d = asdict(self)
        d["params"] = {k: [v.real, v.imag] for k, v in self.params.items()}
        return d


def _sample_task(args):
    (nl, fields, m, seed, idx, form, theta_delta, theta_modes, need_eta0) = args
    jet = sample_jet(m, seed, idx)
    rows = []
    for mode in theta_modes:
        osj = onshell_substitute(nl, jet, form, theta_delta, mode, need_eta0)
        partials = evaluate_partials(nl, osj)
        out = []
        for X in fields:
            res = prolong_residual(X, nl, osj, partials)
            sc = max(res.scale1, res.scale2)
            conj_def = abs(res.r2 - np.conj(res.r1)) / sc if sc > 0 else abs(res.r2 - np.conj(res.r1))
            out.append((res.normalized, res.raw, conjugate_pairing_defect(X, osj), float(conj_def)))
        rows.append(out)
    # worst over theta modes, per field
    merged = []
    for k in range(len(fields)):
        vals = [r[k] for r in rows]
        merged.append(tuple(max(v[i] for v in vals) for i in range(4)))
    return merged


def _uses(fields, name) -> bool:
    return any(name in X.eta.free_vars() | X.etac.free_vars() | X.xi_t.free_vars()
               | set().union(*[a.free_vars() for a in X.xi]) for X in fields)


def check_row(table, row, m: int, params: Mapping | None = None, n_samples: int = 100, seed: int = 0,
              tol: float = 1e-9, form: str = "i", theta_delta: float | None = None,
              fields: Sequence[str] | None = None, extra_fields: Sequence[str] = (),
              field_params: Mapping | None = None, F_text: str | None = None,
              include_base: bool = True, errata: bool = False, workers: int = 1) -> RowReport:
    """Check the row's symmetries at ``n_samples`` random on-shell points.

    ``fields`` replaces the catalog list (base fields still included unless
    ``include_base`` is False); ``extra_fields`` appends to it.
    """
    rec = _row_record(table, row)
    nl, vfs = catalog_lookup(table, row, m, params, field_params, F_text, errata)
    nbase = len(base_fields(m))
    fvalues = nl.params if not field_params else _resolve_params(rec, m, {**(params or {}), **field_params})
    if fields is not None:
        vfs = vfs[:nbase] + [X for t in fields for X in parse_fields(t, m, fvalues)]
    vfs = vfs + [X for t in extra_fields for X in parse_fields(t, m, fvalues)]
    if not include_base:
        vfs = vfs[nbase:]
    if theta_delta is None:
        th = (rec.get("theta") or {}).get("delta", "0")
        theta_delta = parse_expr(th, m, nl.params).evaluate({}).real
    uses_theta = _uses(vfs, "theta")
    theta_modes = ("random", "instance") if uses_theta else ("random",)
    need_eta0 = _uses(vfs, "eta0")
    tasks = [(nl, vfs, m, seed, idx, form, float(theta_delta), theta_modes, need_eta0) for idx in range(n_samples)]
    if workers > 1 and n_samples > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            per_sample = list(ex.map(_sample_task, tasks, chunksize=max(1, n_samples // (4 * workers))))
    else:
        per_sample = [_sample_task(t) for t in tasks]
    results = []
    for k, X in enumerate(vfs):
        norm = [s[k][0] for s in per_sample]
        raw = [s[k][1] for s in per_sample]
        pair = max(s[k][2] for s in per_sample) if per_sample else 0.0
        cdef = max(s[k][3] for s in per_sample) if per_sample else 0.0
        mx = max(norm) if norm else 0.0
        results.append(FieldResult(X.label, mx, statistics.median(norm) if norm else 0.0,
                                   max(raw) if raw else 0.0, pair <= 1e-12, cdef, mx <= tol))
    per_sample_max = [max(v[0] for v in s) for s in per_sample] if vfs else [0.0]
    report = RowReport(
        table=str(rec["table"]), row=rec["id"], m=m, form=form, params=dict(nl.params),
        n_samples=n_samples, seed=seed, tol=tol, theta_delta=float(theta_delta) if uses_theta else None,
        errata=errata, fields=results,
        max_residual=max(per_sample_max), median_residual=statistics.median(per_sample_max),
        passed=all(r.passed for r in results), nonlinearity=nl.to_json(),
    )
    return report


# --- negative controls --------------------------------------------------------------


@dataclass
class NegativeCase:
    name: str
    row: str
    m: int
    fields: list                         # the fields expected to fail
    params: dict = field(default_factory=dict)
    field_params: dict = field(default_factory=dict)
    F_text: str | None = None
    control_fields: list | None = None   # unperturbed counterpart expected to pass


def default_negative_cases() -> list[NegativeCase]:
    return [
        NegativeCase("exponent 4/n + 0.1 with Pi", "2.8", 3, ["Pi"], F_text="s*rho^(4/n + 0.1)*psi",
                     control_fields=["Pi"]),
        NegativeCase("gamma2 + 0.2 in the field only", "2.6", 2, ["M - g2*D"], field_params={"g2": 0.9},
                     control_fields=["M - g2*D"]),
        NegativeCase("gamma detuned in the field only", "2.7", 2, ["I - g*D"], field_params={"g": 1.6},
                     control_fields=["I - g*D"]),
        NegativeCase("Pi added to the non-critical power", "2.7", 2, ["Pi"], control_fields=["G_a", "M", "I - g*D"]),
        NegativeCase("Pi for |psi|^2 psi in one dimension", "2.7", 1, ["Pi"], params={"g": 2.0},
                     control_fields=["G_a", "M", "I - g*D"]),
        NegativeCase("delta detuned in e^(delta t) M", "1.3", 1, ["exp(d*t)*M"], field_params={"d": 0.9},
                     control_fields=["exp(d*t)*M"]),
        NegativeCase("delta2 detuned in the exponent rates", "2.13", 2,
                     ["exp(lam1*t)*(d4*I + (lam1 - d2)*M)"], field_params={"d2": 1.1},
                     control_fields=["exp(lam1*t)*(d4*I + (lam1 - d2)*M)"]),
    ]


def _table_of(row: str) -> str:
    return "base" if row == "base" else row.split(".")[0]


def negative_sweep(cases: Sequence[NegativeCase] | None = None, n_samples: int = 100, seed: int = 0,
                   tol: float = 1e-9, min_median: float = 1e-2, workers: int = 1) -> list[dict]:
    """Each perturbed case must fail (median normalized residual >= min_median)
    and its unperturbed control must pass."""
    out = []
    for c in cases or default_negative_cases():
        table = _table_of(c.row)
        bad = check_row(table, c.row, c.m, c.params, n_samples, seed, tol, fields=c.fields,
                        field_params=c.field_params or None, F_text=c.F_text, include_base=False,
                        workers=workers)
        rec = {"name": c.name, "row": c.row, "m": c.m, "fields": c.fields,
               "max_residual": bad.max_residual, "median_residual": bad.median_residual,
               "failed_as_required": (not bad.passed) and bad.median_residual >= min_median}
        if c.control_fields is not None:
            ctl = check_row(table, c.row, c.m, c.params, n_samples, seed, tol, fields=c.control_fields,
                            include_base=False, workers=workers)
            rec["control_max_residual"] = ctl.max_residual
            rec["control_passed"] = ctl.passed
        out.append(rec)
    return out


def theta_variants(row: str, m: int, helmholtz_delta: float = 0.9, **kw) -> dict:
    """Check a theta row with Lap theta = 0 and with Lap theta = delta theta."""
    table = _table_of(row)
    rec = _row_record(table, row)
    if not rec.get("theta"):
        raise CatalogError(f"row {row} has no theta field")
    out = {}
    for name, delta in (("laplace", 0.0), ("helmholtz", helmholtz_delta)):
        r = check_row(table, row, m, theta_delta=delta, **kw)
        out[name] = {"theta_delta": delta, "passed": r.passed, "max_residual": r.max_residual,
                     "failing": r.failing()}
    return out


__all__ = [
    "CatalogError",
    "ConstraintError",
    "FieldResult",
    "JetPoint",
    "NegativeCase",
    "NonlinearitySpec",
    "OnShellJet",
    "Residual",
    "RowReport",
    "base_fields",
    "catalog_lookup",
    "catalog_rows",
    "check_row",
    "conjugate_pairing_defect",
    "default_negative_cases",
    "load_catalog",
    "negative_sweep",
    "onshell_substitute",
    "prolong_residual",
    "sample_jet",
    "theta_series",
    "theta_variants",
    "total_derivative",
]
