"""Command-line front end.

Exit codes: 0 when every check passes, 1 when a check fails (the report is
still written), 2 for usage or configuration errors.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from fractions import Fraction

import numpy as np

from .deteqs import DetEqError, generate_det_system
from .exact import LaurentPoly
from .exact.poly import PoleError
from .killing import SaturationError, dimension_report, solve_free
from .lie.expr import ExprError
from .lie.prolong import CatalogError, ConstraintError, catalog_rows, check_row, negative_sweep
from .reports import PotentialParseError, detsystem_to_json, detsystem_to_latex, dumps, make_report, parse_potential
from .third_order import (
    FAMILIES,
    FAMILY_PARAMS,
    OdeBlowUp,
    PotentialFamily,
    ThirdOrderError,
    compatibility_residual,
    exact_verify,
    family_residual,
    numeric_verify,
    ode_integrate,
)

WORKERS_ENV = "SCHROSYM_WORKERS"

USAGE_ERRORS = (CatalogError, ConstraintError, DetEqError, ExprError, PotentialParseError, ThirdOrderError,
                PoleError, ValueError)


class UsageError(Exception):
    pass


def default_workers() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        n = int(raw)
    except ValueError:
        raise UsageError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None
    if n < 1:
        raise UsageError(f"{WORKERS_ENV} must be >= 1")
    return n


def _rational(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}") from None


def _assignment(text: str) -> tuple:
    if "=" not in text:
        raise argparse.ArgumentTypeError(f"expected name=value, got {text!r}")
    k, v = text.split("=", 1)
    return k.strip(), v.strip()


def _number(text: str):
    """Rational if possible, else complex (for parameters such as s=0.7-0.4j)."""
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        pass
    try:
        return complex(text.replace(" ", "").replace("i", "j"))
    except ValueError:
        raise UsageError(f"not a number: {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--output", "-o", help="write the report/document here instead of stdout")
    p = argparse.ArgumentParser(prog="schrosym", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    d = sub.add_parser("detgen", parents=[common], help="emit determining equations")
    d.add_argument("--order", type=int, required=True)
    d.add_argument("--dim", type=int, required=True)
    d.add_argument("--mass", type=_rational, default=Fraction(1))
    d.add_argument("--stationary", action="store_true")
    d.add_argument("--include-lower", action="store_true", help="stationary: also emit the (n-1)-th order chain")
    d.add_argument("--format", choices=("json", "latex"), default="json")

    f = sub.add_parser("freesolve", parents=[common], help="symmetry operators of the free equation")
    f.add_argument("--order", type=int, required=True)
    f.add_argument("--dim", type=int, required=True)
    f.add_argument("--mass", type=_rational, default=Fraction(1))
    f.add_argument("--margins", type=int, nargs="+", default=[0, 1, 2])
    f.add_argument("--dimensions", action="store_true", help="also tabulate dimensions against N_n")

    t = sub.add_parser("third-order", parents=[common], help="third-order operators for the canonical potential families")
    t.add_argument("--family", choices=FAMILIES, required=True)
    t.add_argument("--param", type=_assignment, action="append", default=[], metavar="NAME=VALUE")
    t.add_argument("--potential", help="exact Laurent potential U(x); omit for ODE integration")
    t.add_argument("--variant", choices=("verified", "printed"), default="verified")
    t.add_argument("--interval", type=float, nargs=2, default=[0.0, 1.0])
    t.add_argument("--initial", type=_assignment, action="append", default=[], metavar="JET=VALUE",
                   help="initial data at interval[0]: U, U1 (U2 for E215, phi for E216)")
    t.add_argument("--ode-tol", type=float, default=1e-12)
    t.add_argument("--tol", type=float, default=1e-8)
    t.add_argument("--grid", type=int, default=20, help="t and x samples for the numeric check")
    t.add_argument("--csv", help="export the ODE solution (x, U, dU) as CSV")

    lc = sub.add_parser("lie-check", parents=[common], help="check one row of the classification tables")
    _lie_args(lc)
    lc.add_argument("--table", required=True, help="1, 2 or base")
    lc.add_argument("--row", required=True)
    lc.add_argument("--dim", type=int, required=True)
    lc.add_argument("--param", type=_assignment, action="append", default=[], metavar="NAME=VALUE")
    lc.add_argument("--theta-delta", type=float)
    lc.add_argument("--extra-field", action="append", default=[])

    v = sub.add_parser("verify", parents=[common], help="run the bundled verification suite")
    _lie_args(v)
    v.add_argument("--dims", type=int, nargs="+", default=[1, 2, 3])
    v.add_argument("--what", choices=("all", "catalog", "negative", "free"), default="all")
    return p


def _lie_args(p):
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--form", choices=("i", "heat"), default="i")
    p.add_argument("--errata", action="store_true", help="use corrected forms of fields recorded as misprinted")
    p.add_argument("--workers", type=int, default=None, help=f"default from ${WORKERS_ENV} or 1")


# --- subcommands -------------------------------------------------------------------


def cmd_detgen(a):
    sysm = generate_det_system(a.order, a.dim, a.stationary, a.mass, a.include_lower)
    if a.format == "latex":
        return None, detsystem_to_latex(sysm), True
    payload = detsystem_to_json(sysm)
    return {"system": payload, "equations": len(payload["equations"])}, None, True


def cmd_freesolve(a):
    try:
        basis = solve_free(a.order, a.dim, a.mass, a.margins, verify=True)
    except (SaturationError, AssertionError) as exc:
        return {"error": str(exc)}, None, False
    res = {"basis": basis.to_json(), "commutators_zero": True}
    if a.dimensions:
        res["dimensions"] = [r.to_json() for r in dimension_report(a.order, a.dim, a.mass)]
    return res, None, True


def cmd_third_order(a):
    params = {k: _number(v) for k, v in a.param}
    unknown = set(params) - set(FAMILY_PARAMS[a.family])
    if unknown:
        raise UsageError(f"family {a.family} takes {FAMILY_PARAMS[a.family]}, got {sorted(unknown)}")
    if a.potential:
        U = parse_potential(a.potential, 1)
        fam = PotentialFamily(a.family, params, potential=U)
        fres = family_residual(fam)
        ver = exact_verify(fam, a.variant)
        comp = None
        if a.family == "W213":
            one, zero = LaurentPoly.constant(2, 1), LaurentPoly.zero(2)
            comp = compatibility_residual(U, one, zero, zero)
        res = {"representation": "exact", "family_residual": fres.to_str(), "family_residual_zero": fres.is_zero(),
               "verification": ver}
        if comp is not None:
            res["compatibility_residual"] = comp.to_str()
        ok = ver["passed"] and fres.is_zero() and (comp is None or comp.is_zero())
        return res, None, ok
    fam = PotentialFamily(a.family, {k: float(v) if not isinstance(v, complex) else v for k, v in params.items()})
    initial = {k: float(_number(v)) for k, v in a.initial}
    try:
        sol = ode_integrate(fam, a.interval, initial, tolerance=a.ode_tol)
    except OdeBlowUp as exc:
        return {"representation": "numeric", "error": str(exc), "last_safe_x": exc.last_x}, None, False
    if a.csv:
        sol.to_csv(a.csv)
    lo, hi = min(a.interval), max(a.interval)
    ver = numeric_verify(fam, sol, np.linspace(0.0, 1.0, a.grid), np.linspace(lo, hi, a.grid), a.tol, a.variant)
    res = {"representation": "numeric", "solution": sol.to_json(), "verification": ver}
    return res, None, bool(ver["passed"])


def _workers(a) -> int:
    return a.workers if a.workers is not None else default_workers()


def cmd_lie_check(a):
    params = {k: _number(v) for k, v in a.param}
    params = {k: complex(v) for k, v in params.items()}
    r = check_row(a.table, a.row, a.dim, params or None, a.samples, a.seed, a.tol, a.form, a.theta_delta,
                  extra_fields=a.extra_field, errata=a.errata, workers=_workers(a))
    return r.to_json(), None, r.passed


def _table(row):
    return "base" if row == "base" else row.split(".")[0]


def cmd_verify(a):
    checks, failed = [], []
    w = _workers(a)
    if a.what in ("all", "catalog"):
        for row in catalog_rows():
            for m in a.dims:
                try:
                    r = check_row(_table(row), row, m, None, a.samples, a.seed, a.tol, a.form,
                                  errata=a.errata, workers=w)
                except ConstraintError as exc:
                    checks.append({"kind": "catalog", "row": row, "m": m, "skipped": str(exc)})
                    continue
                checks.append({"kind": "catalog", "row": row, "m": m, "passed": r.passed,
                               "max_residual": r.max_residual, "failing": r.failing()})
                if not r.passed:
                    failed.append(f"row {row} m={m}: {', '.join(r.failing())}")
    if a.what in ("all", "negative"):
        for rec in negative_sweep(n_samples=a.samples, seed=a.seed, tol=a.tol, workers=w):
            ok = rec["failed_as_required"] and rec.get("control_passed", True)
            checks.append({"kind": "negative", **rec, "passed": ok})
            if not ok:
                failed.append(f"negative control {rec['name']!r}")
    if a.what in ("all", "free"):
        for n, m in ((1, 1), (2, 1), (3, 1), (1, 2), (2, 2), (1, 3)):
            try:
                b = solve_free(n, m)
                checks.append({"kind": "free", "n": n, "m": m, "dimension": len(b), "passed": True})
            except (SaturationError, AssertionError) as exc:
                checks.append({"kind": "free", "n": n, "m": m, "passed": False, "error": str(exc)})
                failed.append(f"free n={n} m={m}")
    return {"checks": checks}, None, not failed, failed, len(checks)


COMMANDS = {
    "detgen": cmd_detgen,
    "freesolve": cmd_freesolve,
    "third-order": cmd_third_order,
    "lie-check": cmd_lie_check,
    "verify": cmd_verify,
}


def _config(a) -> dict:
    return {k: v for k, v in sorted(vars(a).items()) if k not in ("output",)}


def run(argv=None) -> int:
    parser = build_parser()
    try:
        a = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    t0 = time.perf_counter()
    try:
        out = COMMANDS[a.command](a)
    except (UsageError, *USAGE_ERRORS) as exc:
        print(f"schrosym {a.command}: error: {exc}", file=sys.stderr)
        return 2
    if len(out) == 3:
        results, text, ok = out
        failed, checks = ([] if ok else [a.command]), 1
    else:
        results, text, ok, failed, checks = out
    if text is None:
        rep = make_report(a.command, _config(a), results, ok, failed, checks, time.perf_counter() - t0)
        text = dumps(rep)
    if a.output:
        with open(a.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0 if ok else 1


def main() -> None:
    sys.exit(run())


__all__ = ["build_parser", "default_workers", "main", "run"]
