"""Acceptance criteria 1-9.

Each test prints one line of the form

    ACCEPTANCE <k> PASS|FAIL  <name>  <measured vs pinned tolerance>  <runtime vs budget>

Run ``pytest tests/test_acceptance.py -v`` or ``python3 tests/test_acceptance.py``.
"""

from __future__ import annotations

import json
import os
import sys
import time
from fractions import Fraction

import pytest

from schrosym.cli import run
from schrosym.deteqs import (
    Ansatz,
    compare_solution_spaces,
    generate_det_system,
    instantiate,
    oracle_system,
    random_potential,
)
from schrosym.exact import LaurentPoly
from schrosym.killing import ansatz_bounds, dimension_report, solve_free
from schrosym.lie.prolong import check_row
from schrosym.reports import dumps
from schrosym.third_order import (
    PotentialFamily,
    ThirdOrderError,
    build_operator,
    compatibility_residual,
    exact_verify,
    family_residual,
    numeric_verify,
    ode_integrate,
)
from schrosym.weyl import build_L, commutator_with_L

from conftest import ACCEPTANCE_LINES

# pinned tolerances and budgets
C1_BUDGET = 120.0
C3_BUDGET = 300.0
C3_FORMULA_M3 = {0: 1, 1: 9, 2: 40}
C4_BUDGET = 1.0
C5_SERIES_TOL, C5_RESIDUAL_TOL, C5_GRID, C5_BUDGET = 1e-10, 1e-8, 20, 30.0
C6_TOL, C6_BUDGET = 1e-7, 30.0
C7_TOL, C7_SAMPLES, C7_DIMS, C7_BUDGET = 1e-9, 100, (1, 2, 3), 300.0
C8_MIN_MEDIAN, C8_SAMPLES = 1e-2, 100
SEED = 0
WORKERS = max(1, min(8, os.cpu_count() or 1))

# first-run reports of criteria 5-8, compared against a second run by criterion 9
_REPORTS: dict[str, str] = {}


def emit(k: int, passed: bool, name: str, detail: str) -> None:
    line = f"ACCEPTANCE {k} {'PASS' if passed else 'FAIL'}  {name}  {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)


def _cli_report(key: str, argv: list[str], tmp: str) -> tuple[int, dict]:
    path = os.path.join(tmp, f"{key}-{time.perf_counter_ns()}.json")
    code = run(argv + ["-o", path])
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    return code, json.loads(text)


def _argv(key: str) -> list[str]:
    w = ["--workers", str(WORKERS)]
    return {
        "c5": ["third-order", "--family", "P214", "--param", "omega2=1", "--interval", "0", "1",
               "--initial", "U=0", "--initial", "U1=0", "--tol", str(C5_RESIDUAL_TOL), "--grid", str(C5_GRID)],
        "c6": ["third-order", "--family", "E216", "--param", "omega4=-1", "--param", "omega5=1",
               "--interval", "0", "1", "--initial", "phi=0", "--initial", "U=0.5", "--initial", "U1=0",
               "--tol", str(C6_TOL)],
        "c7": ["verify", "--what", "catalog", "--samples", str(C7_SAMPLES), "--seed", str(SEED),
               "--tol", str(C7_TOL), "--dims", *map(str, C7_DIMS), *w],
        "c8": ["verify", "--what", "negative", "--samples", str(C8_SAMPLES), "--seed", str(SEED), *w],
    }[key]


def _remember(key: str, report: dict) -> None:
    _REPORTS.setdefault(key, dumps(report, exclude_timing=True))


# --- 1 ---------------------------------------------------------------------------------


def test_criterion_1_transcription():
    t0 = time.perf_counter()
    cases, bad = 0, []
    for n, m in ((1, 1), (2, 1), (3, 1), (2, 2)):
        ansatz = Ansatz(n, m, ansatz_bounds(n, m, 1))
        system = generate_det_system(n, m)
        for label, V in (("V=0", LaurentPoly.zero(m + 1)), ("random cubic V", random_potential(m, 3, seed=SEED))):
            rep = compare_solution_spaces(instantiate(system, ansatz, V), oracle_system(n, m, ansatz, V))
            cases += 1
            if not rep.passed:
                bad.append(f"(n={n}, m={m}, {label})")
    dt = time.perf_counter() - t0
    ok = not bad and dt <= C1_BUDGET
    emit(1, ok, "determining-system transcription vs commutator oracle",
         f"{cases - len(bad)}/{cases} nullspaces equal (exact){'; mismatch ' + ', '.join(bad) if bad else ''}; "
         f"{dt:.1f} s <= {C1_BUDGET:.0f} s")
    assert ok


# --- 2 ---------------------------------------------------------------------------------


def test_criterion_2_stationary_decoupling():
    bad = []
    for n in range(1, 5):
        for m in (1, 2, 3):
            s = generate_det_system(n, m, stationary=True, include_lower=True)
            even, odd = s.ranks_referenced("even"), s.ranks_referenced("odd")
            parity_ok = all(r % 2 == 0 for r in even) and all(r % 2 == 1 for r in odd)
            no_dot = not any(t.t_order for eq in s.equations for t in eq.terms)
            top = generate_det_system(n, m, stationary=True).ranks_referenced()
            top_ok = all(r % 2 == n % 2 for r in top)
            if even & odd or not (parity_ok and no_dot and top_ok):
                bad.append((n, m))
    ok = not bad
    emit(2, ok, "stationary even/odd chains reference disjoint ranks",
         f"n <= 4, m <= 3: {12 - len(bad)}/12 systems disjoint (structural, exact)")
    assert ok


# --- 3 ---------------------------------------------------------------------------------


def test_criterion_3_free_basis():
    t0 = time.perf_counter()
    dims, bad = {}, []
    for n, m in ((1, 1), (2, 1), (3, 1), (1, 2), (2, 2), (1, 3)):
        try:
            b = solve_free(n, m, margins=(0, 1, 2), verify=True)
        except Exception as exc:  # saturation failure or a non-commuting element
            bad.append(f"(n={n}, m={m}): {exc}")
            continue
        L = build_L(m)
        if not all(commutator_with_L(L, Q).is_zero() for Q in b.operators):
            bad.append(f"(n={n}, m={m}) commutator")
        dims[(n, m)] = len(b)
    rows = dimension_report(2, 3)
    table = ", ".join(f"n={r.order}: computed {r.computed} (+{r.increment}) vs N_n {r.formula}" for r in rows)
    formula_ok = all(r.formula == C3_FORMULA_M3[r.order] for r in rows)
    dt = time.perf_counter() - t0
    ok = not bad and formula_ok and dt <= C3_BUDGET
    dim_text = " ".join(f"{k}:{v}" for k, v in dims.items())
    emit(3, ok, "free-case bases commute with L and are saturation-stable",
         f"dims {dim_text}; margins +1,+2 unchanged; m=3 {table}; {dt:.1f} s <= {C3_BUDGET:.0f} s")
    assert ok


# --- 4 ---------------------------------------------------------------------------------


def test_criterion_4_third_order_exact():
    t0 = time.perf_counter()
    x = LaurentPoly.var(2, 1)
    U = (x**-2).scale(2)
    fam = PotentialFamily("W213", {"omega1": 0}, U)
    fres = family_residual(fam)
    one, zero = LaurentPoly.constant(2, 1), LaurentPoly.zero(2)
    comp = compatibility_residual(U, one, zero, zero)
    Q = build_operator(fam).op
    comm = commutator_with_L(build_L(1, 1, U.scale(Fraction(1, 2))), Q)
    corrupt = exact_verify(PotentialFamily("W213", {"omega1": 0}, (x**-2).scale(3)))
    dt = time.perf_counter() - t0
    ok = fres.is_zero() and comp.is_zero() and comm.is_zero() and not corrupt["passed"] and dt <= C4_BUDGET
    emit(4, ok, "U = 2/x^2: family, compatibility and [L, Q] vanish; 3/x^2 control fails",
         f"family {fres.to_str()}, compatibility {comp.to_str()}, [L,Q] {comm.to_str()} (exact); "
         f"control passed={corrupt['passed']}; {dt:.3f} s <= {C4_BUDGET:.0f} s")
    assert ok


# --- 5 ---------------------------------------------------------------------------------


def test_criterion_5_painleve(tmp_path):
    t0 = time.perf_counter()
    code, rep = _cli_report("c5", _argv("c5"), str(tmp_path))
    dt = time.perf_counter() - t0
    _remember("c5", rep)
    res = rep["results"]
    series = res["solution"]["series_check"]
    ver = res["verification"]
    ok = (code == 0 and series["abs_diff"] <= C5_SERIES_TOL and abs(series["x"] - 0.1) < 1e-15
          and ver["max_residual"] <= C5_RESIDUAL_TOL and ver["grid"] == [C5_GRID, C5_GRID] and dt <= C5_BUDGET)
    emit(5, ok, "first Painleve family, omega2 = 1, U(0) = U'(0) = 0 on [0, 1]",
         f"series vs integrator at x=0.1: {series['abs_diff']:.2e} <= {C5_SERIES_TOL:g}; "
         f"max residual {ver['max_residual']:.2e} <= {C5_RESIDUAL_TOL:g} on {C5_GRID}x{C5_GRID}; "
         f"{dt:.1f} s <= {C5_BUDGET:.0f} s")
    assert ok


# --- 6 ---------------------------------------------------------------------------------


def test_criterion_6_oscillator_pair(tmp_path):
    t0 = time.perf_counter()
    code, rep = _cli_report("c6", _argv("c6"), str(tmp_path))
    _remember("c6", rep)
    ops = rep["results"]["verification"]["operators"]
    try:
        build_operator(PotentialFamily("E216", {"omega4": 0.5, "omega5": 0}))
        rejects = False
    except ThirdOrderError:
        rejects = True
    fam = PotentialFamily("E216", {"omega4": -1, "omega5": 1})
    sol = ode_integrate(fam, (0, 1), {"phi": 0, "U": 0.5, "U1": 0})
    printed = numeric_verify(fam, sol, tolerance=C6_TOL, variant="printed")
    dt = time.perf_counter() - t0
    ok = code == 0 and len(ops) == 2 and all(o["passed"] for o in ops) and rejects and dt <= C6_BUDGET
    per = ", ".join(f"{o['label']} {o['max_residual']:.1e}" for o in ops)
    emit(6, ok, "oscillator-type pair Q+/Q- with omega4 = -1",
         f"{per} <= {C6_TOL:g}; omega4 >= 0 rejected={rejects}; "
         f"(printed time-factor variant: {printed['max_residual']:.2e}); {dt:.1f} s <= {C6_BUDGET:.0f} s")
    assert ok


# --- 7 ---------------------------------------------------------------------------------


def test_criterion_7_catalog(tmp_path):
    t0 = time.perf_counter()
    code, rep = _cli_report("c7", _argv("c7"), str(tmp_path))
    dt = time.perf_counter() - t0
    _remember("c7", rep)
    checks = rep["results"]["checks"]
    done = [c for c in checks if "passed" in c]
    skipped = [c for c in checks if "skipped" in c]
    failed = [c for c in done if not c["passed"]]
    worst = max((c["max_residual"] for c in done if c["passed"]), default=0.0)
    ok = code == 0 and not failed and dt <= C7_BUDGET
    fail_text = "; ".join(f"row {c['row']} m={c['m']} residual {c['max_residual']:.2g}" for c in failed)
    emit(7, ok, "classification catalog (base, Table 1, Table 2) in i-form",
         f"{len(done) - len(failed)}/{len(done)} row-dimension checks <= {C7_TOL:g} "
         f"({C7_SAMPLES} samples, seed {SEED}, {len(skipped)} skipped by constraints); "
         f"worst passing {worst:.1e}{'; FAILED ' + fail_text if failed else ''}; {dt:.1f} s <= {C7_BUDGET:.0f} s")
    if failed:
        # the misprinted field also checked in its corrected form, for the record
        fixed = [check_row("2", c["row"], c["m"], n_samples=C7_SAMPLES, seed=SEED, tol=C7_TOL, errata=True,
                           workers=WORKERS) for c in failed]
        note = "; ".join(f"row {r.row} m={r.m} {'pass' if r.passed else 'fail'} ({r.max_residual:.1e})" for r in fixed)
        ACCEPTANCE_LINES.append(f"    note: failing fields in corrected form: {note}")
    assert ok


# --- 8 ---------------------------------------------------------------------------------


def test_criterion_8_negative_controls(tmp_path):
    t0 = time.perf_counter()
    code, rep = _cli_report("c8", _argv("c8"), str(tmp_path))
    dt = time.perf_counter() - t0
    _remember("c8", rep)
    checks = rep["results"]["checks"]
    rows = {c["row"] for c in checks}
    pi_1d = [c for c in checks if c["m"] == 1 and c["fields"] == ["Pi"] and c["row"] == "2.7"]
    ok = (code == 0 and all(c["failed_as_required"] and c.get("control_passed", True) for c in checks)
          and {"2.6", "2.7", "2.8"} <= rows and pi_1d and min(c["median_residual"] for c in checks) >= C8_MIN_MEDIAN)
    medians = ", ".join(f"{c['row']}/{c['fields'][0]}: {c['median_residual']:.3f}" for c in checks)
    emit(8, ok, "detuned rows fail, unperturbed controls pass",
         f"median normalized residuals [{medians}] >= {C8_MIN_MEDIAN:g}; {dt:.1f} s")
    assert ok


# --- 9 ---------------------------------------------------------------------------------


def test_criterion_9_determinism(tmp_path):
    t0 = time.perf_counter()
    same = {}
    for key in ("c5", "c6", "c7", "c8"):
        if key not in _REPORTS:
            _remember(key, _cli_report(key, _argv(key), str(tmp_path))[1])
        _, second = _cli_report(key, _argv(key), str(tmp_path))
        same[key] = dumps(second, exclude_timing=True) == _REPORTS[key]
    dt = time.perf_counter() - t0
    ok = all(same.values())
    text = ", ".join(f"criterion {k[1:]} {'identical' if v else 'DIFFERENT'}" for k, v in same.items())
    emit(9, ok, f"repeated runs of criteria 5-8 with seed {SEED}",
         f"reports byte-identical excluding timing: {text}; {dt:.1f} s")
    assert ok


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
