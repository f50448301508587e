import math
import random
from fractions import Fraction

import numpy as np
import pytest

from schrosym.exact import LaurentPoly
from schrosym.exact.scalars import I
from schrosym.third_order import (
    OdeBlowUp,
    PotentialFamily,
    ThirdOrderCoeffs,
    ThirdOrderError,
    build_operator,
    coeffs_from_abc,
    compatibility_residual,
    exact_solution_as_ode,
    exact_verify,
    family_residual,
    numeric_verify,
    ode_integrate,
    third_order_residuals,
)
from schrosym.weyl import DiffOp, momentum

x = LaurentPoly.var(2, 1)
t = LaurentPoly.var(2, 0)
ONE = LaurentPoly.constant(2, 1)
ZERO = LaurentPoly.zero(2)
U2 = (x**-2).scale(2)


def all_zero(res):
    return all(r.is_zero() for r in res)


def test_residual_examples():
    assert all_zero(third_order_residuals(ThirdOrderCoeffs.exact(1, 0, 0, 0), ZERO))
    h = coeffs_from_abc(ONE, ZERO, ZERO, ZERO, U2)
    assert all_zero(third_order_residuals(h, U2))
    res = third_order_residuals(ThirdOrderCoeffs.exact(1, 0, 0, 0), x)
    assert res[2] == LaurentPoly.constant(2, -6)
    assert all(r.is_zero() for k, r in enumerate(res) if k != 2)


def test_compatibility_examples():
    assert compatibility_residual(U2, ONE, ZERO, ZERO).is_zero()
    assert compatibility_residual(ZERO, LaurentPoly.constant(2, 7), ZERO, ZERO).is_zero()
    assert compatibility_residual(x * x, ONE, ZERO, ZERO) == (x * x).scale(-36)


def test_coeffs_from_abc_examples():
    h = coeffs_from_abc(ONE, ZERO, ZERO, ZERO, U2)
    assert (h.h[3], h.h[2], h.h[1], h.h[0]) == (ONE, ZERO, U2.scale(6), ZERO)
    h = coeffs_from_abc(ZERO, ZERO, ZERO, ONE, x**3)
    assert (h.h[3], h.h[2], h.h[1], h.h[0]) == (ZERO, ZERO, ZERO, ONE)
    h = coeffs_from_abc(t, ZERO, ZERO, ZERO, ZERO)
    assert (h.h[3], h.h[2], h.h[1], h.h[0]) == (t, x.scale(-2), ZERO, ZERO)


def test_log_antiderivative_rejected():
    with pytest.raises(ThirdOrderError):
        coeffs_from_abc(t, ZERO, ZERO, ZERO, x**-1)


def test_family_residual_examples():
    assert family_residual(PotentialFamily("W213", {"omega1": 0}, U2)).is_zero()
    assert family_residual(PotentialFamily("W213", {"omega1": 0}, ZERO)).is_zero()
    r = family_residual(PotentialFamily("P214", {"omega2": 1}, x))
    assert r == (x * x).scale(-3) - x.scale(8)
    with pytest.raises(ThirdOrderError):
        PotentialFamily("W213", {"omega2": 1}, x)


def test_operator_examples():
    Q = build_operator(PotentialFamily("W213", {"omega1": 0}, U2)).op
    Dx = DiffOp.partial(2, 1)
    expected = (DiffOp.partial(2, 1, 3).scale(I) - Dx.left_multiply((x**-2).scale(3 * I))
                + DiffOp.multiplication((x**-3).scale(3 * I)))
    assert Q == expected
    p = momentum(2, 1)
    assert build_operator(PotentialFamily("W213", {"omega1": 0}, ZERO)).op == p * p * p


def test_oscillator_pair():
    ops = build_operator(PotentialFamily("E216", {"omega4": -1, "omega5": 0}))
    assert len(ops) == 2
    assert {o.label for o in ops} == {"E216+", "E216-"}
    with pytest.raises(ThirdOrderError):
        build_operator(PotentialFamily("E216", {"omega4": 1, "omega5": 0}))
    with pytest.raises(ThirdOrderError):
        build_operator(PotentialFamily("E216", {"omega4": 0, "omega5": 0}))


def test_exact_verify_examples():
    assert exact_verify(PotentialFamily("W213", {"omega1": 0}, U2))["passed"]
    assert exact_verify(PotentialFamily("W213", {"omega1": 0}, ZERO))["passed"]
    bad = exact_verify(PotentialFamily("W213", {"omega1": 0}, (x**-2).scale(3)))
    assert not bad["passed"]
    assert bad["operators"][0]["commutator"] != "0"


def _random_laurent(rng):
    d = {}
    for _ in range(4):
        e = rng.choice([-4, -3, -2, 0, 1, 2, 3])
        d[(0, e)] = Fraction(rng.randint(-5, 5), rng.randint(1, 4))
    return LaurentPoly(2, d)


@pytest.mark.parametrize("seed", range(10))
def test_compatibility_is_second_derivative_of_family_residual(seed):
    U = _random_laurent(random.Random(seed))
    w1 = Fraction(seed, 3)
    fres = family_residual(PotentialFamily("W213", {"omega1": w1}, U))
    assert compatibility_residual(U, ONE, ZERO, ZERO) == fres.diff(1, 2)


@pytest.mark.parametrize("seed", range(10))
def test_cubic_identity(seed):
    U = _random_laurent(random.Random(50 + seed))
    p = momentum(2, 1)
    Um = DiffOp.multiplication(U)
    H = (p * p + Um).scale(Fraction(1, 2))
    rhs = (p * H).scale(2) + (Um * p).scale(Fraction(1, 2)) + DiffOp.multiplication(U.diff(1).scale(I / 4))
    Q = build_operator(PotentialFamily("W213", {"omega1": 0}, U)).op
    assert Q == rhs


@pytest.mark.parametrize("fam", [
    PotentialFamily("W213", {"omega1": 0}, U2),
    PotentialFamily("W213", {"omega1": 0}, (x**-2).scale(3)),
    PotentialFamily("W213", {"omega1": 0}, x * x),
    PotentialFamily("P214", {"omega2": 0}, U2),
    PotentialFamily("E215", {"omega3": -2}, x.scale(2)),
    PotentialFamily("E216", {"omega4": -1, "omega5": 2}, x * x),
    PotentialFamily("E216", {"omega4": -1, "omega5": -14}, x * x + U2),
    PotentialFamily("E216", {"omega4": -1, "omega5": 2}, x * x + x),
])
def test_verification_routes_agree(fam):
    rep = exact_verify(fam)
    for op in rep["operators"]:
        assert op["commutator_zero"] == op["residuals_zero"]
        assert op["coeffs_match_operator"]


def test_printed_variant_differs_for_e215():
    fam = PotentialFamily("E215", {"omega3": -2}, x.scale(2))
    assert family_residual(fam).is_zero()
    assert exact_verify(fam, "verified")["passed"]
    assert not exact_verify(fam, "printed")["passed"]


@pytest.fixture(scope="module")
def painleve():
    fam = PotentialFamily("P214", {"omega2": 1})
    sol = ode_integrate(fam, (0, 1), {"U": 0, "U1": 0})
    return fam, sol


def test_painleve_series_agreement(painleve):
    _, sol = painleve
    assert sol.series_check["x"] == pytest.approx(0.1)
    assert sol.series_check["order"] >= 12
    assert sol.series_check["abs_diff"] <= 1e-10


def test_painleve_numeric_verify(painleve):
    fam, sol = painleve
    rep = numeric_verify(fam, sol)
    assert rep["grid"] == [20, 20]
    assert rep["max_residual"] <= 1e-8
    assert rep["family_residual_max"] <= 1e-8


def test_perturbation_control_and_linearity(painleve):
    fam, sol = painleve
    base = build_operator(fam).coeffs
    assert numeric_verify(fam, sol, coeffs=base.scaled(1, 1.01))["max_residual"] > 1e-4
    r1 = numeric_verify(fam, sol, coeffs=base.scaled(1, 1 + 1e-3))["max_residual"]
    r2 = numeric_verify(fam, sol, coeffs=base.scaled(1, 1 + 1e-2))["max_residual"]
    assert r2 / r1 == pytest.approx(10, rel=1e-3)


def test_weierstrass_ode_reproduces_exact():
    fam = PotentialFamily("W213", {"omega1": 0})
    sol = ode_integrate(fam, (1, 2), {"U": 2, "U1": -4})
    assert np.max(np.abs(sol.U - 2 / sol.grid**2)) <= 1e-9


def test_exact_solution_through_numeric_path():
    fam = PotentialFamily("W213", {"omega1": 0})
    sol = exact_solution_as_ode(U2, (1, 2), "W213", {"omega1": 0})
    assert numeric_verify(fam, sol, tolerance=1e-10)["max_residual"] <= 1e-10


def test_zero_data_gives_zero_solution():
    sol = ode_integrate(PotentialFamily("W213", {"omega1": 0}), (0, 1), {"U": 0, "U1": 0})
    assert np.all(sol.U == 0)


def test_blowup_guard():
    with pytest.raises(OdeBlowUp) as err:
        ode_integrate(PotentialFamily("W213", {"omega1": 0}), (1, 0), {"U": 2, "U1": -4})
    assert 0 < err.value.last_x < 1


def test_oscillator_numeric():
    fam = PotentialFamily("E216", {"omega4": -1, "omega5": 1})
    sol = ode_integrate(fam, (0, 1), {"phi": 0, "U": 0.5, "U1": 0})
    rep = numeric_verify(fam, sol, tolerance=1e-7)
    assert rep["passed"] and len(rep["operators"]) == 2
    assert not numeric_verify(fam, sol, tolerance=1e-7, variant="printed")["passed"]


def test_csv_export(painleve, tmp_path):
    _, sol = painleve
    path = tmp_path / "u.csv"
    sol.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "x,U,dU"
    assert len(lines) == len(sol.grid) + 1
    assert math.isclose(float(lines[-1].split(",")[0]), 1.0)
