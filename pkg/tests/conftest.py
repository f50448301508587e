import random
from fractions import Fraction

import pytest
from hypothesis import strategies as st

from schrosym.exact import LaurentPoly


def laurent(nvars: int, max_terms: int = 5, lo: int = -2, hi: int = 3):
    """Strategy for small random Laurent polynomials with rational coefficients."""
    mono = st.tuples(*[st.integers(lo, hi) for _ in range(nvars)])
    coeff = st.fractions(min_value=-5, max_value=5, max_denominator=6)
    return st.dictionaries(mono, coeff, max_size=max_terms).map(lambda d: LaurentPoly(nvars, d))


def polynomial(nvars: int, max_terms: int = 4, hi: int = 3):
    return laurent(nvars, max_terms, 0, hi)


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return random.Random(1234)


def rand_poly(rng, nvars, terms=4, lo=0, hi=3):
    d = {}
    for _ in range(terms):
        mono = tuple(rng.randint(lo, hi) for _ in range(nvars))
        d[mono] = Fraction(rng.randint(-4, 4), rng.randint(1, 3))
    return LaurentPoly(nvars, d)
