"""Exact arithmetic: Gaussian rationals, Laurent polynomials, sparse RREF."""

from .linalg import EchelonResult, RationalMatrix, in_span, rank, rref, rref_nullspace, vectors_rank
from .poly import ArityError, LaurentPoly, PoleError, monomial_key, monomials_up_to
from .scalars import I, ONE, ZERO, ExactTypeError, GaussianRational, Rational, gq, to_rational

__all__ = [
    "ArityError",
    "EchelonResult",
    "ExactTypeError",
    "GaussianRational",
    "I",
    "LaurentPoly",
    "ONE",
    "PoleError",
    "Rational",
    "RationalMatrix",
    "ZERO",
    "gq",
    "in_span",
    "monomial_key",
    "monomials_up_to",
    "rank",
    "rref",
    "rref_nullspace",
    "to_rational",
    "vectors_rank",
]
