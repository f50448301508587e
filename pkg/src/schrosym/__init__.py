"""Symmetry operators of linear Schroedinger equations and Lie symmetries of
the nonlinear Schroedinger equation: exact determining equations, free-case
solver, third-order operators, and a prolongation-based invariance checker."""

__version__ = "0.1.0"
