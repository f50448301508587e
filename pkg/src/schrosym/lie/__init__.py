"""Lie point symmetries of nonlinear Schroedinger equations, checked by
prolongation at random on-shell jet points."""
