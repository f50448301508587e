"""Exact sparse linear algebra over the Gaussian rationals.

Gauss-Jordan elimination on dict-of-dict rows. Pivot columns are taken in
increasing column order, so the reduced row echelon form, and with it the
nullspace basis below, is unique and does not depend on which pivot row
the elimination happens to pick.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .scalars import ONE, ZERO, GaussianRational


@dataclass
class RationalMatrix:
    rows: int
    cols: int
    entries: dict = field(default_factory=dict)  # (row, col) -> GaussianRational

    def __post_init__(self):
        clean = {}
        for (r, c), v in self.entries.items():
            if not (0 <= r < self.rows and 0 <= c < self.cols):
                raise IndexError(f"entry ({r}, {c}) outside {self.rows}x{self.cols}")
            v = GaussianRational.coerce(v)
            if v:
                clean[(r, c)] = v
        self.entries = clean

    @classmethod
    def from_dense(cls, data: Sequence[Sequence]) -> "RationalMatrix":
        rows = len(data)
        cols = len(data[0]) if rows else 0
        entries = {(i, j): v for i, row in enumerate(data) for j, v in enumerate(row) if v}
        return cls(rows, cols, entries)

    @classmethod
    def from_rows(cls, row_dicts: Iterable[Mapping[int, GaussianRational]], cols: int) -> "RationalMatrix":
        entries = {}
        n = 0
        for i, row in enumerate(row_dicts):
            for j, v in row.items():
                entries[(i, j)] = v
            n = i + 1
        return cls(n, cols, entries)

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "RationalMatrix":
        return cls(rows, cols, {})

    @classmethod
    def identity(cls, n: int) -> "RationalMatrix":
        return cls(n, n, {(i, i): ONE for i in range(n)})

    def row_dicts(self) -> list[dict]:
        out = [dict() for _ in range(self.rows)]
        for (r, c), v in self.entries.items():
            out[r][c] = v
        return out

    def to_dense(self) -> list[list[GaussianRational]]:
        out = [[ZERO] * self.cols for _ in range(self.rows)]
        for (r, c), v in self.entries.items():
            out[r][c] = v
        return out

    def apply(self, vec: Sequence[GaussianRational]) -> list[GaussianRational]:
        if len(vec) != self.cols:
            raise ValueError(f"vector length {len(vec)} != cols {self.cols}")
        out = [ZERO] * self.rows
        for (r, c), v in self.entries.items():
            x = vec[c]
            if x:
                out[r] = out[r] + v * x
        return out

    def annihilates(self, vec: Sequence[GaussianRational]) -> bool:
        return all(not y for y in self.apply(vec))

    def stack(self, other: "RationalMatrix") -> "RationalMatrix":
        if other.cols != self.cols:
            raise ValueError("column count mismatch")
        entries = dict(self.entries)
        for (r, c), v in other.entries.items():
            entries[(r + self.rows, c)] = v
        return RationalMatrix(self.rows + other.rows, self.cols, entries)


@dataclass
class EchelonResult:
    rank: int
    pivots: list[int]                 # pivot column per reduced row, increasing
    reduced_rows: list[dict]          # RREF rows (pivot entry 1), aligned with pivots
    nullspace: list[list[GaussianRational]]


def _eliminate(rows: list[dict], cols: int):
    """In-place Gauss-Jordan; returns (pivot col -> row index) in column order."""
    col_rows: dict[int, set] = {}
    for i, row in enumerate(rows):
        for c in row:
            col_rows.setdefault(c, set()).add(i)

    pivot_of: dict[int, int] = {}
    used: set[int] = set()

    for c in range(cols):
        holders = col_rows.get(c)
        if not holders:
            continue
        candidates = [r for r in holders if r not in used]
        if not candidates:
            continue
        # sparsest row as pivot keeps fill-in down; ties broken by index for determinism
        p = min(candidates, key=lambda r: (len(rows[r]), r))
        prow = rows[p]
        inv = prow[c].inverse()
        if inv != ONE:
            for k in prow:
                prow[k] = prow[k] * inv
        used.add(p)
        pivot_of[c] = p
        for r in candidates:
            if r == p:
                continue
            _axpy(rows, col_rows, r, p, c)

    # back substitution: clear each pivot column from the other pivot rows
    for c in sorted(pivot_of, reverse=True):
        p = pivot_of[c]
        for r in list(col_rows.get(c, ())):
            if r != p and r in used:
                _axpy(rows, col_rows, r, p, c)
    return pivot_of


def _axpy(rows, col_rows, r, p, c):
    """rows[r] -= rows[r][c] * rows[p]   (rows[p][c] == 1)."""
    row = rows[r]
    f = row[c]
    for k, v in rows[p].items():
        old = row.get(k)
        new = -(f * v) if old is None else old - f * v
        if new:
            if old is None:
                col_rows.setdefault(k, set()).add(r)
            row[k] = new
        elif old is not None:
            del row[k]
            col_rows[k].discard(r)


def rref(A: RationalMatrix) -> EchelonResult:
    rows = A.row_dicts()
    pivot_of = _eliminate(rows, A.cols)
    pivots = sorted(pivot_of)
    reduced = [rows[pivot_of[c]] for c in pivots]
    pivot_set = set(pivots)
    basis = []
    for f in range(A.cols):
        if f in pivot_set:
            continue
        vec = [ZERO] * A.cols
        vec[f] = ONE
        for c, row in zip(pivots, reduced):
            v = row.get(f)
            if v:
                vec[c] = -v
        basis.append(vec)
    return EchelonResult(len(pivots), pivots, reduced, basis)


def rref_nullspace(A: RationalMatrix) -> tuple[int, list[list[GaussianRational]]]:
    """Exact rank and canonical nullspace basis of ``A``.

    Basis vector k has a 1 in the k-th free (non-pivot) column, zeros in the
    other free columns, and minus the RREF entries in the pivot columns.
    """
    res = rref(A)
    return res.rank, res.nullspace


def rank(A: RationalMatrix) -> int:
    return rref(A).rank


def vectors_rank(vectors: Sequence[Sequence[GaussianRational]], length: int | None = None) -> int:
    if not vectors:
        return 0
    n = length if length is not None else len(vectors[0])
    return rank(RationalMatrix.from_rows(({i: v for i, v in enumerate(vec) if v} for vec in vectors), n))


def in_span(vec: Sequence[GaussianRational], basis: Sequence[Sequence[GaussianRational]]) -> bool:
    if not any(vec):
        return True
    if not basis:
        return False
    return vectors_rank(list(basis) + [vec]) == vectors_rank(basis)
