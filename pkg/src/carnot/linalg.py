"""Exact sparse linear algebra over the rationals.

Rows are ``dict`` objects mapping a column key to a nonzero ``Fraction``.
Column keys only need to be hashable and mutually orderable; pivots are
chosen in sorted column order, so results are deterministic.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Hashable, Iterable, Sequence

__all__ = [
    "parse_rational",
    "format_rational",
    "RowEchelon",
    "rank",
    "nullspace",
    "solve",
    "matmul",
    "transpose",
]


def parse_rational(value) -> Fraction:
    """Parse ``"p/q"``, an int, or a ``Fraction``; floats are rejected."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise ValueError(f"not a rational: {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        text = value.strip()
        if "/" in text:
            num, den = text.split("/", 1)
            if int(den) == 0:
                raise ValueError(f"zero denominator in {value!r}")
            return Fraction(int(num), int(den))
        return Fraction(int(text))
    raise ValueError(f"not a rational: {value!r}")


def format_rational(q: Fraction) -> str:
    q = Fraction(q)
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


class RowEchelon:
    """Incrementally maintained reduced row echelon form.

    Every stored pivot row has a leading 1 and zeros in every other pivot
    column, so reducing a new row against the stored ones never re-creates
    a pivot entry.
    """

    def __init__(self):
        self.pivots: dict[Hashable, dict] = {}

    @property
    def rank(self) -> int:
        return len(self.pivots)

    def reduce(self, row: dict) -> dict:
        r = {k: Fraction(v) for k, v in row.items() if v}
        for col in [c for c in r if c in self.pivots]:
            c = r.get(col)
            if not c:
                continue
            for k, v in self.pivots[col].items():
                nv = r.get(k, 0) - c * v
                if nv:
                    r[k] = nv
                else:
                    r.pop(k, None)
        return r

    def add(self, row: dict, protect: Hashable | None = None) -> bool:
        """Insert ``row``; return True when it increased the rank.

        ``protect`` names a column (typically the right-hand side) that may
        never be chosen as a pivot unless it is the only entry left.
        """
        r = self.reduce(row)
        if not r:
            return False
        cols = [k for k in r if k != protect]
        col = min(cols) if cols else protect
        inv = 1 / r[col]
        r = {k: v * inv for k, v in r.items()}
        for prow in self.pivots.values():
            c = prow.get(col)
            if c:
                for k, v in r.items():
                    nv = prow.get(k, 0) - c * v
                    if nv:
                        prow[k] = nv
                    else:
                        prow.pop(k, None)
        self.pivots[col] = r
        return True


def _rows_from_dense(matrix: Sequence[Sequence]) -> list[dict]:
    return [{j: Fraction(v) for j, v in enumerate(row) if v} for row in matrix]


def rank(matrix: Sequence[Sequence]) -> int:
    """Exact rank of a dense matrix (list of rows)."""
    ech = RowEchelon()
    for row in _rows_from_dense(matrix):
        ech.add(row)
    return ech.rank


def nullspace(matrix: Sequence[Sequence], ncols: int | None = None) -> list[list[Fraction]]:
    """Rational basis of the right kernel of a dense matrix."""
    if ncols is None:
        ncols = len(matrix[0]) if matrix else 0
    ech = RowEchelon()
    for row in _rows_from_dense(matrix):
        ech.add(row)
    basis = []
    for free in range(ncols):
        if free in ech.pivots:
            continue
        vec = [Fraction(0)] * ncols
        vec[free] = Fraction(1)
        for pcol, prow in ech.pivots.items():
            vec[pcol] = -prow.get(free, 0)
        basis.append(vec)
    return basis


def sparse_nullspace(rows: Iterable[dict], columns: Sequence[Hashable]) -> list[dict]:
    """Kernel basis for sparse rows over the given column keys."""
    ech = RowEchelon()
    for row in rows:
        ech.add(row)
    basis = []
    for free in columns:
        if free in ech.pivots:
            continue
        vec = {free: Fraction(1)}
        for pcol, prow in ech.pivots.items():
            c = prow.get(free)
            if c:
                vec[pcol] = -c
        basis.append(vec)
    return basis


RHS = ("~rhs",)


def solve(rows: Iterable[tuple[dict, Fraction]]) -> dict | None:
    """Solve sparse equations ``row . x = rhs``; ``None`` when inconsistent.

    Free variables are set to zero, so the returned solution is a basic
    solution whose support is bounded by the rank of the system.
    """
    ech = RowEchelon()
    for row, rhs in rows:
        r = dict(row)
        if rhs:
            r[RHS] = Fraction(rhs)
        ech.add(r, protect=RHS)
    if RHS in ech.pivots:
        return None
    return {col: prow.get(RHS, Fraction(0)) for col, prow in ech.pivots.items() if prow.get(RHS)}


def matmul(a: Sequence[Sequence], b: Sequence[Sequence]) -> tuple[tuple[Fraction, ...], ...]:
    inner = len(b)
    cols = len(b[0]) if b else 0
    return tuple(
        tuple(sum((a[i][t] * b[t][j] for t in range(inner)), Fraction(0)) for j in range(cols))
        for i in range(len(a))
    )


def transpose(a: Sequence[Sequence]) -> tuple[tuple, ...]:
    return tuple(zip(*a)) if a else ()
