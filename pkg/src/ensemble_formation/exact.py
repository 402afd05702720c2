"""Exact rank and nullspace over the rationals.

Rank uses fraction-free (Bareiss) elimination on integer rows; rational
input rows are first cleared of denominators row by row, which does not
change the rank.
"""

from __future__ import annotations

from fractions import Fraction
from math import lcm


def _as_integer_rows(rows) -> list[list[int]]:
    out = []
    for row in rows:
        vals = [Fraction(v) for v in row]
        scale = lcm(*(v.denominator for v in vals)) if vals else 1
        out.append([int(v * scale) for v in vals])
    return out


def bareiss_rank(rows) -> int:
    """Rank of a list of integer (or rational) row vectors."""
    m = _as_integer_rows(rows)
    if not m:
        return 0
    n_cols = len(m[0])
    rank = 0
    prev = 1
    for col in range(n_cols):
        pivot = next((r for r in range(rank, len(m)) if m[r][col] != 0), None)
        if pivot is None:
            continue
        m[rank], m[pivot] = m[pivot], m[rank]
        p = m[rank][col]
        for r in range(rank + 1, len(m)):
            f = m[r][col]
            row = m[r]
            top = m[rank]
            # division is exact by Sylvester's identity
            for c in range(col + 1, n_cols):
                row[c] = (p * row[c] - f * top[c]) // prev
            row[col] = 0
        prev = p
        rank += 1
        if rank == len(m):
            break
    return rank


def rref(rows) -> tuple[list[list[Fraction]], list[int]]:
    """Reduced row echelon form with Fraction entries, plus pivot columns."""
    m = [[Fraction(v) for v in row] for row in rows]
    if not m:
        return [], []
    n_cols = len(m[0])
    pivots = []
    r = 0
    for c in range(n_cols):
        pivot = next((i for i in range(r, len(m)) if m[i][c] != 0), None)
        if pivot is None:
            continue
        m[r], m[pivot] = m[pivot], m[r]
        inv = 1 / m[r][c]
        m[r] = [v * inv for v in m[r]]
        for i in range(len(m)):
            if i != r and m[i][c] != 0:
                f = m[i][c]
                m[i] = [a - f * b for a, b in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
        if r == len(m):
            break
    return m[:r], pivots


def nullspace(rows, n_cols: int) -> list[list[Fraction]]:
    """Basis of {x : rows @ x = 0}, one vector per free column."""
    reduced, pivots = rref(rows) if rows else ([], [])
    free = [c for c in range(n_cols) if c not in pivots]
    basis = []
    for f in free:
        x = [Fraction(0)] * n_cols
        x[f] = Fraction(1)
        for row, p in zip(reduced, pivots):
            x[p] = -row[f]
        basis.append(x)
    return basis


def integer_multiple(vec) -> list[int]:
    """Integer vector proportional to a rational vector (denominators cleared)."""
    return _as_integer_rows([vec])[0]
