"""Exact rational feasibility via a phase-one simplex with Bland's rule.

Only what the geometry module needs: decide whether ``A x = b, x >= 0`` has a
solution and return one. Everything is ``Fraction`` so no tolerance is needed.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Sequence


def feasible_point(A: Sequence[Sequence], b: Sequence) -> list | None:
    m = len(A)
    n = len(A[0]) if m else 0
    if m == 0:
        return [Fraction(0)] * n
    # rows with a nonnegative right-hand side, one artificial column per row
    rows = []
    for i in range(m):
        sign = -1 if b[i] < 0 else 1
        row = [Fraction(sign * a) for a in A[i]]
        row += [Fraction(int(k == i)) for k in range(m)]
        row.append(Fraction(sign * b[i]))
        rows.append(row)
    basis = [n + i for i in range(m)]
    width = n + m
    cost = [-sum(rows[i][j] for i in range(m)) for j in range(n)] + [Fraction(0)] * m

    while True:
        enter = next((j for j in range(width) if cost[j] < 0), None)
        if enter is None:
            break
        leave, best = None, None
        for i in range(m):
            a = rows[i][enter]
            if a > 0:
                ratio = rows[i][-1] / a
                if best is None or ratio < best or (ratio == best and basis[i] < basis[leave]):
                    leave, best = i, ratio
        if leave is None:  # cannot happen: the phase-one objective is bounded below
            break
        piv = rows[leave][enter]
        prow = [x / piv for x in rows[leave]]
        rows[leave] = prow
        for i in range(m):
            if i != leave and rows[i][enter] != 0:
                f = rows[i][enter]
                rows[i] = [x - f * y for x, y in zip(rows[i], prow)]
        f = cost[enter]
        cost = [c - f * y for c, y in zip(cost, prow[:-1])]
        basis[leave] = enter

    if any(j >= n and rows[i][-1] != 0 for i, j in enumerate(basis)):
        return None
    x = [Fraction(0)] * width
    for i, j in enumerate(basis):
        x[j] = rows[i][-1]
    return x[:n]
