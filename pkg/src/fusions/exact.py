"""Exact rational helpers: number coercion and a sparse Fraction solver."""
from __future__ import annotations

from fractions import Fraction
from numbers import Rational

import numpy as np


class Singular(ArithmeticError):
    pass


def Q(v) -> Fraction:
    """Coerce to Fraction. Floats are taken at their exact binary value,
    strings like '3/8' or '0.7' are parsed as decimals."""
    if isinstance(v, Fraction):
        return v
    if isinstance(v, (int, np.integer)):
        return Fraction(int(v))
    if isinstance(v, str):
        return Fraction(v.strip())
    if isinstance(v, Rational):
        return Fraction(v.numerator, v.denominator)
    if isinstance(v, (float, np.floating)):
        if not np.isfinite(v):
            raise ValueError(f"non-finite value {v!r}")
        return Fraction(float(v))
    raise TypeError(f"cannot coerce {type(v).__name__} to a rational")


def Qvec(xs) -> tuple:
    return tuple(Q(x) for x in xs)


def fmt(q) -> str:
    q = Q(q)
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def sparse_solve(cols: list, rhs: list, m: int) -> list:
    """Solve B z = rhs exactly. B is m x m given by its columns as {row: value}
    dicts. Row singletons are peeled forward, column singletons are deferred,
    and whatever core is left goes through dense Gaussian elimination."""
    rows = [dict() for _ in range(m)]
    for k, col in enumerate(cols):
        for i, v in col.items():
            if v:
                rows[i][k] = v
    r = [Q(v) for v in rhs]
    z = [None] * m
    row_on = [True] * m
    col_on = [True] * m
    row_cnt = [len(rw) for rw in rows]
    col_cnt = [sum(1 for i, v in col.items() if v) for col in cols]
    deferred = []
    queue = [i for i in range(m) if row_cnt[i] == 1]
    col_queue = [k for k in range(m) if col_cnt[k] == 1]
    for i in range(m):
        if row_cnt[i] == 0:
            raise Singular("empty row")

    while True:
        progressed = False
        while queue:
            i = queue.pop()
            if not row_on[i] or row_cnt[i] != 1:
                continue
            k = next(k for k in rows[i] if col_on[k])
            zk = r[i] / rows[i][k]
            z[k] = zk
            row_on[i] = False
            col_on[k] = False
            for l, v in cols[k].items():
                if row_on[l] and v:
                    r[l] -= v * zk
                    row_cnt[l] -= 1
                    if row_cnt[l] == 1:
                        queue.append(l)
                    elif row_cnt[l] == 0:
                        raise Singular("row emptied")
            for j in rows[i]:
                if col_on[j]:
                    col_cnt[j] -= 1
                    if col_cnt[j] == 1:
                        col_queue.append(j)
            progressed = True
        while col_queue:
            k = col_queue.pop()
            if not col_on[k] or col_cnt[k] != 1:
                continue
            i = next(i for i in cols[k] if row_on[i] and cols[k][i])
            deferred.append((i, k))
            row_on[i] = False
            col_on[k] = False
            for j in rows[i]:
                if col_on[j]:
                    col_cnt[j] -= 1
                    if col_cnt[j] == 1:
                        col_queue.append(j)
                    elif col_cnt[j] == 0:
                        raise Singular("column emptied")
            progressed = True
            break
        if not progressed:
            break

    core_rows = [i for i in range(m) if row_on[i]]
    core_cols = [k for k in range(m) if col_on[k]]
    if len(core_rows) != len(core_cols):
        raise Singular("non-square core")
    if core_rows:
        pos = {k: t for t, k in enumerate(core_cols)}
        n = len(core_rows)
        M = [[Fraction(0)] * n + [r[i]] for i in core_rows]
        for a, i in enumerate(core_rows):
            for k, v in rows[i].items():
                if k in pos:
                    M[a][pos[k]] = v
        for c in range(n):
            p = next((a for a in range(c, n) if M[a][c] != 0), None)
            if p is None:
                raise Singular("singular core")
            M[c], M[p] = M[p], M[c]
            piv = M[c][c]
            rowc = M[c]
            nz = [t for t in range(c, n + 1) if rowc[t] != 0]
            for a in range(n):
                if a != c and M[a][c] != 0:
                    f = M[a][c] / piv
                    ra = M[a]
                    for t in nz:
                        ra[t] -= f * rowc[t]
        for c, k in enumerate(core_cols):
            z[k] = M[c][n] / M[c][c]

    rhs0 = [Q(v) for v in rhs]
    for i, k in reversed(deferred):
        s = rhs0[i]
        for j, v in rows[i].items():
            if j != k:
                s -= v * z[j]
        z[k] = s / rows[i][k]
    return z


def sparse_solve_T(cols: list, rhs: list, m: int) -> list:
    """Solve B^T y = rhs with B given by columns."""
    tcols = [dict() for _ in range(m)]
    for k, col in enumerate(cols):
        for i, v in col.items():
            if v:
                tcols[i][k] = v
    return sparse_solve(tcols, rhs, m)


def exact_rank(vectors) -> int:
    """Rank of a list of rational vectors by exact elimination."""
    M = [[Q(v) for v in row] for row in vectors]
    if not M:
        return 0
    rank, ncol = 0, len(M[0])
    for c in range(ncol):
        p = next((a for a in range(rank, len(M)) if M[a][c] != 0), None)
        if p is None:
            continue
        M[rank], M[p] = M[p], M[rank]
        for a in range(len(M)):
            if a != rank and M[a][c] != 0:
                f = M[a][c] / M[rank][c]
                M[a] = [x - f * y for x, y in zip(M[a], M[rank])]
        rank += 1
    return rank


def solve_dense_exact(A, b):
    """Least-structure exact solve of a consistent (possibly overdetermined)
    system A z = b. Returns z or None if inconsistent. Free variables are set
    to zero."""
    M = [[Q(v) for v in row] + [Q(bi)] for row, bi in zip(A, b)]
    if not M:
        return []
    ncol = len(M[0]) - 1
    piv_cols, rank = [], 0
    for c in range(ncol):
        p = next((a for a in range(rank, len(M)) if M[a][c] != 0), None)
        if p is None:
            continue
        M[rank], M[p] = M[p], M[rank]
        M[rank] = [x / M[rank][c] for x in M[rank]]
        for a in range(len(M)):
            if a != rank and M[a][c] != 0:
                f = M[a][c]
                M[a] = [x - f * y for x, y in zip(M[a], M[rank])]
        piv_cols.append(c)
        rank += 1
    if any(M[a][ncol] != 0 for a in range(rank, len(M))):
        return None
    z = [Fraction(0)] * ncol
    for a, c in enumerate(piv_cols):
        z[c] = M[a][ncol]
    return z
