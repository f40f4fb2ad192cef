"""Dense exact matrices over Q(w_p), stored as tuples of row tuples."""
from __future__ import annotations

from .exact import CycNum


def to_cyc(p, x):
    if isinstance(x, CycNum):
        return x
    return CycNum.rational(p, x)


def mat(p, rows):
    return tuple(tuple(to_cyc(p, x) for x in row) for row in rows)


def identity(p, n):
    one, zero = CycNum.one(p), CycNum.zero(p)
    return tuple(tuple(one if i == j else zero for j in range(n)) for i in range(n))


def matmul(a, b):
    n, m = len(a), len(b[0])
    inner = len(b)
    out = []
    for i in range(n):
        row = []
        ai = a[i]
        for j in range(m):
            s = None
            for t in range(inner):
                if ai[t] and b[t][j]:
                    term = ai[t] * b[t][j]
                    s = term if s is None else s + term
            row.append(s if s is not None else a[0][0] * 0)
        out.append(tuple(row))
    return tuple(out)


def transpose(a):
    return tuple(zip(*a))


def matvec(a, v):
    return tuple(sum((a[i][j] * v[j] for j in range(len(v))), a[0][0] * 0) for i in range(len(a)))


def scale(c, a):
    return tuple(tuple(c * x for x in row) for row in a)


def add(a, b):
    return tuple(tuple(x + y for x, y in zip(ra, rb)) for ra, rb in zip(a, b))


def inverse(a):
    """Gauss-Jordan inverse; raises ZeroDivisionError when singular."""
    n = len(a)
    p = a[0][0].p
    aug = [list(a[i]) + list(identity(p, n)[i]) for i in range(n)]
    for col in range(n):
        piv = next((r for r in range(col, n) if aug[r][col]), None)
        if piv is None:
            raise ZeroDivisionError("singular matrix")
        aug[col], aug[piv] = aug[piv], aug[col]
        inv = aug[col][col].inverse()
        aug[col] = [x * inv for x in aug[col]]
        for r in range(n):
            if r != col and aug[r][col]:
                f = aug[r][col]
                aug[r] = [x - f * y for x, y in zip(aug[r], aug[col])]
    return tuple(tuple(row[n:]) for row in aug)


def independent_columns(cols):
    """Indices of a maximal independent subset, first-nonzero pivoting."""
    chosen = []
    reduced = []  # list of (pivot index, reduced vector)
    for idx, col in enumerate(cols):
        v = list(col)
        for piv, rv in reduced:
            if v[piv]:
                f = v[piv] / rv[piv]
                v = [x - f * y for x, y in zip(v, rv)]
        piv = next((i for i, x in enumerate(v) if x), None)
        if piv is not None:
            reduced.append((piv, v))
            chosen.append(idx)
    return chosen


def is_zero(a):
    return not any(x for row in a for x in row)
