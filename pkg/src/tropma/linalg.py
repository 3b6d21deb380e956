"""Exact linear algebra over the rationals.

Everything in this module operates on tuples of `fractions.Fraction` (vectors)
and tuples of such tuples (matrices, row-major).  No floating point is used;
results are exact.  The routines are written for the small dimensions that
polyhedral computations in this package need (n <= ~8), not for bulk numerics.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Iterable, Sequence

Vec = tuple[Fraction, ...]
Mat = tuple[Vec, ...]


def frac(x) -> Fraction:
    """Coerce ints, Fractions and 'p/q' strings to Fraction; reject floats."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    raise TypeError(f"expected an exact rational, got {type(x).__name__}: {x!r}")


def vec(xs: Iterable) -> Vec:
    return tuple(frac(x) for x in xs)


def mat(rows: Iterable[Iterable]) -> Mat:
    return tuple(vec(r) for r in rows)


def zeros(n: int) -> Vec:
    return (Fraction(0),) * n


def dot(a: Sequence[Fraction], b: Sequence[Fraction]) -> Fraction:
    return sum((x * y for x, y in zip(a, b)), Fraction(0))


def vadd(a: Sequence[Fraction], b: Sequence[Fraction]) -> Vec:
    return tuple(x + y for x, y in zip(a, b))


def vsub(a: Sequence[Fraction], b: Sequence[Fraction]) -> Vec:
    return tuple(x - y for x, y in zip(a, b))


def vscale(c: Fraction, a: Sequence[Fraction]) -> Vec:
    return tuple(c * x for x in a)


def matvec(m: Sequence[Sequence[Fraction]], x: Sequence[Fraction]) -> Vec:
    return tuple(dot(row, x) for row in m)


def transpose(m: Sequence[Sequence[Fraction]]) -> Mat:
    return tuple(tuple(col) for col in zip(*m))


def matmul(a: Sequence[Sequence[Fraction]], b: Sequence[Sequence[Fraction]]) -> Mat:
    bt = list(zip(*b))
    return tuple(tuple(dot(row, col) for col in bt) for row in a)


def identity(n: int) -> Mat:
    return tuple(tuple(Fraction(1 if i == j else 0) for j in range(n)) for i in range(n))


def rref(rows: Sequence[Sequence[Fraction]]) -> tuple[list[list[Fraction]], list[int]]:
    """Reduced row echelon form; returns (matrix, pivot column indices)."""
    m = [list(map(Fraction, r)) for r in rows]
    nrows = len(m)
    ncols = len(m[0]) if nrows else 0
    pivots: list[int] = []
    r = 0
    for c in range(ncols):
        piv = next((i for i in range(r, nrows) if m[i][c] != 0), None)
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        inv = Fraction(1) / m[r][c]
        m[r] = [inv * x for x in m[r]]
        for i in range(nrows):
            if i != r and m[i][c] != 0:
                f = m[i][c]
                m[i] = [x - f * y for x, y in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
        if r == nrows:
            break
    return m, pivots


def rank(rows: Sequence[Sequence[Fraction]]) -> int:
    if not rows:
        return 0
    return len(rref(rows)[1])


def det(m: Sequence[Sequence[Fraction]]) -> Fraction:
    n = len(m)
    a = [list(map(Fraction, r)) for r in m]
    result = Fraction(1)
    for c in range(n):
        piv = next((i for i in range(c, n) if a[i][c] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != c:
            a[c], a[piv] = a[piv], a[c]
            result = -result
        result *= a[c][c]
        inv = Fraction(1) / a[c][c]
        for i in range(c + 1, n):
            if a[i][c] != 0:
                f = a[i][c] * inv
                a[i] = [x - f * y for x, y in zip(a[i], a[c])]
    return result


def inverse(m: Sequence[Sequence[Fraction]]) -> Mat:
    n = len(m)
    aug = [list(map(Fraction, row)) + [Fraction(1 if i == j else 0) for j in range(n)]
           for i, row in enumerate(m)]
    red, pivots = rref(aug)
    if pivots[:n] != list(range(n)):
        raise ValueError("matrix is singular")
    return tuple(tuple(red[i][n:]) for i in range(n))


def solve(a: Sequence[Sequence[Fraction]], b: Sequence[Fraction]):
    """Solve a x = b.  Returns one solution as a Vec, or None if inconsistent."""
    ncols = len(a[0]) if a else len(b)
    aug = [list(row) + [bi] for row, bi in zip(a, b)]
    red, pivots = rref(aug)
    if ncols in pivots:
        return None
    x = [Fraction(0)] * ncols
    for r, c in enumerate(pivots):
        x[c] = red[r][-1]
    return tuple(x)


def nullspace(rows: Sequence[Sequence[Fraction]], ncols: int | None = None) -> list[Vec]:
    """Basis of {x : rows @ x = 0} over the rationals."""
    if not rows:
        n = ncols if ncols is not None else 0
        return [tuple(Fraction(1 if i == j else 0) for j in range(n)) for i in range(n)]
    n = len(rows[0])
    red, pivots = rref(rows)
    free = [c for c in range(n) if c not in pivots]
    basis = []
    for f in free:
        x = [Fraction(0)] * n
        x[f] = Fraction(1)
        for r, c in enumerate(pivots):
            x[c] = -red[r][f]
        basis.append(tuple(x))
    return basis


def _primitive_int_row(row: Sequence[Fraction]) -> tuple[int, ...]:
    """Scale a rational row to a primitive integer row (gcd of entries = 1)."""
    den = math.lcm(*(x.denominator for x in row)) if row else 1
    ints = [int(x * den) for x in row]
    g = math.gcd(*ints) if any(ints) else 1
    if g > 1:
        ints = [v // g for v in ints]
    return tuple(ints)


def integer_kernel(rows: Sequence[Sequence[int]], n: int) -> list[tuple[int, ...]]:
    """Basis of {x in Z^n : rows @ x = 0} via unimodular column reduction."""
    m = len(rows)
    cols = [([rows[i][j] for i in range(m)], [1 if t == j else 0 for t in range(n)])
            for j in range(n)]
    fixed = 0
    for r in range(m):
        while True:
            active = [j for j in range(fixed, n) if cols[j][0][r] != 0]
            if not active:
                break
            j0 = min(active, key=lambda j: abs(cols[j][0][r]))
            if cols[j0][0][r] < 0:
                cols[j0] = ([-v for v in cols[j0][0]], [-v for v in cols[j0][1]])
            if len(active) == 1:
                cols[fixed], cols[j0] = cols[j0], cols[fixed]
                fixed += 1
                break
            p = cols[j0][0][r]
            for j in active:
                if j == j0:
                    continue
                q = cols[j][0][r] // p
                if q:
                    cols[j] = ([a - q * b for a, b in zip(cols[j][0], cols[j0][0])],
                               [a - q * b for a, b in zip(cols[j][1], cols[j0][1])])
    return [tuple(u) for _, u in cols[fixed:]]


def lattice_basis_of_span(vectors: Sequence[Sequence[Fraction]], n: int) -> list[Vec]:
    """Z-basis of span_Q(vectors) intersected with Z^n.

    The span is a rational subspace, so the intersection is a full-rank lattice
    in it; the basis is computed from an integer kernel of the annihilator.
    """
    vs = [v for v in vectors if any(x != 0 for x in v)]
    if not vs:
        return []
    ann = nullspace(vs, n)
    if not ann:
        return [tuple(Fraction(1 if i == j else 0) for j in range(n)) for i in range(n)]
    int_rows = [_primitive_int_row(u) for u in ann]
    kern = integer_kernel(int_rows, n)
    out = []
    for k in kern:
        lead = next((v for v in k if v != 0), 1)
        if lead < 0:
            k = tuple(-v for v in k)
        out.append(tuple(Fraction(v) for v in k))
    return out


def floor_frac(x: Fraction) -> int:
    return x.numerator // x.denominator


def ceil_frac(x: Fraction) -> int:
    return -((-x.numerator) // x.denominator)


def ceil_sqrt(x: Fraction) -> int:
    """Smallest integer s >= 0 with s*s >= x."""
    if x <= 0:
        return 0
    c = ceil_frac(x)
    s = math.isqrt(c)
    while s * s < x:
        s += 1
    return s


def common_denominator(xs: Iterable[Fraction]) -> int:
    d = 1
    for x in xs:
        d = math.lcm(d, x.denominator)
    return d
