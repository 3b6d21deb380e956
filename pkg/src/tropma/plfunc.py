"""Periodic piecewise-linear convex functions and periodic decompositions.

A function is stored as a finite list of representative affine pieces together
with a cocycle; the actual function is the sup of all lattice translates of the
representatives, where translating a piece by λ twists it by the cocycle:

    m_{Δ+λ} = m_Δ + b(·,λ),   c_{Δ+λ} = c_Δ - <m_Δ,λ> + z_λ(0) - b(λ,λ).

Because z_λ(0) grows like b(λ,λ)/2, a translate's value decays quadratically
in λ and the sup is a finite max locally.  All evaluation here is certified:
the contributing translates over a box are enumerated from an explicit
ellipsoid bound, and cells of linearity are accepted only after their vertices
reproduce the envelope exactly.
"""

from __future__ import annotations

import functools
import heapq
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from . import linalg
from .cocycle import Cocycle, UnpolarizedError
from .linalg import Vec, dot, vec, vsub
from .polyhedra import (Polytope, _canon_eq, clip_polygon, hull, intersect,
                        vertices_of_hrep)


@dataclass(frozen=True)
class AffinePiece:
    """An affine function ω ↦ <m, ω> + c."""

    m: Vec
    c: Fraction
    anchor: Optional[Vec] = field(default=None, compare=False)

    def value(self, omega: Sequence[Fraction]) -> Fraction:
        return dot(self.m, omega) + self.c


@dataclass(frozen=True)
class TranslatedPiece:
    """A lattice translate of a representative piece."""

    piece: AffinePiece
    rep_index: int
    k: tuple[int, ...]


def translate_piece(c: Cocycle, p: AffinePiece, k: Sequence[int]) -> AffinePiece:
    """Cocycle translate of a piece by the lattice element with coordinates k."""
    k = tuple(int(x) for x in k)
    if all(x == 0 for x in k):
        return p
    lam = c.lattice_vector(k)
    m2 = linalg.vadd(p.m, linalg.matvec(c.b, lam))
    c2 = p.c - dot(p.m, lam) + c.constant_at(k) - c.bilinear(lam, lam)
    anchor = linalg.vadd(p.anchor, lam) if p.anchor is not None else None
    return AffinePiece(m2, c2, anchor)


class PeriodicPLFunction:
    """Sup envelope of the cocycle translates of finitely many affine pieces.

    Instances are immutable by convention; the cell decomposition is derived
    data computed on demand and cached (linearity_cells populates it).
    """

    def __init__(self, cocycle: Optional[Cocycle], pieces: Sequence[AffinePiece],
                 cells: Optional["PeriodicDecomposition"] = None,
                 cell_pieces: Optional[tuple[AffinePiece, ...]] = None):
        if not pieces:
            raise ValueError("a PL function needs at least one piece")
        self.cocycle = cocycle
        self.pieces: tuple[AffinePiece, ...] = tuple(pieces)
        self._cells_cache: Optional[tuple] = None
        if cells is not None and cell_pieces is not None:
            self._cells_cache = (cells, dict(enumerate(cell_pieces)), None)
        self._scan: Optional[_EnvelopeScan] = None

    @property
    def n(self) -> int:
        if self.cocycle is not None:
            return self.cocycle.n
        return len(self.pieces[0].m)

    @property
    def cells(self) -> Optional["PeriodicDecomposition"]:
        return self._cells_cache[0] if self._cells_cache else None

    def scan_for(self, lo: Vec, hi: Vec) -> "_EnvelopeScan":
        """A certified finite competitor family valid on the box [lo, hi]."""
        if self._scan is not None and self._scan.covers(lo, hi):
            return self._scan
        if self._scan is not None:
            lo = tuple(min(a, b) for a, b in zip(lo, self._scan.lo))
            hi = tuple(max(a, b) for a, b in zip(hi, self._scan.hi))
        self._scan = _EnvelopeScan(self, lo, hi)
        return self._scan

    def working_scan(self) -> "_EnvelopeScan":
        """Scan covering the fundamental domain plus a cell-sized collar."""
        lo, hi = _fundamental_bbox(self.cocycle)
        collar = _default_collar(self)
        return self.scan_for(tuple(a - collar for a in lo),
                             tuple(b + collar for b in hi))

    def value(self, omega: Sequence[Fraction]) -> Fraction:
        return evaluate(self, omega)[0]


def _default_collar(f: PeriodicPLFunction) -> Fraction:
    """Initial search collar: roughly three cell widths, at most one period."""
    lo, hi = _fundamental_bbox(f.cocycle)
    width = max(b - a for a, b in zip(lo, hi))
    mesh = max(1, math.isqrt(len(f.pieces)) if f.n == 2 else
               round(len(f.pieces) ** (1.0 / f.n)))
    return max(width * 3 / mesh, width / 4)


class _EnvelopeScan:
    """All translates that can reach the envelope somewhere on a fixed box.

    Every translate whose value at some point of the box meets or exceeds the
    affine lower bound max_p min_box(piece p) is enumerated, so the max over
    the entries equals the envelope exactly anywhere in the box, ties included.
    The per-entry data is integerized over a common denominator so the hot
    comparison loop runs on Python ints.
    """

    def __init__(self, f: PeriodicPLFunction, lo: Vec, hi: Vec):
        self.f = f
        self.lo = lo
        self.hi = hi
        self._cache: dict[Vec, tuple[Fraction, tuple[int, ...]]] = {}
        c = f.cocycle
        if c is None:
            self.entries = [TranslatedPiece(p, i, ()) for i, p in enumerate(f.pieces)]
        else:
            if not c.polarized:
                raise UnpolarizedError("envelope diverges")
            self.entries = _enumerate_entries(f, lo, hi)
        den = linalg.common_denominator(
            [x for e in self.entries for x in e.piece.m] + [e.piece.c for e in self.entries])
        self.den = den
        self._ints = [(tuple(int(x * den) for x in e.piece.m), int(e.piece.c * den))
                      for e in self.entries]
        self.anchors_float = [
            tuple(float(x) for x in e.piece.anchor) if e.piece.anchor is not None else None
            for e in self.entries]

    def covers(self, lo: Vec, hi: Vec) -> bool:
        return all(a <= b for a, b in zip(self.lo, lo)) and \
            all(a >= b for a, b in zip(self.hi, hi))

    def eval(self, point: Vec) -> tuple[Fraction, tuple[int, ...]]:
        """Exact envelope value and the indices of all entries attaining it."""
        hit = self._cache.get(point)
        if hit is not None:
            return hit
        dw = linalg.common_denominator(point)
        w = tuple(int(x * dw) for x in point)
        best = None
        arg: list[int] = []
        n = len(w)
        if n == 1:
            w0 = w[0]
            for i, (mi, ci) in enumerate(self._ints):
                v = mi[0] * w0 + ci * dw
                if best is None or v > best:
                    best, arg = v, [i]
                elif v == best:
                    arg.append(i)
        elif n == 2:
            w0, w1 = w
            for i, (mi, ci) in enumerate(self._ints):
                v = mi[0] * w0 + mi[1] * w1 + ci * dw
                if best is None or v > best:
                    best, arg = v, [i]
                elif v == best:
                    arg.append(i)
        else:
            for i, (mi, ci) in enumerate(self._ints):
                v = sum(a * b for a, b in zip(mi, w)) + ci * dw
                if best is None or v > best:
                    best, arg = v, [i]
                elif v == best:
                    arg.append(i)
        out = (Fraction(best, self.den * dw), tuple(arg))
        self._cache[point] = out
        return out


def _box_corners(lo: Vec, hi: Vec) -> list[Vec]:
    return [tuple(pair[b] for pair, b in zip(zip(lo, hi), bits))
            for bits in itertools.product((0, 1), repeat=len(lo))]


@functools.lru_cache(maxsize=64)
def _cocycle_quadratic_data(c: Cocycle):
    big_b = linalg.matmul(linalg.matmul(c.periods, c.b), linalg.transpose(c.periods))
    big_b_inv = linalg.inverse(big_b)
    return big_b, big_b_inv, c.linear_part_on_basis()


def _candidate_ks(f: PeriodicPLFunction, points: Sequence[Vec], t0: Fraction,
                  keep_h: bool = False):
    """Translate candidates beating t0 at one of the points, via ellipsoids.

    For each representative p and point x, the translates with value >= t0 at
    x satisfy kᵀBk/2 - <h,k> <= p(x) - t0 for B = periods·b·periodsᵀ; the
    integer points of that ellipsoid are read off its bounding box.
    """
    c = f.cocycle
    n = c.n
    _, big_b_inv, ell = _cocycle_quadratic_data(c)
    found: set[tuple[int, tuple[int, ...]]] = set()
    hmap: dict[tuple[int, int], tuple[Vec, Fraction]] = {}
    for pi, p in enumerate(f.pieces):
        for xi, x in enumerate(points):
            bx = linalg.matvec(c.b, x)
            h = linalg.vadd(linalg.matvec(c.periods, vsub(bx, p.m)), ell)
            base = p.value(x)
            if keep_h:
                hmap[(pi, xi)] = (h, base)
            r = base - t0
            k0 = linalg.matvec(big_b_inv, h)
            big_r = dot(h, k0) / 2 + r
            if big_r < 0:
                continue
            ranges = []
            for i in range(n):
                s = linalg.ceil_sqrt(2 * big_r * big_b_inv[i][i])
                ranges.append(range(linalg.ceil_frac(k0[i]) - s,
                                    linalg.floor_frac(k0[i]) + s + 1))
            for k in itertools.product(*ranges):
                found.add((pi, k))
    return found, hmap


def _point_envelope_entry(f: PeriodicPLFunction, x: Vec) -> AffinePiece:
    """One translate attaining the envelope at the single point x."""
    c = f.cocycle
    t0 = max(p.value(x) for p in f.pieces)
    cand, _ = _candidate_ks(f, [x], t0)
    best_val = None
    best = None
    for pi, k in sorted(cand):
        piece = translate_piece(c, f.pieces[pi], k)
        v = piece.value(x)
        if best_val is None or v > best_val:
            best_val, best = v, piece
    return best


def _enumerate_entries(f: PeriodicPLFunction, lo: Vec, hi: Vec) -> list[TranslatedPiece]:
    """All translates that can attain the envelope somewhere on the box.

    A crude affine lower bound first collects a superset of candidates; exact
    envelope minorants at a grid of interior points (tangent translates, which
    bound the envelope from below everywhere) then discard every candidate
    that provably stays below the envelope on the whole box.  The survivors
    are a superset of every argmax set over the box, so evaluation results do
    not depend on the pruning.
    """
    c = f.cocycle
    n = c.n
    corners = _box_corners(lo, hi)
    t0 = max(min(p.value(x) for x in corners) for p in f.pieces)
    cand, hmap = _candidate_ks(f, corners, t0, keep_h=True)

    big_b, _, _ = _cocycle_quadratic_data(c)
    grid = 3 if n <= 2 else 2
    gridpts = []
    for steps in itertools.product(range(grid), repeat=n):
        gridpts.append(tuple(a + (b - a) * Fraction(2 * s + 1, 2 * grid)
                             for a, b, s in zip(lo, hi, steps)))
    minorants = [_point_envelope_entry(f, gp) for gp in gridpts]
    mvals = [[g.value(x) for x in corners] for g in minorants]

    out = []
    for pi, k in sorted(cand):
        kf = vec(k)
        quad = dot(kf, linalg.matvec(big_b, kf)) / 2
        vals = [hmap[(pi, xi)][1] + dot(hmap[(pi, xi)][0], kf) - quad
                for xi in range(len(corners))]
        if all(any(v >= mv for v, mv in zip(vals, row)) for row in mvals):
            out.append(TranslatedPiece(translate_piece(c, f.pieces[pi], k), pi, k))
    return out


def evaluate(f: PeriodicPLFunction, omega: Sequence) -> tuple[Fraction, list[TranslatedPiece]]:
    """Exact sup over all translates at ω, with the full set of argmax pieces."""
    w = vec(omega)
    if f.cocycle is None:
        scan = f.scan_for(w, w)
    else:
        lo, hi = _fundamental_bbox(f.cocycle)
        lo = tuple(min(a, b) for a, b in zip(lo, w))
        hi = tuple(max(a, b) for a, b in zip(hi, w))
        scan = f.scan_for(lo, hi)
    val, arg = scan.eval(w)
    return val, [scan.entries[i] for i in arg]


def _fundamental_bbox(c: Cocycle) -> tuple[Vec, Vec]:
    corners = []
    for bits in itertools.product((0, 1), repeat=c.n):
        pt = [Fraction(0)] * c.n
        for use, lam in zip(bits, c.periods):
            if use:
                pt = [x + y for x, y in zip(pt, lam)]
        corners.append(tuple(pt))
    cols = list(zip(*corners))
    return tuple(min(col) for col in cols), tuple(max(col) for col in cols)


# ---------------------------------------------------------------------------
# decompositions


@dataclass(frozen=True)
class PeriodicDecomposition:
    """Representatives of the maximal cells of a Λ-periodic decomposition."""

    cocycle: Cocycle
    cells: tuple[Polytope, ...]

    def __post_init__(self):
        n = self.cocycle.n
        for cell in self.cells:
            if cell.ambient_dim != n or cell.dim != n:
                raise ValueError("cells must be full-dimensional in the ambient space")


def _k_box(c: Cocycle, target_lo: Vec, target_hi: Vec,
           cell_lo: Vec, cell_hi: Vec) -> list[range]:
    """Integer ranges covering all k with bbox(cell + Σ k_i λ_i) meeting the target."""
    lo = vsub(target_lo, cell_hi)
    hi = vsub(target_hi, cell_lo)
    pinv = linalg.inverse(c.period_columns())
    mins = [None] * c.n
    maxs = [None] * c.n
    for x in _box_corners(lo, hi):
        t = linalg.matvec(pinv, x)
        for i, ti in enumerate(t):
            mins[i] = ti if mins[i] is None or ti < mins[i] else mins[i]
            maxs[i] = ti if maxs[i] is None or ti > maxs[i] else maxs[i]
    return [range(linalg.ceil_frac(a) - 1, linalg.floor_frac(b) + 2)
            for a, b in zip(mins, maxs)]


def _translates_meeting(d: PeriodicDecomposition, lo: Vec, hi: Vec):
    """All (cell_index, k, translated cell) whose bbox meets the box [lo, hi]."""
    out = []
    for ci, cell in enumerate(d.cells):
        clo, chi = cell.bbox()
        for k in itertools.product(*_k_box(d.cocycle, lo, hi, clo, chi)):
            lam = d.cocycle.lattice_vector(k)
            tlo = linalg.vadd(clo, lam)
            thi = linalg.vadd(chi, lam)
            if any(a > b for a, b in zip(tlo, hi)) or any(a > b for a, b in zip(lo, thi)):
                continue
            out.append((ci, k, cell.translate(lam)))
    return out


_RING_CACHE: dict[tuple, list[Vec]] = {}


def _ring2d(p: Polytope) -> list[Vec]:
    """Vertices of a 2-d polytope in counterclockwise order."""
    cached = _RING_CACHE.get(p.vertices)
    if cached is not None:
        return cached
    if len(p.vertices) <= 2:
        ring = list(p.vertices)
    else:
        b = p.barycenter()

        def cmp(u, v):
            du, dv = vsub(u, b), vsub(v, b)
            hu = 0 if (du[1], du[0]) > (0, 0) else 1
            hv = 0 if (dv[1], dv[0]) > (0, 0) else 1
            if hu != hv:
                return -1 if hu < hv else 1
            cr = du[0] * dv[1] - du[1] * dv[0]
            return 0 if cr == 0 else (-1 if cr > 0 else 1)

        ring = sorted(p.vertices, key=functools.cmp_to_key(cmp))
    if len(_RING_CACHE) > 100000:
        _RING_CACHE.clear()
    _RING_CACHE[p.vertices] = ring
    return ring


def _area2(ring: Sequence[Vec]) -> Fraction:
    """Twice the (unsigned) area of a polygon ring."""
    s = Fraction(0)
    m = len(ring)
    for i in range(m):
        x0, y0 = ring[i]
        x1, y1 = ring[(i + 1) % m]
        s += x0 * y1 - x1 * y0
    return abs(s)


def _intersection_area2(p: Polytope, q: Polytope) -> Fraction:
    ring = clip_polygon(_ring2d(p), q.halfspaces)
    if len(ring) < 3:
        return Fraction(0)
    return _area2(ring)


def _dim_of_points(pts: Sequence[Vec]) -> int:
    if not pts:
        return -1
    diffs = [vsub(p, pts[0]) for p in pts[1:]]
    return linalg.rank(diffs) if diffs else 0


def _meets(p: Polytope, q: Polytope) -> bool:
    lo_p, hi_p = p.bbox()
    lo_q, hi_q = q.bbox()
    if any(a > b for a, b in zip(lo_p, hi_q)) or any(a > b for a, b in zip(lo_q, hi_p)):
        return False
    if p.ambient_dim == 2 and p.dim == 2 and q.dim == 2:
        return bool(clip_polygon(_ring2d(p), q.inequalities))
    return intersect(p, q) is not None


def check_periodic(d: PeriodicDecomposition) -> bool:
    """Validate Λ-periodicity of the decomposition given by representatives.

    Checks that the translates tile a fundamental domain exactly (volumes sum
    to the covolume, interiors pairwise disjoint) and that any two meeting
    translates intersect in a common face, so the decomposition descends to
    the torus.
    """
    c = d.cocycle
    n = c.n
    dom = c.fundamental_domain()
    lo, hi = dom.bbox()
    covol = c.covolume()

    total = Fraction(0)
    for _, _, t in _translates_meeting(d, lo, hi):
        if n == 2:
            total += _intersection_area2(t, dom) / 2
        else:
            cap = intersect(t, dom)
            if cap is not None and cap.dim == n:
                total += _std_volume(cap)
    if total != covol:
        return False

    # Any intersecting pair in the full complex is a lattice translate of a
    # pair meeting an inflated fundamental box, provided the collar exceeds
    # the largest cell width; checking those pairs checks them all.
    collar = max(b - a for cell in d.cells for a, b in zip(*cell.bbox()))
    blo = tuple(a - collar for a in lo)
    bhi = tuple(b + collar for b in hi)
    near = [t for _, _, t in _translates_meeting(d, blo, bhi)]
    boxes = [tuple((float(a), float(b)) for a, b in zip(*t.bbox())) for t in near]
    for i, t1 in enumerate(near):
        b1 = boxes[i]
        for j in range(i + 1, len(near)):
            b2 = boxes[j]
            if any(x[0] > y[1] for x, y in zip(b1, b2)) or \
               any(y[0] > x[1] for x, y in zip(b1, b2)):
                continue
            if not _pair_compatible(t1, near[j], n):
                return False
    return True


def _pair_compatible(t1: Polytope, t2: Polytope, n: int) -> bool:
    """Interiors disjoint and, if the cells meet, they meet in a common face."""
    lo1, hi1 = t1.bbox()
    lo2, hi2 = t2.bbox()
    if any(a > b for a, b in zip(lo1, hi2)) or any(a > b for a, b in zip(lo2, hi1)):
        return True
    if t1.vertices == t2.vertices:
        return False
    if n == 2:
        ring = clip_polygon(_ring2d(t1), t2.inequalities)
        pts = sorted(set(ring))
        if not pts:
            return True
        if _dim_of_points(pts) == 2:
            return False
        cap_vs = (pts[0], pts[-1]) if len(pts) > 1 else (pts[0],)
    else:
        cap = intersect(t1, t2)
        if cap is None:
            return True
        if cap.dim == n:
            return False
        cap_vs = cap.vertices
    return _is_face_of_vs(cap_vs, t1) and _is_face_of_vs(cap_vs, t2)


def _std_volume(p: Polytope) -> Fraction:
    from .polyhedra import AffineLatticeFrame, lattice_volume
    n = p.ambient_dim
    frame = AffineLatticeFrame(tuple([Fraction(0)] * n),
                               tuple(tuple(Fraction(1 if i == j else 0) for j in range(n))
                                     for i in range(n)))
    return lattice_volume(p, frame)


def _is_face_of_vs(cap_vs: Sequence[Vec], p: Polytope) -> bool:
    """Whether the polytope with vertex set cap_vs is a face of p."""
    if not all(p.contains(v) for v in cap_vs):
        return False
    tight = [(a, c) for a, c in p.inequalities
             if all(dot(a, v) == c for v in cap_vs)]
    gen = sorted(v for v in p.vertices
                 if all(dot(a, v) == c for a, c in tight))
    return gen == sorted(cap_vs)


def _intersect_fast(p: Polytope, q: Polytope) -> Optional[Polytope]:
    """intersect() with a polygon-clipping fast path for full-dim 2-d cells."""
    if p.ambient_dim == 2 and p.dim == 2 and q.dim == 2:
        ring = clip_polygon(_ring2d(p), q.inequalities)
        pts = list(dict.fromkeys(ring))
        if not pts:
            return None
        return hull(pts)
    return intersect(p, q)


# ---------------------------------------------------------------------------
# linearity cells


class _CollarTooSmall(Exception):
    pass


def _certified_cell(scan: _EnvelopeScan, ei: int, box_lo: Vec, box_hi: Vec,
                    init: Sequence[int] = ()) -> Optional[list[Vec]]:
    """Points spanning {ω in box : entry ei attains the envelope}, or None.

    Constraints are grown on demand: whenever a candidate vertex fails the
    envelope certificate, the entries beating ei there are added and the cell
    recomputed, so the result is certified independently of any pruning.  The
    returned points contain all vertices of the cell (possibly with extra
    collinear boundary points); they are certified to lie on the cell.
    """
    n = len(box_lo)
    entries = scan.entries
    me = entries[ei].piece
    cons: set[int] = set(i for i in init if i != ei)
    box_ring = None
    if n == 2:
        box_ring = [(box_lo[0], box_lo[1]), (box_hi[0], box_lo[1]),
                    (box_hi[0], box_hi[1]), (box_lo[0], box_hi[1])]
    while True:
        halfplanes = []
        for i in cons:
            other = entries[i].piece
            halfplanes.append((vsub(other.m, me.m), me.c - other.c))
        if n == 2:
            pts = list(dict.fromkeys(clip_polygon(box_ring, halfplanes)))
        else:
            box_ineqs = []
            for i in range(n):
                e = tuple(Fraction(1 if j == i else 0) for j in range(n))
                box_ineqs.append((e, box_hi[i]))
                box_ineqs.append((tuple(-x for x in e), -box_lo[i]))
            pts = vertices_of_hrep([], halfplanes + box_ineqs, n)
        if not pts or _dim_of_points(pts) < n:
            return None
        bad: set[int] = set()
        for u in pts:
            _, arg = scan.eval(u)
            if ei not in arg:
                bad.update(arg)
        bad -= cons
        if not bad:
            return pts
        cons |= bad


def _touches_box(pts: Sequence[Vec], box_lo: Vec, box_hi: Vec) -> bool:
    return any(v[i] == box_lo[i] or v[i] == box_hi[i]
               for v in pts for i in range(len(box_lo)))


def _nearest_indices(scan: _EnvelopeScan, ei: int, count: int) -> list[int]:
    af = scan.anchors_float[ei]
    if af is None:
        return []
    cand = []
    for i, other in enumerate(scan.anchors_float):
        if i == ei or other is None:
            continue
        cand.append((max(abs(x - a) for x, a in zip(other, af)), i))
    return [i for _, i in heapq.nsmallest(count, cand)]


def linearity_cells(f: PeriodicPLFunction):
    """Maximal cells of linearity, as canonical representatives modulo Λ.

    Returns (decomposition, cell_to_piece, strictly_convex).  Cells are found
    by walking the envelope's cell graph outward from the fundamental domain;
    each cell is certified by evaluating the envelope at its vertices, and a
    cell straddling the search box restarts the walk with a larger collar.
    Representatives are canonicalized by translating each cell's barycenter
    into the half-open fundamental parallelepiped; when several translates tie
    on a whole cell, the lexicographically minimal piece is assigned.
    """
    if f._cells_cache is not None and f._cells_cache[2] is not None:
        return f._cells_cache
    c = f.cocycle
    if c is None:
        raise ValueError("linearity_cells needs a periodic function")
    flo, fhi = _fundamental_bbox(c)
    dom = c.fundamental_domain()
    collar = _default_collar(f)
    width = max(b - a for a, b in zip(flo, fhi))
    for _attempt in range(8):
        try:
            result = _walk_cells(f, dom, flo, fhi, collar)
            break
        except _CollarTooSmall:
            collar = min(collar * 2, collar + width)
    else:
        raise RuntimeError("cell walk failed to stabilize; is b positive definite?")
    f._cells_cache = result
    return result


def _walk_cells(f: PeriodicPLFunction, dom: Polytope, flo: Vec, fhi: Vec,
                collar: Fraction):
    c = f.cocycle
    n = c.n
    box_lo = tuple(a - collar for a in flo)
    box_hi = tuple(b + collar for b in fhi)
    scan = f.scan_for(box_lo, box_hi)
    entries = scan.entries
    dom_ring = _ring2d(dom) if n == 2 else None

    _, seed = scan.eval(dom.barycenter())
    queue = list(seed)
    enqueued = set(seed)
    canonical: dict[tuple, tuple[Polytope, AffinePiece, bool, set[int]]] = {}

    while queue:
        ei = queue.pop()
        init = _nearest_indices(scan, ei, 32)
        pts = _certified_cell(scan, ei, box_lo, box_hi, init)
        if pts is None:
            continue
        if n == 2:
            meets_dom = bool(clip_polygon(dom_ring, _cell_halfplanes(pts)))
        else:
            meets_dom = _meets(hull(pts), dom)
        if _touches_box(pts, box_lo, box_hi):
            if meets_dom:
                raise _CollarTooSmall()
            continue
        if not meets_dom:
            continue

        tie: Optional[set[int]] = None
        neighbors: set[int] = set()
        for u in pts:
            _, arg = scan.eval(u)
            s = set(arg)
            tie = s if tie is None else (tie & s)
            neighbors |= s
        assert tie and ei in tie

        cell = hull(pts)
        bary = cell.barycenter()
        _, kshift = c.canonicalize(bary)
        lam = c.lattice_vector(kshift)
        ccell = cell.translate(tuple(-x for x in lam)) if any(kshift) else cell
        key = ccell.vertices
        if key not in canonical:
            cpieces = []
            reps = set()
            for ti in tie:
                e = entries[ti]
                kk = tuple(a - b for a, b in zip(e.k, kshift))
                cp = translate_piece(c, f.pieces[e.rep_index], kk)
                cpieces.append((cp.m, cp.c, cp))
                reps.add(e.rep_index)
            cpieces.sort(key=lambda t: (t[0], t[1]))
            canonical[key] = (ccell, cpieces[0][2], len(tie) == 1, reps)

        for i in neighbors:
            if i not in enqueued:
                enqueued.add(i)
                queue.append(i)

    cells = []
    pieces = []
    strict = True
    covered_reps: set[int] = set()
    for key in sorted(canonical):
        ccell, piece, unique, reps = canonical[key]
        cells.append(ccell)
        pieces.append(piece)
        strict = strict and unique
        covered_reps |= reps
    strict = strict and covered_reps == set(range(len(f.pieces)))
    decomp = PeriodicDecomposition(c, tuple(cells))
    return decomp, dict(enumerate(pieces)), strict


def _cell_halfplanes(pts: Sequence[Vec]):
    """Halfplane description of the convex hull of certified cell points."""
    ring = _hull_ring_2d(pts)
    out = []
    for i in range(len(ring)):
        p, q = ring[i], ring[(i + 1) % len(ring)]
        a = (q[1] - p[1], -(q[0] - p[0]))
        out.append((a, dot(a, p)))
    return out


def _hull_ring_2d(pts: Sequence[Vec]) -> list[Vec]:
    pts = sorted(set(pts))
    if len(pts) <= 2:
        return list(pts)

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower: list[Vec] = []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list[Vec] = []
    for p in reversed(pts):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return lower[:-1] + upper[:-1]


# ---------------------------------------------------------------------------
# cocycle rule check


def check_cocycle_rule(f: PeriodicPLFunction, samples: int = 3) -> bool:
    """Validate that the envelope satisfies f(ω+λ) = f(ω) + z_λ(ω).

    Three layers: the translate operation must compose correctly on the
    representatives (round trips return the original piece), the rule must
    hold numerically at sample points, and any cached cell decomposition must
    reproduce the envelope at its cell vertices (this is what fails when the
    cocycle constants are altered after the cells were computed).
    """
    c = f.cocycle
    if c is None:
        return False
    n = c.n
    for p in f.pieces:
        for i in range(n):
            e = tuple(1 if j == i else 0 for j in range(n))
            back = translate_piece(c, translate_piece(c, p, e),
                                   tuple(-x for x in e))
            if (back.m, back.c) != (p.m, p.c):
                return False

    if f._cells_cache is not None:
        decomp, cell_pieces, _ = f._cells_cache
        for idx, cell in enumerate(decomp.cells):
            piece = cell_pieces[idx]
            for u in cell.vertices:
                val, _ = evaluate(f, u)
                if val != piece.value(u):
                    return False

    base = [Fraction(1, 7), Fraction(2, 7), Fraction(5, 7)][:samples]
    pts = []
    for tt in itertools.product(base, repeat=n):
        w = [Fraction(0)] * n
        for ti, lam in zip(tt, c.periods):
            w = [x + ti * y for x, y in zip(w, lam)]
        pts.append(tuple(w))
    lams = [k for k in itertools.product((-1, 0, 1), repeat=n) if any(k)]
    for w in pts:
        v0, _ = evaluate(f, w)
        for k in lams:
            lam = c.lattice_vector(k)
            v1, _ = evaluate(f, linalg.vadd(w, lam))
            if v1 != v0 + c.z_value(k, w):
                return False
    return True


# ---------------------------------------------------------------------------
# transversality


@dataclass(frozen=True)
class TransversalityRow:
    sigma: Polytope
    cell: Polytope
    intersection_dim: int          # -1 when empty
    expected: int                  # D(σ, Δ) = dim σ + dim Δ - n
    definition_ok: bool
    criterion_ok: bool


@dataclass(frozen=True)
class TransversalityReport:
    ok: bool
    violations: tuple[tuple[Polytope, Polytope, int, int], ...]
    rows: tuple[TransversalityRow, ...]
    criterion_ok: bool

    @property
    def lemma_consistent(self) -> bool:
        """The sufficiency criterion never passes while the definition fails."""
        return self.ok or not self.criterion_ok


def _closure_under_faces(sigma: Sequence[Polytope]) -> list[Polytope]:
    from .polyhedra import faces as faces_of
    out: dict[tuple, Polytope] = {}
    for s in sigma:
        for ff in faces_of(s):
            out[ff.vertices] = ff
    return [out[k] for k in sorted(out)]


def _faces_fast(p: Polytope) -> list[Polytope]:
    """All faces of p without re-deriving H-representations from scratch.

    A face's halfspace description is the cell's plus the tight inequalities
    promoted to equations; the inequality list may be redundant on the face,
    which the consumers here (dimension and hull-intersection tests) allow.
    """
    out = []
    for fset, d in p._face_vertex_sets().items():
        verts = tuple(sorted(p.vertices[i] for i in fset))
        if len(fset) == len(p.vertices):
            out.append(p)
            continue
        tight = []
        loose = []
        for a, c in p.inequalities:
            if all(dot(a, p.vertices[i]) == c for i in fset):
                tight.append(_canon_eq(a, c))
            else:
                loose.append((a, c))
        out.append(Polytope(p.ambient_dim, verts,
                            tuple(list(p.equations) + tight), tuple(loose),
                            d, _validate=False))
    return out


def _intersection_dim(p: Polytope, q: Polytope) -> int:
    """Dimension of p ∩ q, or -1 when empty (no hull construction)."""
    lo_p, hi_p = p.bbox()
    lo_q, hi_q = q.bbox()
    if any(a > b for a, b in zip(lo_p, hi_q)) or any(a > b for a, b in zip(lo_q, hi_p)):
        return -1
    if p.ambient_dim == 2 and p.dim == 2 and q.dim == 2:
        pts = set(clip_polygon(_ring2d(p), q.inequalities))
        return _dim_of_points(sorted(pts))
    eqs = list(dict.fromkeys(list(p.equations) + list(q.equations)))
    ineqs = list(dict.fromkeys(list(p.inequalities) + list(q.inequalities)))
    verts = vertices_of_hrep(eqs, ineqs, p.ambient_dim)
    return _dim_of_points(verts)


def _criterion_pair(sigma: Polytope, cell: Polytope, n: int, expected: int) -> bool:
    if expected >= 0:
        dirs = list(sigma.frame().basis) + list(cell.frame().basis)
        return linalg.rank(dirs) == n
    rows = [a for a, _ in sigma.equations] + [a for a, _ in cell.equations]
    rhs = [cc for _, cc in sigma.equations] + [cc for _, cc in cell.equations]
    if not rows:
        return False
    return linalg.solve(rows, rhs) is None


def check_transversal(d: PeriodicDecomposition, sigma: Sequence[Polytope]
                      ) -> TransversalityReport:
    """Check Σ-transversality of the decomposition directly and by criterion.

    For every σ (closed under faces) and every face Δ of a cell translate
    near σ, the definition requires dim(σ ∩ Δ) = dim σ + dim Δ - n whenever
    the intersection is nonempty.  The sufficiency criterion is evaluated on
    the same pairs: linear hulls must span when D(σ,Δ) >= 0 and affine hulls
    must be disjoint when D(σ,Δ) < 0.
    """
    n = d.cocycle.n
    sigmas = _closure_under_faces(sigma)
    rows: list[TransversalityRow] = []
    violations = []
    face_cache: dict[tuple, list[Polytope]] = {}

    for s in sigmas:
        slo, shi = s.bbox()
        seen_faces: set[tuple] = set()
        for _, _, t in _translates_meeting(d, slo, shi):
            tf = face_cache.get(t.vertices)
            if tf is None:
                tf = _faces_fast(t)
                face_cache[t.vertices] = tf
            for ff in tf:
                if ff.vertices in seen_faces:
                    continue
                seen_faces.add(ff.vertices)
                expected = s.dim + ff.dim - n
                idim = _intersection_dim(s, ff)
                def_ok = idim == -1 or idim == expected
                crit_ok = _criterion_pair(s, ff, n, expected)
                rows.append(TransversalityRow(s, ff, idim, expected, def_ok, crit_ok))
                if not def_ok:
                    violations.append((s, ff, idim, expected))
    ok = all(r.definition_ok for r in rows)
    crit = all(r.criterion_ok for r in rows)
    return TransversalityReport(ok, tuple(violations), tuple(rows), crit)
