"""Exact rational polytopes with lattice structure.

Polytopes carry both representations: an irredundant vertex list and a
halfspace description (facet inequalities plus affine-hull equations), both
over the rationals and both validated against each other at construction.
Lower-dimensional polytopes are first-class; their affine hulls carry the
lattice structure induced by the ambient lattice Z^n, computed by saturation.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional, Sequence

from . import linalg
from .linalg import Vec, dot, frac, vec, vsub


class FrameMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class AmbientLattice:
    """The lattice N = Z^n with its dual M, identified via the standard basis."""

    n: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("ambient dimension must be >= 1")


@dataclass(frozen=True)
class AffineLatticeFrame:
    """An affine chart of a polytope's hull: basepoint plus a lattice basis.

    The basis must generate the full lattice (linear hull) ∩ Z^n, not a proper
    sublattice; this is what makes lattice volumes well defined.
    """

    basepoint: Vec
    basis: tuple[Vec, ...]

    def __post_init__(self):
        if self.basis and linalg.rank(self.basis) != len(self.basis):
            raise ValueError("frame basis vectors are linearly dependent")

    @property
    def dim(self) -> int:
        return len(self.basis)

    def coordinates(self, point: Sequence[Fraction]) -> Vec:
        """Frame coordinates of an ambient point on the frame's affine hull."""
        d = vsub(point, self.basepoint)
        if not self.basis:
            if any(x != 0 for x in d):
                raise FrameMismatchError("frame mismatch")
            return ()
        cols = linalg.transpose(self.basis)
        y = linalg.solve(cols, d)
        if y is None:
            raise FrameMismatchError("frame mismatch")
        return y

    def embed(self, coords: Sequence[Fraction]) -> Vec:
        x = list(self.basepoint)
        for c, b in zip(coords, self.basis):
            x = [xi + c * bi for xi, bi in zip(x, b)]
        return tuple(x)

    def is_saturated(self) -> bool:
        """True iff the basis generates span ∩ Z^n (no proper sublattice)."""
        if not self.basis:
            return True
        if any(x.denominator != 1 for b in self.basis for x in b):
            return False
        sat = linalg.lattice_basis_of_span(self.basis, len(self.basepoint))
        coords = [linalg.solve(linalg.transpose(sat), b) for b in self.basis]
        if any(c is None for c in coords):
            return False
        d = linalg.det(coords)
        return abs(d) == 1


Halfspace = tuple[Vec, Fraction]  # (a, c) meaning <a, x> <= c


def _canon_ineq(a: Sequence[Fraction], c: Fraction) -> Halfspace:
    den = math.lcm(c.denominator, *(x.denominator for x in a))
    ints = [int(x * den) for x in a]
    ci = int(c * den)
    g = math.gcd(ci, *ints)
    if g > 1:
        ints = [v // g for v in ints]
        ci //= g
    return tuple(Fraction(v) for v in ints), Fraction(ci)


def _canon_eq(a: Sequence[Fraction], c: Fraction) -> Halfspace:
    a2, c2 = _canon_ineq(a, c)
    lead = next((x for x in a2 if x != 0), Fraction(1))
    if lead < 0:
        a2, c2 = tuple(-x for x in a2), -c2
    return a2, c2


class Polytope:
    """A bounded rational polytope with exact V- and H-representations."""

    __slots__ = ("ambient_dim", "vertices", "equations", "inequalities", "dim",
                 "_bbox", "_frame")

    def __init__(self, ambient_dim: int, vertices: tuple[Vec, ...],
                 equations: tuple[Halfspace, ...], inequalities: tuple[Halfspace, ...],
                 dim: int, _validate: bool = True):
        self.ambient_dim = ambient_dim
        self.vertices = vertices
        self.equations = equations
        self.inequalities = inequalities
        self.dim = dim
        self._bbox: Optional[tuple[Vec, Vec]] = None
        self._frame: Optional[AffineLatticeFrame] = None
        if _validate:
            self._check_consistency()

    def _check_consistency(self):
        for v in self.vertices:
            for a, c in self.equations:
                if dot(a, v) != c:
                    raise ValueError("vertex violates an affine-hull equation")
            for a, c in self.inequalities:
                if dot(a, v) > c:
                    raise ValueError("vertex violates a halfspace")
        if self.dim >= 1:
            for a, c in self.inequalities:
                tight = sum(1 for v in self.vertices if dot(a, v) == c)
                if tight < self.dim:
                    raise ValueError("halfspace not tight on a facet")

    @property
    def halfspaces(self) -> list[Halfspace]:
        """All halfspaces, with affine-hull equations expanded into pairs."""
        hs = list(self.inequalities)
        for a, c in self.equations:
            hs.append((a, c))
            hs.append((tuple(-x for x in a), -c))
        return hs

    def bbox(self) -> tuple[Vec, Vec]:
        if self._bbox is None:
            cols = list(zip(*self.vertices))
            self._bbox = (tuple(min(col) for col in cols),
                          tuple(max(col) for col in cols))
        return self._bbox

    def contains(self, x: Sequence[Fraction]) -> bool:
        return (all(dot(a, x) == c for a, c in self.equations)
                and all(dot(a, x) <= c for a, c in self.inequalities))

    def contains_relint(self, x: Sequence[Fraction]) -> bool:
        return (all(dot(a, x) == c for a, c in self.equations)
                and all(dot(a, x) < c for a, c in self.inequalities))

    def translate(self, t: Sequence[Fraction]) -> "Polytope":
        t = vec(t)
        return Polytope(
            self.ambient_dim,
            tuple(sorted(linalg.vadd(v, t) for v in self.vertices)),
            tuple((a, c + dot(a, t)) for a, c in self.equations),
            tuple((a, c + dot(a, t)) for a, c in self.inequalities),
            self.dim, _validate=False)

    def barycenter(self) -> Vec:
        k = Fraction(1, len(self.vertices))
        acc = [Fraction(0)] * self.ambient_dim
        for v in self.vertices:
            acc = [x + y for x, y in zip(acc, v)]
        return tuple(k * x for x in acc)

    def frame(self) -> AffineLatticeFrame:
        if self._frame is None:
            base = self.vertices[0]
            diffs = [vsub(v, base) for v in self.vertices[1:]]
            basis = linalg.lattice_basis_of_span(diffs, self.ambient_dim)
            self._frame = AffineLatticeFrame(base, tuple(basis))
        return self._frame

    def _face_vertex_sets(self) -> dict[frozenset, int]:
        """All nonempty faces as vertex-index sets, mapped to their dimension."""
        idx_all = frozenset(range(len(self.vertices)))
        facets = []
        for a, c in self.inequalities:
            tight = frozenset(i for i, v in enumerate(self.vertices) if dot(a, v) == c)
            if tight and tight != idx_all:
                facets.append(tight)
        found = {idx_all}
        frontier = {idx_all}
        while frontier:
            nxt = set()
            for fset in frontier:
                for ft in facets:
                    cap = fset & ft
                    if cap and cap not in found:
                        found.add(cap)
                        nxt.add(cap)
            frontier = nxt
        dims = {}
        for fset in found:
            pts = [self.vertices[i] for i in fset]
            diffs = [vsub(p, pts[0]) for p in pts[1:]]
            dims[fset] = linalg.rank(diffs) if diffs else 0
        return dims

    def __eq__(self, other):
        return isinstance(other, Polytope) and self.vertices == other.vertices

    def __hash__(self):
        return hash(self.vertices)

    def __repr__(self):
        return f"Polytope(dim={self.dim}, vertices={len(self.vertices)}, ambient={self.ambient_dim})"


def _dedupe_points(points: list[Vec]) -> list[Vec]:
    seen = set()
    out = []
    for p in points:
        if p not in seen:
            seen.add(p)
            out.append(p)
    return out


def _hull_basis(diffs: list[Vec]) -> list[Vec]:
    basis: list[Vec] = []
    r = 0
    for d in diffs:
        cand = basis + [d]
        if linalg.rank(cand) > r:
            basis = cand
            r += 1
    return basis


def _hull_2d(coords: list[Vec]) -> list[Vec]:
    """Convex hull of 2-d points, counterclockwise, via the monotone chain."""
    pts = sorted(set(coords))
    if len(pts) <= 2:
        return pts

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


def _facets_brute(coords: list[Vec], d: int) -> list[Halfspace]:
    """Facet inequalities of a full-dimensional point set in R^d by exhaustion."""
    facets = set()
    for combo in itertools.combinations(range(len(coords)), d):
        pts = [coords[i] for i in combo]
        rows = [vsub(p, pts[0]) for p in pts[1:]]
        ns = linalg.nullspace(rows, d) if rows else [
            tuple(Fraction(1 if i == j else 0) for j in range(d)) for i in range(d)]
        if len(ns) != 1:
            continue
        a = ns[0]
        c = dot(a, pts[0])
        vals = [dot(a, q) - c for q in coords]
        if all(v <= 0 for v in vals):
            facets.add(_canon_ineq(a, c))
        elif all(v >= 0 for v in vals):
            facets.add(_canon_ineq(tuple(-x for x in a), -c))
    return sorted(facets)


def hull(points: Iterable[Sequence]) -> Polytope:
    """Convex hull of rational points, with irredundant V-rep and exact H-rep."""
    pts = _dedupe_points([vec(p) for p in points])
    if not pts:
        raise ValueError("hull of an empty point set")
    n = len(pts[0])
    base = pts[0]
    diffs = [vsub(p, base) for p in pts[1:]]
    basis = _hull_basis(diffs)
    d = len(basis)

    eqs: list[Halfspace] = []
    for w in linalg.nullspace(basis, n) if basis else \
            [tuple(Fraction(1 if i == j else 0) for j in range(n)) for i in range(n)]:
        eqs.append(_canon_eq(w, dot(w, base)))
    eqs.sort()

    if d == 0:
        return Polytope(n, (base,), tuple(eqs), (), 0, _validate=False)

    cols = linalg.transpose(basis)
    coord_of = {p: linalg.solve(cols, vsub(p, base)) for p in pts}

    if d == 1:
        order = sorted(pts, key=lambda p: coord_of[p][0])
        verts = [order[0], order[-1]]
        local_facets = [((Fraction(-1),), -coord_of[order[0]][0]),
                        ((Fraction(1),), coord_of[order[-1]][0])]
    elif d == 2:
        ring = _hull_2d([coord_of[p] for p in pts])
        back = {coord_of[p]: p for p in pts}
        verts = [back[c] for c in ring]
        local_facets = []
        for i in range(len(ring)):
            p, q = ring[i], ring[(i + 1) % len(ring)]
            a = (q[1] - p[1], -(q[0] - p[0]))
            local_facets.append((a, dot(a, p)))
    else:
        all_coords = [coord_of[p] for p in pts]
        local_facets = _facets_brute(all_coords, d)
        verts = []
        for p in pts:
            tight = [a for a, c in local_facets if dot(a, coord_of[p]) == c]
            if linalg.rank(tight) == d:
                verts.append(p)

    ineqs = []
    basis_t = tuple(basis)
    for a, c in local_facets:
        u = linalg.solve(basis_t, a)  # rows are basis vectors: <u, basis_i> = a_i
        off = dot(u, base) + c
        ineqs.append(_canon_ineq(u, off))
    ineqs = sorted(set(ineqs))

    return Polytope(n, tuple(sorted(verts)), tuple(eqs), tuple(ineqs), d)


def vertices_of_hrep(equations: Sequence[Halfspace],
                     inequalities: Sequence[Halfspace], n: int) -> list[Vec]:
    """All vertices of a bounded {x : eqs hold, ineqs hold}; [] if infeasible.

    Raises if the region is unbounded (callers always pass bounded systems).
    """
    if equations:
        a_rows = [a for a, _ in equations]
        b_vals = [c for _, c in equations]
        x0 = linalg.solve(a_rows, b_vals)
        if x0 is None:
            return []
        kern = linalg.nullspace(a_rows, n)
    else:
        x0 = tuple(Fraction(0) for _ in range(n))
        kern = [tuple(Fraction(1 if i == j else 0) for j in range(n)) for i in range(n)]
    f = len(kern)

    red: list[Halfspace] = []
    for a, c in inequalities:
        ar = tuple(dot(a, k) for k in kern)
        cr = c - dot(a, x0)
        if all(x == 0 for x in ar):
            if cr < 0:
                return []
            continue
        red.append((ar, cr))

    if f == 0:
        return [x0]

    if f == 1:
        lo, hi = None, None
        for (a,), c in red:
            bound = c / a
            if a > 0:
                hi = bound if hi is None else min(hi, bound)
            else:
                lo = bound if lo is None else max(lo, bound)
        if lo is None or hi is None:
            raise ValueError("unbounded halfspace system")
        if lo > hi:
            return []
        ys = [(lo,), (hi,)] if lo != hi else [(lo,)]
    else:
        ys = []
        seen = set()
        for combo in itertools.combinations(red, f):
            rows = [a for a, _ in combo]
            rhs = [c for _, c in combo]
            if linalg.rank(rows) != f:
                continue
            y = linalg.solve(rows, rhs)
            if y is None or y in seen:
                continue
            if all(dot(a, y) <= c for a, c in red):
                seen.add(y)
                ys.append(y)

    out = []
    for y in ys:
        x = list(x0)
        for yi, k in zip(y, kern):
            x = [xi + yi * ki for xi, ki in zip(x, k)]
        out.append(tuple(x))
    return sorted(set(out))


def intersect(p: Polytope, q: Polytope) -> Optional[Polytope]:
    """Intersection of two polytopes; None when empty."""
    if p.ambient_dim != q.ambient_dim:
        raise ValueError("ambient dimensions differ")
    lo_p, hi_p = p.bbox()
    lo_q, hi_q = q.bbox()
    if any(a > b for a, b in zip(lo_p, hi_q)) or any(a > b for a, b in zip(lo_q, hi_p)):
        return None
    eqs = list(dict.fromkeys(list(p.equations) + list(q.equations)))
    ineqs = list(dict.fromkeys(list(p.inequalities) + list(q.inequalities)))
    verts = vertices_of_hrep(eqs, ineqs, p.ambient_dim)
    if not verts:
        return None
    return hull(verts)


def affine_data(p: Polytope) -> tuple[int, AffineLatticeFrame]:
    """Dimension of the affine hull and a saturated lattice frame for it."""
    return p.dim, p.frame()


def faces(p: Polytope) -> list[Polytope]:
    """All nonempty faces of p, including p itself, each exactly once."""
    out = []
    for fset in sorted(p._face_vertex_sets(), key=lambda s: (len(s), sorted(s))):
        out.append(hull([p.vertices[i] for i in fset]))
    return out


def lattice_volume(p: Polytope, frame: AffineLatticeFrame) -> Fraction:
    """Lebesgue volume of p in frame coordinates (frame lattice has covolume 1).

    A 0-dimensional polytope has volume 1 (counting measure), so Dirac masses
    compose uniformly with densities downstream.
    """
    if frame.dim != p.dim:
        raise FrameMismatchError("frame mismatch")
    try:
        coords = {i: frame.coordinates(v) for i, v in enumerate(p.vertices)}
    except FrameMismatchError:
        raise FrameMismatchError("frame mismatch")
    k = p.dim
    if k == 0:
        return Fraction(1)

    face_dims = p._face_vertex_sets()
    by_dim: dict[int, list[frozenset]] = {}
    for fset, d in face_dims.items():
        by_dim.setdefault(d, []).append(fset)

    def bary(fset: frozenset) -> Vec:
        pts = [coords[i] for i in fset]
        s = [sum(col, Fraction(0)) for col in zip(*pts)]
        return tuple(x / len(pts) for x in s)

    total = Fraction(0)
    kfact = math.factorial(k)

    def chains(fset: frozenset, d: int) -> Iterable[list[frozenset]]:
        if d == 0:
            yield [fset]
            return
        for sub in by_dim.get(d - 1, []):
            if sub < fset:
                for ch in chains(sub, d - 1):
                    yield ch + [fset]

    top = frozenset(range(len(p.vertices)))
    for chain in chains(top, k):
        b0 = bary(chain[0])
        rows = [vsub(bary(f), b0) for f in chain[1:]]
        total += abs(linalg.det(rows))
    return total / kfact


def clip_polygon(poly: list[Vec], halfplanes: Sequence[Halfspace]) -> list[Vec]:
    """Clip a counterclockwise 2-d polygon by halfplanes a.x <= c, exactly.

    Returns the (possibly degenerate) clipped vertex ring; empty when the
    intersection is empty.  Fast path for full-dimensional cell extraction.
    """
    cur = list(poly)
    for a, c in halfplanes:
        if not cur:
            return []
        nxt: list[Vec] = []
        vals = [dot(a, p) for p in cur]
        m = len(cur)
        for i in range(m):
            p, vp = cur[i], vals[i]
            q, vq = cur[(i + 1) % m], vals[(i + 1) % m]
            if vp <= c:
                nxt.append(p)
            if (vp < c < vq) or (vq < c < vp):
                t = (c - vp) / (vq - vp)
                nxt.append(tuple(pi + t * (qi - pi) for pi, qi in zip(p, q)))
        dedup: list[Vec] = []
        for pt in nxt:
            if not dedup or pt != dedup[-1]:
                dedup.append(pt)
        if len(dedup) > 1 and dedup[0] == dedup[-1]:
            dedup.pop()
        cur = dedup
    return cur


def box_polytope(lo: Sequence[Fraction], hi: Sequence[Fraction]) -> Polytope:
    corners = [tuple(pair[i] for pair, i in zip(zip(lo, hi), bits))
               for bits in itertools.product((0, 1), repeat=len(lo))]
    return hull(corners)
