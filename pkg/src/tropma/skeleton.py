"""Skeleton faces of a polystable alteration and their measure formulas.

A skeleton spec is the combinatorial shadow of a strictly polystable
alteration: canonical faces given as lattice polytopes in chart spaces, the
dimension of the corresponding stratum, the degree of its closure on the
abelian part, and the affine linearization into N_R.  The measure of a face is

    (d!/e!) * deg_H * MA(metric ∘ f_aff | relint)

with MA taken on the face's lattice frame; degenerate faces carry nothing.
The subtlety the data model keeps explicit: whether the abelian-part map
preserves dimension is not computable from the combinatorics, so it enters
as the per-face flag `abelian_nondegenerate`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence, Union

from . import linalg
from .cocycle import Cocycle
from .linalg import Mat, Vec, dot, vec
from .ma import Atom, Measure, ma_quadratic_restricted, pushforward
from .plfunc import (AffinePiece, PeriodicPLFunction, _certified_cell,
                     _dim_of_points, _translates_meeting, linearity_cells)
from .polyhedra import AffineLatticeFrame, Polytope, hull

Metric = Union[str, PeriodicPLFunction]


@dataclass(frozen=True)
class SkeletonFace:
    """One canonical face: carrier polytope, stratum data and linearization."""

    id: str
    carrier: Polytope
    frame: AffineLatticeFrame
    e: int                      # dimension of the corresponding stratum
    deg_h: Fraction             # degree of the stratum closure on the abelian part
    f_aff_linear: Mat           # n x frame.dim, integer, on frame coordinates
    f_aff_offset: Vec           # rational offset in N_Q
    abelian_nondegenerate: bool
    boundary_ids: tuple[str, ...] = ()

    def __post_init__(self):
        if self.e < 0:
            raise ValueError("stratum dimension must be nonnegative")
        if self.deg_h < 0:
            raise ValueError("deg_H must be nonnegative")
        if self.frame.dim != self.carrier.dim:
            raise ValueError("frame must span the carrier's affine hull")
        for v in self.carrier.vertices:
            self.frame.coordinates(v)
        for row in self.f_aff_linear:
            if len(row) != self.frame.dim:
                raise ValueError("f_aff linear part must have one column per frame vector")
            if any(x.denominator != 1 for x in row):
                raise ValueError("f_aff must map the frame lattice into N (integer matrix)")

    def f_aff(self, y: Sequence[Fraction]) -> Vec:
        """Image in N_R of a point given in frame coordinates."""
        return linalg.vadd(linalg.matvec(self.f_aff_linear, vec(y)), self.f_aff_offset)

    def chart_to_tropical(self, x: Sequence[Fraction]) -> Vec:
        return self.f_aff(self.frame.coordinates(x))


@dataclass(frozen=True)
class Gluing:
    """Chart-affine identification of face_b's carrier onto face_a's."""

    face_a: str
    face_b: str
    linear: Mat
    offset: Vec


@dataclass(frozen=True)
class SkeletonSpec:
    cocycle: Cocycle
    d: int
    faces: tuple[SkeletonFace, ...]
    gluing: tuple[Gluing, ...] = ()

    def __post_init__(self):
        ids = {f.id for f in self.faces}
        if len(ids) != len(self.faces):
            raise ValueError("face ids must be unique")
        n = self.cocycle.n
        for f in self.faces:
            if f.carrier.dim + f.e > self.d:
                raise ValueError(f"face {f.id}: dim(carrier) + e exceeds d")
            if len(f.f_aff_linear) != n:
                raise ValueError(f"face {f.id}: f_aff must land in N_R (n rows)")
            for bid in f.boundary_ids:
                if bid not in ids:
                    raise ValueError(f"face {f.id}: unknown boundary id {bid!r}")
        for g in self.gluing:
            if g.face_a not in ids or g.face_b not in ids:
                raise ValueError("gluing references an unknown face id")

    def face(self, face_id: str) -> SkeletonFace:
        for f in self.faces:
            if f.id == face_id:
                return f
        raise KeyError(face_id)


def check_nondegenerate(spec: SkeletonSpec, face: SkeletonFace) -> bool:
    """Tropical linearization preserves dimension and the abelian flag is set."""
    if not face.abelian_nondegenerate:
        return False
    if face.carrier.dim == 0:
        return True
    return linalg.rank(face.f_aff_linear) == face.carrier.dim


def _scale(spec: SkeletonSpec, face: SkeletonFace) -> Fraction:
    return Fraction(math.factorial(spec.d), math.factorial(face.e)) * face.deg_h


def _pullback_pieces(c: Cocycle, metric: PeriodicPLFunction,
                     face: SkeletonFace) -> list[AffinePiece]:
    """Pieces of metric ∘ f_aff on frame coordinates of the carrier.

    The relevant translates are enumerated over the bounding box of the
    carrier's tropical image, so the finite max equals the pullback exactly
    on the carrier.
    """
    carr_y = [face.frame.coordinates(v) for v in face.carrier.vertices]
    images = [face.f_aff(y) for y in carr_y]
    cols = list(zip(*images))
    lo = tuple(min(col) for col in cols)
    hi = tuple(max(col) for col in cols)
    scan = metric.scan_for(lo, hi)
    k = face.frame.dim
    seen = {}
    for e in scan.entries:
        m = e.piece.m
        slope = tuple(sum(m[i] * face.f_aff_linear[i][j] for i in range(len(m)))
                      for j in range(k))
        const = dot(m, face.f_aff_offset) + e.piece.c
        seen[(slope, const)] = AffinePiece(slope, const)
    return sorted(seen.values(), key=lambda p: (p.m, p.c))


def _pullback_atoms(c: Cocycle, metric: PeriodicPLFunction, face: SkeletonFace
                    ) -> list[tuple[Vec, Fraction]]:
    """Atoms (frame coordinates, dual volume) of MA(metric∘f_aff) in relint."""
    k = face.frame.dim
    pieces = _pullback_pieces(c, metric, face)
    h = PeriodicPLFunction(None, pieces)
    carr_y = hull([face.frame.coordinates(v) for v in face.carrier.vertices])
    lo, hi = carr_y.bbox()
    pad = max(x - y for x, y in zip(hi, lo)) / 4 + Fraction(1, 97)
    box_lo = tuple(x - pad for x in lo)
    box_hi = tuple(x + pad for x in hi)
    scan = h.scan_for(box_lo, box_hi)

    candidates: set[Vec] = set()
    for i in range(len(scan.entries)):
        pts = _certified_cell(scan, i, box_lo, box_hi)
        if pts is None:
            continue
        candidates.update(pts)
    out = []
    for y in sorted(candidates):
        if not carr_y.contains_relint(y):
            continue
        _, arg = scan.eval(y)
        slopes = sorted({scan.entries[i].piece.m for i in arg})
        if len(slopes) <= k:
            continue
        dual = hull(slopes)
        if dual.dim == k:
            out.append((y, lattice_volume_dual(dual)))
    return out


def lattice_volume_dual(dual: Polytope) -> Fraction:
    from .polyhedra import lattice_volume
    return lattice_volume(dual, dual.frame())


def face_measure(spec: SkeletonSpec, face: SkeletonFace, metric: Metric) -> Measure:
    """(d!/e!)·deg_H times the MA measure of the metric pulled to the carrier.

    The canonical metric gives one constant-density Lebesgue piece on the
    carrier; a PL metric gives atoms at the pullback complex's vertices inside
    the relative interior.  Degenerate faces give the zero measure.
    """
    if not check_nondegenerate(spec, face):
        return Measure()
    scale = _scale(spec, face)
    if isinstance(metric, str):
        if metric != "canonical":
            raise ValueError("metric must be 'canonical' or a PL function")
        mu = ma_quadratic_restricted(spec.cocycle, face.f_aff_linear,
                                     face.f_aff_offset, face.carrier, face.frame)
        return mu.scaled(scale, label=face.id)
    atoms = []
    for y, vol in _pullback_atoms(spec.cocycle, metric, face):
        atoms.append(Atom(face.frame.embed(y), scale * vol, label=face.id))
    return Measure(atoms=tuple(atoms))


def assemble_measure(spec: SkeletonSpec, metric: Metric) -> Measure:
    """Sum of the face measures; relative interiors partition the skeleton."""
    out = Measure()
    for face in sorted(spec.faces, key=lambda f: f.id):
        out = out + face_measure(spec, face, metric)
    return out


def vertex_degree(spec: SkeletonSpec, face: SkeletonFace,
                  metric: PeriodicPLFunction, xi: Sequence) -> Fraction:
    """Degree of the component at a pullback vertex, (d!/e!)·deg_H·atom mass.

    Requires the vertex to be transversal: the metric complex's face whose
    relative interior contains f_aff(xi) must have codimension dim(carrier).
    """
    xi = vec(xi)
    if not face.carrier.contains_relint(xi):
        raise ValueError("xi must lie in the relative interior of the carrier")
    y = face.frame.coordinates(xi)

    pieces = _pullback_pieces(spec.cocycle, metric, face)
    h = PeriodicPLFunction(None, pieces)
    _, arg = h.scan_for(y, y).eval(y)
    slopes = sorted({h.pieces[i].m for i in arg})
    k = face.frame.dim
    if len(slopes) <= k:
        raise ValueError("xi is not a vertex of the pullback complex")
    dual = hull(slopes)
    if dual.dim < k:
        raise ValueError("xi is not a vertex of the pullback complex")

    x = face.f_aff(y)
    sigma_dim = _complex_face_dim_at(metric, x)
    n = spec.cocycle.n
    if face.carrier.dim != n - sigma_dim:
        raise ValueError("non-transversal vertex")
    return _scale(spec, face) * lattice_volume_dual(dual)


def _complex_face_dim_at(metric: PeriodicPLFunction, x: Vec) -> int:
    """Dimension of the decomposition face whose relint contains x."""
    decomp, _, _ = linearity_cells(metric)
    for _, _, t in _translates_meeting(decomp, x, x):
        if not t.contains(x):
            continue
        tight = [(a, c) for a, c in t.inequalities if dot(a, x) == c]
        gen = [v for v in t.vertices
               if all(dot(a, v) == c for a, c in tight)]
        return _dim_of_points(gen)
    raise AssertionError("point not covered by the decomposition")


def canonical_subset(spec: SkeletonSpec) -> tuple[list[str], Measure]:
    """Non-degenerate faces and their glued canonical measure.

    Face measures are pushed along the gluing identifications onto component
    root charts, summing where faces are identified; each f_aff is injective
    on its face by the non-degeneracy rank condition, so the face-to-image map
    is finite-to-one at the data level.  Gluing maps that disagree at carrier
    vertices raise.
    """
    nd = [f for f in spec.faces if check_nondegenerate(spec, f)]
    nd_ids = [f.id for f in sorted(nd, key=lambda f: f.id)]

    chart_maps, roots = _component_chart_maps(spec)
    acc: dict[str, Measure] = {}
    for face in sorted(nd, key=lambda f: f.id):
        mu = face_measure(spec, face, "canonical")
        lin, off = chart_maps[face.id]
        tframe = AffineLatticeFrame(
            linalg.vadd(linalg.matvec(lin, face.frame.basepoint), off),
            tuple(linalg.matvec(lin, b) for b in face.frame.basis))
        mu2 = pushforward(mu, [(face.carrier, lin, off, tframe)])
        root = roots[face.id]
        acc[root] = acc.get(root, Measure()) + mu2

    merged = Measure()
    for root in sorted(acc):
        merged = merged + _merge_overlaps(acc[root])
    return nd_ids, merged


def _merge_overlaps(mu: Measure) -> Measure:
    """Sum masses of atoms at identical points and densities on identical
    supports; piece densities are re-expressed in the support's own saturated
    frame (an exact, mass-preserving conversion) so identified carriers merge."""
    from .polyhedra import lattice_volume
    atom_acc: dict[Vec, Fraction] = {}
    for a in mu.atoms:
        atom_acc[a.at] = atom_acc.get(a.at, Fraction(0)) + a.mass
    piece_acc: dict[tuple, tuple[Polytope, AffineLatticeFrame, Fraction]] = {}
    for p in mu.lebesgue_pieces:
        canon_frame = p.support.frame()
        vol_old = lattice_volume(p.support, p.frame)
        vol_new = lattice_volume(p.support, canon_frame)
        density = p.density * vol_old / vol_new if vol_new else p.density
        key = p.support.vertices
        prev = piece_acc.get(key)
        if prev is None:
            piece_acc[key] = (p.support, canon_frame, density)
        else:
            piece_acc[key] = (prev[0], prev[1], prev[2] + density)
    from .ma import LebesguePiece
    return Measure(tuple(Atom(at, m) for at, m in sorted(atom_acc.items())),
                   tuple(LebesguePiece(s, fr, d) for s, fr, d in
                         (piece_acc[k] for k in sorted(piece_acc))))


def _gluing_graph(spec: SkeletonSpec):
    """Adjacency lists; an entry (y, L, t) at node x maps y's chart into x's."""
    adj: dict[str, list[tuple[str, Mat, Vec]]] = {f.id: [] for f in spec.faces}
    for g in spec.gluing:
        adj[g.face_a].append((g.face_b, g.linear, vec(g.offset)))
        inv = _invert_on_carrier(spec.face(g.face_a), spec.face(g.face_b),
                                 g.linear, vec(g.offset))
        adj[g.face_b].append((g.face_a, inv[0], inv[1]))
    return adj


def _invert_on_carrier(face_a: SkeletonFace, face_b: SkeletonFace,
                       lin: Mat, off: Vec) -> tuple[Mat, Vec]:
    """Chart-affine inverse of x_a = lin·x_b + off on face_a's carrier hull.

    The map restricts to a bijection of the carriers, so on frame coordinates
    it is an invertible k x k map K; the inverse chart map is assembled as
    F_b K⁻¹ P_a with P_a a left inverse of face_a's frame columns.
    """
    fa, fb = face_a.frame, face_b.frame
    ra = len(fa.basepoint)
    rb = len(fb.basepoint)
    k = fb.dim
    if k == 0:
        zero = tuple(tuple(Fraction(0) for _ in range(ra)) for _ in range(rb))
        return zero, fb.basepoint
    gram = [[dot(fa.basis[i], fa.basis[j]) for j in range(k)] for i in range(k)]
    pmat = linalg.matmul(linalg.inverse(gram), fa.basis)          # k x ra
    fb_cols = linalg.transpose(fb.basis)                          # rb x k
    kmat = linalg.matmul(linalg.matmul(pmat, lin), fb_cols)       # k x k
    kinv = linalg.inverse(kmat)
    s = linalg.matvec(pmat, linalg.vsub(
        linalg.vadd(linalg.matvec(lin, fb.basepoint), off), fa.basepoint))
    lin_out = linalg.matmul(linalg.matmul(fb_cols, kinv), pmat)   # rb x ra
    off_out = linalg.vsub(
        linalg.vsub(fb.basepoint, linalg.matvec(lin_out, fa.basepoint)),
        linalg.matvec(fb_cols, linalg.matvec(kinv, s)))
    return lin_out, off_out


def _component_chart_maps(spec: SkeletonSpec):
    """BFS over the gluing graph: per face, the chart map onto its root."""
    adj = _gluing_graph(spec)
    maps: dict[str, tuple[Mat, Vec]] = {}
    roots: dict[str, str] = {}
    for f in sorted(spec.faces, key=lambda x: x.id):
        if f.id in maps:
            continue
        r = len(f.carrier.vertices[0])
        ident = tuple(tuple(Fraction(1 if i == j else 0) for j in range(r))
                      for i in range(r))
        maps[f.id] = (ident, tuple(Fraction(0) for _ in range(r)))
        roots[f.id] = f.id
        queue = [f.id]
        while queue:
            cur = queue.pop()
            lin_c, off_c = maps[cur]
            for nxt, lin_e, off_e in adj[cur]:
                lin_n = linalg.matmul(lin_c, lin_e)
                off_n = linalg.vadd(linalg.matvec(lin_c, off_e), off_c)
                if nxt in maps:
                    lin_o, off_o = maps[nxt]
                    for v in spec.face(nxt).carrier.vertices:
                        a = linalg.vadd(linalg.matvec(lin_n, v), off_n)
                        b = linalg.vadd(linalg.matvec(lin_o, v), off_o)
                        if a != b:
                            raise ValueError("inconsistent gluing")
                    continue
                maps[nxt] = (lin_n, off_n)
                roots[nxt] = f.id
                queue.append(nxt)
    return maps, roots
