"""Real Monge-Ampere measures of PL and restricted quadratic functions.

Measures are finite lists of Dirac atoms and constant-density Lebesgue pieces
on polytopes, all with exact rational data.  The normalization is Alexandrov's
throughout: a PL atom's mass is the lattice volume of the subdifferential
(dual polytope) at the vertex, and the smooth density of a quadratic pullback
is the determinant of its Hessian with respect to the lattice frame, with no
factorial prefactor; the d!/e! factors of the skeleton formulas are applied
explicitly by the callers.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from . import linalg
from .cocycle import Cocycle, UnpolarizedError
from .linalg import Mat, Vec, dot, vec
from .plfunc import PeriodicPLFunction, _translates_meeting, evaluate, linearity_cells
from .polyhedra import AffineLatticeFrame, Polytope, hull, lattice_volume


@dataclass(frozen=True)
class Atom:
    at: Vec
    mass: Fraction
    label: str = ""

    def __post_init__(self):
        if self.mass < 0:
            raise ValueError("atom masses must be nonnegative")


@dataclass(frozen=True)
class LebesguePiece:
    support: Polytope
    frame: AffineLatticeFrame
    density: Fraction
    label: str = ""

    def __post_init__(self):
        if self.density < 0:
            raise ValueError("densities must be nonnegative")


@dataclass(frozen=True)
class Measure:
    atoms: tuple[Atom, ...] = ()
    lebesgue_pieces: tuple[LebesguePiece, ...] = ()

    def scaled(self, factor: Fraction, label: Optional[str] = None) -> "Measure":
        return Measure(
            tuple(Atom(a.at, a.mass * factor, label if label is not None else a.label)
                  for a in self.atoms),
            tuple(LebesguePiece(p.support, p.frame, p.density * factor,
                                label if label is not None else p.label)
                  for p in self.lebesgue_pieces))

    def __add__(self, other: "Measure") -> "Measure":
        return Measure(self.atoms + other.atoms,
                       self.lebesgue_pieces + other.lebesgue_pieces)


def total_mass(mu: Measure) -> Fraction:
    total = sum((a.mass for a in mu.atoms), Fraction(0))
    for p in mu.lebesgue_pieces:
        total += p.density * lattice_volume(p.support, p.frame)
    return total


@dataclass(frozen=True)
class Subdifferential:
    """The dual polytope {u : f(ω) - f(at) >= <ω - at, u>} at a point."""

    at: Vec
    dual: Polytope


def subdifferential(f: PeriodicPLFunction, xi: Sequence) -> Subdifferential:
    """Subdifferential of a convex PL function: hull of the argmax slopes.

    The construction is certified against the defining inequality at the
    vertices of the cells adjacent to xi (the cells of the argmax translates).
    """
    from .plfunc import _certified_cell
    xi = vec(xi)
    pad = max((abs(x) for x in xi), default=Fraction(1)) + 1
    box_lo = tuple(x - pad for x in xi)
    box_hi = tuple(x + pad for x in xi)
    scan = f.scan_for(box_lo, box_hi)
    _, arg_idx = scan.eval(xi)
    arg = [scan.entries[i] for i in arg_idx]
    slopes = sorted({e.piece.m for e in arg})
    dual = hull(slopes)
    entry_index = {(e.rep_index, e.k): i for i, e in enumerate(scan.entries)}
    for e in arg:
        pts = _certified_cell(scan, entry_index[(e.rep_index, e.k)], box_lo, box_hi)
        if pts is None:
            continue
        fxi = e.piece.value(xi)
        for w in pts:
            fw, _ = scan.eval(w)
            for u in dual.vertices:
                if fw - fxi < dot(linalg.vsub(w, xi), u):
                    raise AssertionError("subdifferential certificate failed")
    return Subdifferential(xi, dual)


def _atom_at(f: PeriodicPLFunction, xi: Vec, n: int) -> Fraction:
    """Dual-volume mass at a point; zero when the dual is lower-dimensional."""
    _, arg = evaluate(f, xi)
    slopes = sorted({e.piece.m for e in arg})
    if len(slopes) <= n:
        return Fraction(0)
    dual = hull(slopes)
    if dual.dim < n:
        return Fraction(0)
    return lattice_volume(dual, dual.frame())


def ma_pl(f: PeriodicPLFunction, region: Optional[Polytope] = None) -> Measure:
    """Monge-Ampere measure of a convex PL function: atoms at complex vertices.

    With region=None the measure is reported per fundamental domain: one atom
    per Λ-orbit of vertices, each orbit counted once via its representative in
    the half-open fundamental parallelepiped.  With an explicit region, atoms
    sit at the complex vertices contained in the (closed) region.
    """
    c = f.cocycle
    n = f.n
    decomp, _, _ = linearity_cells(f)
    points: list[Vec] = []
    if region is None:
        seen = set()
        for cell in decomp.cells:
            for v in cell.vertices:
                vc, _ = c.canonicalize(v)
                if vc not in seen:
                    seen.add(vc)
                    points.append(vc)
    else:
        lo, hi = region.bbox()
        seen = set()
        for _, _, t in _translates_meeting(decomp, lo, hi):
            for v in t.vertices:
                if v not in seen and region.contains(v):
                    seen.add(v)
                    points.append(v)
    atoms = []
    for xi in sorted(points):
        mass = _atom_at(f, xi, n)
        if mass > 0:
            atoms.append(Atom(xi, mass))
    return Measure(atoms=tuple(atoms))


def ma_quadratic_restricted(c: Cocycle, linear: Mat, offset: Sequence,
                            support: Polytope, frame: AffineLatticeFrame) -> Measure:
    """MA measure of the canonical quadratic pulled back along an affine map.

    `linear` has n rows and frame.dim columns and acts on frame coordinates of
    the support's chart; the density is det(LᵀbL), the pullback Hessian with
    respect to the lattice-normalized frame.  A rank-deficient map gives a
    zero-density piece.
    """
    if not c.polarized:
        raise UnpolarizedError("unpolarized cocycle has no canonical convex function")
    k = frame.dim
    if support.dim != k:
        raise ValueError("frame must span the affine hull of the support")
    for v in support.vertices:
        frame.coordinates(v)
    cols = [tuple(row[j] for row in linear) for j in range(k)]
    hess = [[c.bilinear(cols[i], cols[j]) for j in range(k)] for i in range(k)]
    density = linalg.det(hess) if k else Fraction(1)
    if density < 0:
        raise AssertionError("pullback Hessian of a polarized form must be PSD")
    return Measure(lebesgue_pieces=(LebesguePiece(support, frame, density),))


def pushforward(mu: Measure,
                maps: Sequence[tuple[Polytope, Mat, Vec, AffineLatticeFrame]]) -> Measure:
    """Push a measure forward along piecewise affine chart maps.

    Each map is (source_support, linear, offset, target_frame) acting on chart
    coordinates.  Atoms map to atoms (masses summed on collisions); Lebesgue
    pieces rescale their density by the lattice index of the frame map, so
    total mass is preserved exactly.  Uncovered atoms or pieces raise.
    """
    uncovered = []
    atom_acc: dict[Vec, Fraction] = {}
    for a in mu.atoms:
        img = None
        for src, lin, off, _tf in maps:
            if src.contains(a.at):
                img = linalg.vadd(linalg.matvec(lin, a.at), vec(off))
                break
        if img is None:
            uncovered.append(f"atom at {a.at}")
            continue
        atom_acc[img] = atom_acc.get(img, Fraction(0)) + a.mass

    piece_acc: dict[tuple, tuple[Polytope, AffineLatticeFrame, Fraction]] = {}
    for p in mu.lebesgue_pieces:
        placed = False
        for src, lin, off, tframe in maps:
            if all(src.contains(v) for v in p.support.vertices):
                if tframe.dim != p.frame.dim:
                    raise ValueError("target frame dimension must match the piece frame")
                img_support = hull([linalg.vadd(linalg.matvec(lin, v), vec(off))
                                    for v in p.support.vertices])
                img_dirs = [linalg.matvec(lin, b) for b in p.frame.basis]
                coords = [tframe.coordinates(linalg.vadd(d, tframe.basepoint))
                          for d in img_dirs]
                jac = abs(linalg.det(coords)) if coords else Fraction(1)
                if jac == 0:
                    raise ValueError("map is not injective on a piece's support")
                key = (img_support.vertices, tframe.basepoint, tframe.basis)
                prev = piece_acc.get(key)
                dens = p.density / jac
                if prev is not None:
                    piece_acc[key] = (prev[0], prev[1], prev[2] + dens)
                else:
                    piece_acc[key] = (img_support, tframe, dens)
                placed = True
                break
        if not placed:
            uncovered.append(f"piece on {p.support.vertices}")
    if uncovered:
        raise ValueError("pushforward does not cover: " + "; ".join(uncovered))

    atoms = tuple(Atom(at, m) for at, m in sorted(atom_acc.items()))
    pieces = tuple(LebesguePiece(s, fr, d) for s, fr, d in
                   (piece_acc[k] for k in sorted(piece_acc)))
    return Measure(atoms=atoms, lebesgue_pieces=pieces)
