"""JSON encoding and decoding of all exchange formats.

Rational numbers cross the boundary as exact strings "p/q" (plain integers are
accepted as shorthand); floats are rejected on input and never produced on
output, so round trips are lossless.
"""

from __future__ import annotations

import json
from fractions import Fraction
from typing import Any

from .approx import ApproxCertificate, ApproxRequest
from .cocycle import Cocycle
from .linalg import Mat, Vec
from .ma import Atom, LebesguePiece, Measure, total_mass
from .plfunc import (AffinePiece, PeriodicDecomposition, PeriodicPLFunction,
                     TransversalityReport)
from .polyhedra import AffineLatticeFrame, Polytope, hull
from .skeleton import Gluing, SkeletonFace, SkeletonSpec


class FormatError(ValueError):
    pass


def enc_q(x: Fraction) -> Any:
    return int(x) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def dec_q(v: Any) -> Fraction:
    if isinstance(v, bool):
        raise FormatError(f"expected a rational, got bool {v!r}")
    if isinstance(v, int):
        return Fraction(v)
    if isinstance(v, float):
        raise FormatError(f"floats are not accepted as exact rationals: {v!r}")
    if isinstance(v, str):
        try:
            return Fraction(v)
        except (ValueError, ZeroDivisionError) as e:
            raise FormatError(f"bad rational literal {v!r}: {e}") from e
    raise FormatError(f"expected a rational, got {type(v).__name__}")


def enc_vec(v: Vec) -> list:
    return [enc_q(x) for x in v]


def dec_vec(v: Any) -> Vec:
    if not isinstance(v, list):
        raise FormatError("expected a list of rationals")
    return tuple(dec_q(x) for x in v)


def enc_mat(m: Mat) -> list:
    return [enc_vec(r) for r in m]


def dec_mat(m: Any) -> Mat:
    if not isinstance(m, list):
        raise FormatError("expected a list of rows")
    return tuple(dec_vec(r) for r in m)


# -- polytopes and frames ----------------------------------------------------

def enc_polytope(p: Polytope) -> dict:
    return {"vertices": [enc_vec(v) for v in p.vertices]}


def dec_polytope(d: Any) -> Polytope:
    if not isinstance(d, dict) or "vertices" not in d:
        raise FormatError("a polytope is encoded as {\"vertices\": [[...]]}")
    verts = [dec_vec(v) for v in d["vertices"]]
    if not verts:
        raise FormatError("a polytope needs at least one vertex")
    return hull(verts)


def enc_frame(fr: AffineLatticeFrame) -> dict:
    return {"basepoint": enc_vec(fr.basepoint), "basis": enc_mat(fr.basis)}


def dec_frame(d: Any) -> AffineLatticeFrame:
    if not isinstance(d, dict):
        raise FormatError("a frame is encoded as {\"basepoint\", \"basis\"}")
    return AffineLatticeFrame(dec_vec(d["basepoint"]),
                              tuple(dec_vec(b) for b in d.get("basis", [])))


# -- cocycles and functions ---------------------------------------------------

def enc_cocycle(c: Cocycle) -> dict:
    return {"n": c.n, "periods": enc_mat(c.periods), "b": enc_mat(c.b),
            "z0": enc_vec(c.z0), "polarized": c.polarized}


def dec_cocycle(d: Any) -> Cocycle:
    if not isinstance(d, dict):
        raise FormatError("a cocycle is encoded as an object")
    for key in ("n", "periods", "b", "z0"):
        if key not in d:
            raise FormatError(f"cocycle is missing {key!r}")
    n = d["n"]
    if not isinstance(n, int) or n < 1:
        raise FormatError("cocycle field 'n' must be a positive integer")
    c = Cocycle.make(dec_mat(d["periods"]), dec_mat(d["b"]), dec_vec(d["z0"]),
                     bool(d.get("polarized", True)))
    if c.n != n:
        raise FormatError("cocycle field 'n' does not match the period count")
    return c


def enc_function(f: PeriodicPLFunction) -> dict:
    out = {"pieces": [{"m": enc_vec(p.m), "c": enc_q(p.c)} for p in f.pieces]}
    if f.cocycle is not None:
        out["cocycle"] = enc_cocycle(f.cocycle)
    return out


def dec_function(d: Any) -> PeriodicPLFunction:
    if not isinstance(d, dict) or "pieces" not in d:
        raise FormatError("a function is encoded as {\"cocycle\", \"pieces\"}")
    pieces = []
    for p in d["pieces"]:
        pieces.append(AffinePiece(dec_vec(p["m"]), dec_q(p["c"])))
    c = dec_cocycle(d["cocycle"]) if "cocycle" in d else None
    return PeriodicPLFunction(c, pieces)


def enc_decomposition(dec: PeriodicDecomposition) -> dict:
    return {"cocycle": enc_cocycle(dec.cocycle),
            "cells": [enc_polytope(c) for c in dec.cells]}


def dec_decomposition(d: Any, cocycle: Cocycle | None = None) -> PeriodicDecomposition:
    if not isinstance(d, dict) or "cells" not in d:
        raise FormatError("a decomposition is encoded as {\"cells\": [...]}")
    c = cocycle if cocycle is not None else dec_cocycle(d["cocycle"])
    return PeriodicDecomposition(c, tuple(dec_polytope(x) for x in d["cells"]))


# -- measures ------------------------------------------------------------------

def enc_measure(mu: Measure) -> dict:
    out = {
        "atoms": [{"at": enc_vec(a.at), "mass": enc_q(a.mass),
                   **({"label": a.label} if a.label else {})}
                  for a in mu.atoms],
        "pieces": [{"support": enc_polytope(p.support), "frame": enc_frame(p.frame),
                    "density": enc_q(p.density),
                    **({"label": p.label} if p.label else {})}
                   for p in mu.lebesgue_pieces],
        "total": enc_q(total_mass(mu)),
    }
    return out


def dec_measure(d: Any) -> Measure:
    if not isinstance(d, dict):
        raise FormatError("a measure is encoded as an object")
    atoms = tuple(Atom(dec_vec(a["at"]), dec_q(a["mass"]), a.get("label", ""))
                  for a in d.get("atoms", []))
    pieces = tuple(LebesguePiece(dec_polytope(p["support"]), dec_frame(p["frame"]),
                                 dec_q(p["density"]), p.get("label", ""))
                   for p in d.get("pieces", []))
    mu = Measure(atoms, pieces)
    if "total" in d and dec_q(d["total"]) != total_mass(mu):
        raise FormatError("measure total does not match its contents")
    return mu


# -- skeleton specs -------------------------------------------------------------

def enc_skeleton(spec: SkeletonSpec) -> dict:
    return {
        "cocycle": enc_cocycle(spec.cocycle),
        "d": spec.d,
        "faces": [{
            "id": f.id,
            "carrier": enc_polytope(f.carrier),
            "frame": enc_frame(f.frame),
            "e": f.e,
            "degH": enc_q(f.deg_h),
            "f_aff": {"L": enc_mat(f.f_aff_linear), "t": enc_vec(f.f_aff_offset)},
            "abelian_nondegenerate": f.abelian_nondegenerate,
            "boundary": list(f.boundary_ids),
        } for f in spec.faces],
        "gluing": [{"a": g.face_a, "b": g.face_b,
                    "L": enc_mat(g.linear), "t": enc_vec(g.offset)}
                   for g in spec.gluing],
    }


def dec_skeleton(d: Any) -> SkeletonSpec:
    if not isinstance(d, dict):
        raise FormatError("a skeleton spec is encoded as an object")
    for key in ("cocycle", "d", "faces"):
        if key not in d:
            raise FormatError(f"skeleton spec is missing {key!r}")
    faces = []
    for fd in d["faces"]:
        fa = fd.get("f_aff", {})
        faces.append(SkeletonFace(
            id=str(fd["id"]),
            carrier=dec_polytope(fd["carrier"]),
            frame=dec_frame(fd["frame"]),
            e=int(fd["e"]),
            deg_h=dec_q(fd["degH"]),
            f_aff_linear=dec_mat(fa["L"]),
            f_aff_offset=dec_vec(fa["t"]),
            abelian_nondegenerate=bool(fd["abelian_nondegenerate"]),
            boundary_ids=tuple(fd.get("boundary", ())),
        ))
    gluing = tuple(Gluing(str(g["a"]), str(g["b"]), dec_mat(g["L"]), dec_vec(g["t"]))
                   for g in d.get("gluing", ()))
    return SkeletonSpec(dec_cocycle(d["cocycle"]), int(d["d"]), tuple(faces), gluing)


# -- approximation requests and certificates ------------------------------------

def dec_request(d: Any, eps=None, seed=None, max_retries=None) -> ApproxRequest:
    if not isinstance(d, dict):
        raise FormatError("an approximation request is encoded as an object")
    cocycle = None
    function = None
    if "pieces" in d:
        function = dec_function(d)
    elif "cocycle" in d:
        cocycle = dec_cocycle(d["cocycle"])
    elif "periods" in d:
        cocycle = dec_cocycle(d)
    else:
        raise FormatError("request needs a 'cocycle' or a 'function' target")
    sigma = tuple(dec_polytope(s) for s in d.get("sigma", ()))
    eps = eps if eps is not None else dec_q(d.get("eps", "1/4"))
    seed = seed if seed is not None else int(d.get("seed", 0))
    max_retries = max_retries if max_retries is not None else int(d.get("max_retries", 50))
    return ApproxRequest(cocycle=cocycle, function=function, sigma=sigma,
                         eps=eps, rng_seed=seed, max_retries=max_retries)


def enc_transversality(report: TransversalityReport | None) -> Any:
    if report is None:
        return None
    return {
        "ok": report.ok,
        "criterion_ok": report.criterion_ok,
        "violations": [{
            "sigma": enc_polytope(s), "cell": enc_polytope(cc),
            "dim": dim, "expected": exp,
        } for s, cc, dim, exp in report.violations],
    }


def enc_certificate(cert: ApproxCertificate) -> dict:
    return {
        "sup_error_bound": enc_q(cert.sup_error_bound),
        "strictly_convex": cert.strictly_convex,
        "periodic": cert.periodic,
        "transversal": enc_transversality(cert.transversal),
        "retries_used": cert.retries_used,
    }


def dumps(obj: Any) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def loads(text: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise FormatError(f"malformed JSON: {e}") from e
