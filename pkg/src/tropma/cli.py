"""Command-line front end: JSON in, exact JSON (or SVG) out.

Every command is deterministic given its input bytes and flags.  All numbers
in JSON artifacts are exact rational strings; stage timings are diagnostic
only and go to stderr so artifacts stay byte-reproducible.  Exit codes:
0 success, 1 input or validation error, 2 algorithmic failure (perturbation
retries exhausted, strictification failure, or a failed mass check).
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from fractions import Fraction

from . import jsonio
from .approx import PerturbationError, StrictificationError, approximate, tangent_pl
from .jsonio import FormatError
from .ma import ma_pl, total_mass
from .plfunc import check_cocycle_rule, check_periodic, linearity_cells
from .skeleton import assemble_measure, check_nondegenerate, vertex_degree
from .svgplot import render


def _read(path: str):
    with open(path, "r", encoding="utf-8") as fh:
        return jsonio.loads(fh.read())


def _write(path, text: str):
    if path:
        tmp = path + ".tmp"
        with open(tmp, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    else:
        sys.stdout.write(text)


def _fail(kind: str, message: str, code: int) -> int:
    sys.stdout.write(jsonio.dumps({"error": {"kind": kind, "message": message}}))
    return code


def _threads_cap() -> int:
    # The implementation is sequential, which satisfies any requested cap.
    try:
        return max(1, int(os.environ.get("TROPMA_THREADS", "1")))
    except ValueError:
        return 1


def _metric_from_path(path: str):
    if path == "canonical":
        return "canonical"
    return jsonio.dec_function(_read(path))


def _looks_like_measure(data) -> bool:
    if not isinstance(data, dict):
        return False
    if "atoms" in data:
        return True
    pieces = data.get("pieces") or []
    return bool(pieces) and isinstance(pieces[0], dict) and "support" in pieces[0]


def cmd_validate(args) -> int:
    data = _read(args.infile)
    kind = args.kind
    if kind == "auto":
        if isinstance(data, dict) and "faces" in data:
            kind = "skeleton"
        elif isinstance(data, dict) and "cells" in data:
            kind = "decomposition"
        elif isinstance(data, dict) and "pieces" in data and (
                not data["pieces"] or "m" in data["pieces"][0]):
            kind = "function"
        elif isinstance(data, dict) and ("atoms" in data or "pieces" in data):
            kind = "measure"
        elif isinstance(data, dict) and "periods" in data:
            kind = "cocycle"
        else:
            raise FormatError("cannot infer the kind of this input")
    report = {"kind": kind, "valid": True}
    if kind == "cocycle":
        jsonio.dec_cocycle(data)
    elif kind == "function":
        f = jsonio.dec_function(data)
        report["cocycle_rule"] = check_cocycle_rule(f) if f.cocycle else None
    elif kind == "decomposition":
        d = jsonio.dec_decomposition(data)
        report["periodic"] = check_periodic(d)
        report["valid"] = report["periodic"]
    elif kind == "skeleton":
        jsonio.dec_skeleton(data)
    elif kind == "measure":
        jsonio.dec_measure(data)
    else:
        raise FormatError(f"unknown kind {kind!r}")
    _write(args.out, jsonio.dumps(report))
    return 0 if report["valid"] else 1


def cmd_approximate(args) -> int:
    data = _read(args.infile)
    eps = jsonio.dec_q(args.eps) if args.eps is not None else None
    if eps is not None and eps <= 0:
        return _fail("validation", "epsilon must be positive", 1)
    req = jsonio.dec_request(data, eps=eps, seed=args.seed)
    t0 = time.monotonic()
    f, decomp, cert = approximate(req)
    print(f"approximate: {time.monotonic() - t0:.3f}s "
          f"(retries {cert.retries_used}, threads<={_threads_cap()})", file=sys.stderr)
    out = {
        "function": jsonio.enc_function(f),
        "decomposition": jsonio.enc_decomposition(decomp),
        "certificate": jsonio.enc_certificate(cert),
    }
    _write(args.out, jsonio.dumps(out))
    return 0


def cmd_ma(args) -> int:
    data = _read(args.infile)
    if "pieces" in data:
        f = jsonio.dec_function(data)
    else:
        c = jsonio.dec_cocycle(data if "periods" in data else data["cocycle"])
        f = tangent_pl(c, args.k or 1)
    region = None
    if args.region:
        region = jsonio.dec_polytope(_read(args.region))
    mu = ma_pl(f, None if (args.fundamental or region is None) else region)
    _write(args.out, jsonio.dumps(jsonio.enc_measure(mu)))
    return 0


def cmd_skeleton_measure(args) -> int:
    spec = jsonio.dec_skeleton(_read(args.infile))
    metric = _metric_from_path(args.metric or "canonical")
    mu = assemble_measure(spec, metric)
    _write(args.out, jsonio.dumps(jsonio.enc_measure(mu)))
    return 0


def cmd_degree(args) -> int:
    spec = jsonio.dec_skeleton(_read(args.infile))
    metric = _metric_from_path(args.metric)
    if metric == "canonical":
        return _fail("validation", "degree needs a PL metric file", 1)
    from .skeleton import _pullback_atoms
    rows = []
    total = Fraction(0)
    for face in sorted(spec.faces, key=lambda f: f.id):
        if not check_nondegenerate(spec, face):
            continue
        for y, _vol in _pullback_atoms(spec.cocycle, metric, face):
            xi = face.frame.embed(y)
            deg = vertex_degree(spec, face, metric, xi)
            rows.append({"face": face.id, "at": jsonio.enc_vec(xi),
                         "degree": jsonio.enc_q(deg)})
            total += deg
    _write(args.out, jsonio.dumps({"degrees": rows, "total": jsonio.enc_q(total)}))
    return 0


def cmd_mass_check(args) -> int:
    spec = jsonio.dec_skeleton(_read(args.infile))
    metrics = args.metric or ["canonical"]
    totals = {}
    per_face = {}
    for mpath in metrics:
        data = _read(mpath) if mpath != "canonical" else None
        if data is not None and _looks_like_measure(data):
            mu = jsonio.dec_measure(data)
            totals[mpath] = total_mass(mu)
            continue
        metric = "canonical" if mpath == "canonical" else jsonio.dec_function(data)
        table = {}
        for face in sorted(spec.faces, key=lambda f: f.id):
            from .skeleton import face_measure
            table[face.id] = total_mass(face_measure(spec, face, metric))
        per_face[mpath] = {k: jsonio.enc_q(v) for k, v in table.items()}
        totals[mpath] = sum(table.values(), Fraction(0))
    values = list(totals.values())
    equal = all(v == values[0] for v in values)
    report = {
        "totals": {k: jsonio.enc_q(v) for k, v in totals.items()},
        "per_face": per_face,
        "equal": equal,
    }
    _write(args.out, jsonio.dumps(report))
    return 0 if equal else 2


def cmd_plot(args) -> int:
    data = _read(args.infile)
    decomp = None
    sigma = ()
    measure = None
    if "cells" in data:
        decomp = jsonio.dec_decomposition(data)
    elif "pieces" in data and data["pieces"] and "m" in data["pieces"][0]:
        f = jsonio.dec_function(data)
        if f.cocycle is None or f.cocycle.n != 2:
            return _fail("validation", "plot supports 2-D only", 1)
        decomp = linearity_cells(f)[0]
    if "sigma" in data:
        sigma = tuple(jsonio.dec_polytope(s) for s in data["sigma"])
    if "measure" in data:
        measure = jsonio.dec_measure(data["measure"])
    elif "atoms" in data and "cells" not in data and decomp is None:
        measure = jsonio.dec_measure(data)
    try:
        svg = render(decomp, sigma, measure)
    except ValueError as e:
        return _fail("validation", str(e), 1)
    _write(args.out, svg)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="tropma",
        description="Exact Monge-Ampere measures of toric metrics on tropical "
                    "abelian varieties")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, out_default=""):
        p.add_argument("--in", dest="infile", required=True, help="input JSON file")
        p.add_argument("--out", default=out_default, help="output file (stdout if empty)")

    p = sub.add_parser("validate", help="parse and validate an input file")
    common(p)
    p.add_argument("--kind", default="auto",
                   choices=["auto", "cocycle", "function", "decomposition",
                            "skeleton", "measure"])
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("approximate", help="transversal PL approximation pipeline")
    common(p)
    p.add_argument("--eps", default=None, help="tolerance as an exact rational, e.g. 1/4")
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_approximate)

    p = sub.add_parser("ma", help="Monge-Ampere measure of a PL function")
    common(p)
    p.add_argument("--k", type=int, default=None,
                   help="tangent mesh refinement when the input is a cocycle")
    p.add_argument("--region", default=None, help="polytope JSON restricting the atoms")
    p.add_argument("--fundamental", action="store_true",
                   help="report one atom per lattice orbit (half-open domain)")
    p.set_defaults(func=cmd_ma)

    p = sub.add_parser("skeleton-measure", help="assemble the measure of a skeleton spec")
    common(p)
    p.add_argument("--metric", default="canonical",
                   help="'canonical' or a path to a function JSON")
    p.set_defaults(func=cmd_skeleton_measure)

    p = sub.add_parser("degree", help="vertex degrees of a PL metric on a skeleton")
    common(p)
    p.add_argument("--metric", required=True, help="path to a function JSON")
    p.set_defaults(func=cmd_degree)

    p = sub.add_parser("mass-check", help="compare total masses across metrics")
    common(p)
    p.add_argument("--metric", action="append",
                   help="'canonical' or a function/measure JSON path (repeatable)")
    p.set_defaults(func=cmd_mass_check)

    p = sub.add_parser("plot", help="deterministic SVG of 2-D data")
    common(p, out_default="")
    p.set_defaults(func=cmd_plot)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except (PerturbationError, StrictificationError) as e:
        return _fail("algorithmic", str(e), 2)
    except (FormatError, ValueError, KeyError, OSError) as e:
        return _fail("validation", str(e), 1)


if __name__ == "__main__":
    sys.exit(main())
