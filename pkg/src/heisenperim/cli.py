"""Command-line harness.

    python -m heisenperim dual --body ngon:6
    python -m heisenperim build --surface square-bubble --out sq.obj
    python -m heisenperim perimeter --surface cc-ball --body diamond --measure both
    python -m heisenperim table53
    python -m heisenperim bounds --surface pansu-bubble --body diamond

Exit codes: 0 success, 2 a computed value misses its tolerance, 3 invalid input.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .expr import ExpressionError, parse_field
from .heisenberg import sphere_sample
from .mesh import MeshError, TriMesh, read_obj, write_obj
from .perimeter import (
    ANTI, DEFAULT_RTOL, MINKOWSKI, BoundViolation, PerimeterMeasure, containment_bounds,
    content_estimate, iso_ratio, iso_report, sandwich_bounds, scaling_check, strong_approx,
)
from .planar import ConvexBody, GeometryError, in_circum_radii, polar_dual, read_polygon_file
from .quadrature import QuadratureError
from .surfaces import (
    Domain, GraphSurface, SlabSurface, build_pansu_bubble, build_polygonal_bubble,
    build_q_bubble_mesh, build_square_bubble, graph_from_field, volume,
)
from .variation import Bump, VariationError, first_variation, linearized_variation, switching_loci

EXIT_OK, EXIT_TOLERANCE, EXIT_INPUT = 0, 2, 3
MEASURES = {"mink": (MINKOWSKI,), "anti": (ANTI,), "both": (MINKOWSKI, ANTI)}
SHORT = {MINKOWSKI: "mink", ANTI: "anti"}
CENTER_SHIFT = 0.5  # bubbles join the identity to (0, 0, 1); built centred on z = 0

# reference ratios for Q = unit diamond, with relative tolerances
REFERENCE_RATIOS: Dict[str, Tuple[float, float, float]] = {
    "cc-ball": (0.308626, 0.154422, 0.01),
    "square-bubble": (0.284938, 0.379918, 0.005),
    "dual-bubble": (0.268642, 0.228175, 0.005),
    "pansu-bubble": (0.357117, 0.50504, 0.005),
}
PANSU_DISK = 3 ** 0.75 / (4 * math.sqrt(math.pi))
TABLE_ROWS = ("cc-ball", "square-bubble", "dual-bubble", "pansu-bubble")


class InputError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


@dataclass
class RunConfig:
    body: str = "diamond"
    surface: str = "square-bubble"
    measure: str = "both"
    rtol: float = DEFAULT_RTOL
    resolution: int = 256
    out: Optional[str] = None
    format: str = "csv"

    def __post_init__(self):
        if not (0 < self.rtol <= 0.1):
            raise InputError("rtol must lie in (0, 0.1]")
        if self.resolution < 16:
            raise InputError("resolution must be at least 16")
        if self.measure not in MEASURES:
            raise InputError(f"measure must be one of {sorted(MEASURES)}")


# --- parsing specs -----------------------------------------------------------------------


def parse_body(spec: str) -> ConvexBody:
    s = spec.strip()
    if s == "diamond":
        return ConvexBody.diamond()
    if s == "square":
        return ConvexBody.square()
    if s == "disk":
        return ConvexBody.disk(1.0)
    if s.startswith("ngon:"):
        try:
            k = int(s[5:])
        except ValueError:
            raise InputError(f"bad vertex count in {spec!r}") from None
        if k < 4 or k % 2:
            raise InputError("ngon needs an even vertex count of at least 4")
        return ConvexBody.regular(k)
    if s.startswith("file:"):
        return read_polygon_file(s[5:])
    raise InputError(f"unknown body {spec!r} (diamond|square|disk|ngon:k|file:path)")


GRAPH_DOMAIN = (-1.0, 1.0, -1.0, 1.0)


def parse_surface(spec: str, Q: ConvexBody, resolution: int):
    s = spec.strip()
    if s == "square-bubble":
        return build_square_bubble()
    if s in ("q-bubble", "dual-bubble"):
        B = Q if s == "q-bubble" else polar_dual(Q)
        return build_polygonal_bubble(B) if B.is_polygon else build_q_bubble_mesh(B, resolution)
    if s == "pansu-bubble":
        return build_pansu_bubble(resolution)
    if s == "cc-ball":
        return sphere_sample(Q, resolution)
    if s.startswith("graph:"):
        return graph_from_field(parse_field(s[6:]), Domain.rectangle(*GRAPH_DOMAIN), label=s)
    if s.startswith("mesh:"):
        return read_obj(s[5:])
    raise InputError(
        f"unknown surface {spec!r} "
        "(square-bubble|q-bubble|dual-bubble|pansu-bubble|cc-ball|graph:expr|mesh:path)"
    )


# --- output ------------------------------------------------------------------------------


def _csv(rows: Sequence[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


def _fmt(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return v


def _json(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=True, allow_nan=False) + "\n"


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        with open(out, "w", encoding="ascii") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _rel(a: float, b: float) -> float:
    return abs(a - b) / abs(b)


# --- commands ----------------------------------------------------------------------------


def cmd_dual(args) -> int:
    Q = parse_body(args.body)
    D = polar_dual(Q)
    if args.format == "json":
        doc = {"body": args.body, "dual": _body_doc(D)}
        _emit(_json(doc), args.out)
    else:
        if D.is_polygon:
            rows = [("x", "y")] + [(float(x) + 0.0, float(y) + 0.0) for x, y in D.vertices]
        else:
            rows = [("radius",), (float(D.radius),)]
        _emit(_csv(rows), args.out)
    return EXIT_OK


def _body_doc(B: ConvexBody) -> dict:
    if B.is_polygon:
        return {"kind": "polygon", "vertices": B.vertices.tolist(), "area": B.area}
    return {"kind": "disk", "radius": B.radius, "area": B.area}


def _mesh_of(surface, resolution: int) -> TriMesh:
    if isinstance(surface, TriMesh):
        return surface
    if isinstance(surface, SlabSurface):
        return surface.to_mesh(max(4, resolution // 16))
    if isinstance(surface, GraphSurface):
        return surface.to_mesh(resolution)
    raise InputError(f"cannot mesh {type(surface).__name__}")


def cmd_build(args) -> int:
    cfg = _config(args)
    Q = parse_body(cfg.body)
    S = parse_surface(cfg.surface, Q, cfg.resolution)
    bubble = cfg.surface.endswith("bubble")
    shift = CENTER_SHIFT if (bubble and args.convention == "origin") else 0.0
    summary = {"surface": cfg.surface, "body": cfg.body, "resolution": cfg.resolution}
    if isinstance(S, SlabSurface):
        summary.update(patches=len(S.top), walls=len(S.walls), volume=S.volume())
    if args.format == "json":
        if not isinstance(S, SlabSurface):
            raise InputError("json export is available for slab bubbles only; use obj")
        doc = S.to_dict()
        doc["z_shift_to_origin"] = CENTER_SHIFT
        doc["convention"] = args.convention
        _emit(_json(doc), cfg.out)
        return EXIT_OK
    m = _mesh_of(S, cfg.resolution)
    if shift:
        m = m.map_vertices(lambda P: P + np.array([0.0, 0.0, shift]))
    lo, hi = m.extent()
    summary.update(vertices=len(m.vertices), triangles=len(m.triangles), closed=bool(m.is_watertight()))
    if m.is_watertight():
        summary["mesh_volume"] = m.volume()
    if bubble:
        z0 = float(lo[2]) - shift
        z1 = float(hi[2]) - shift
        summary["z_range_centered"] = [z0, z1]
        summary["z_range_origin"] = [z0 + CENTER_SHIFT, z1 + CENTER_SHIFT]
    if args.format == "obj":
        if not cfg.out:
            sys.stdout.write(_obj_text(m, cfg))
        else:
            write_obj(m, cfg.out, comment=f"{cfg.surface} body={cfg.body} resolution={cfg.resolution}")
        sys.stderr.write(_json(summary))
    else:
        _emit(_json(summary), cfg.out)
    return EXIT_OK


def _obj_text(m: TriMesh, cfg: RunConfig) -> str:
    lines = [f"# {cfg.surface} body={cfg.body} resolution={cfg.resolution}"]
    lines += [f"v {x!r} {y!r} {z!r}" for x, y, z in m.vertices.tolist()]
    lines += [f"f {a + 1} {b + 1} {c + 1}" for a, b, c in m.triangles.tolist()]
    return "\n".join(lines) + "\n"


def _expected(surface: str, body: str, variant: str) -> Optional[Tuple[float, float]]:
    if body == "diamond" and surface in REFERENCE_RATIOS:
        mk, an, tol = REFERENCE_RATIOS[surface]
        return (mk if variant == MINKOWSKI else an), tol
    if body == "disk" and surface == "pansu-bubble":
        return PANSU_DISK, 0.005
    return None


def perimeter_rows(cfg: RunConfig):
    Q = parse_body(cfg.body)
    S = parse_surface(cfg.surface, Q, cfg.resolution)
    vol = volume(S)
    rows, ok = [], True
    for variant in MEASURES[cfg.measure]:
        est = content_estimate(PerimeterMeasure(Q, variant), S, cfg.rtol)
        ratio = iso_ratio(vol, est.value) if vol > 0 else math.nan
        row = {
            "surface": cfg.surface, "body": cfg.body, "measure": SHORT[variant],
            "resolution": cfg.resolution, "rtol": cfg.rtol, "volume": vol,
            "content": est.value, "ratio": ratio, "error": est.error, "converged": est.converged,
            "expected": None, "rel_error": None, "within_tol": None,
        }
        exp = _expected(cfg.surface, cfg.body, variant)
        if exp is not None:
            row["expected"] = exp[0]
            row["rel_error"] = _rel(ratio, exp[0])
            row["within_tol"] = row["rel_error"] <= exp[1]
            ok &= row["within_tol"]
        ok &= est.converged
        rows.append(row)
    return rows, ok


PERIM_COLS = (
    "surface", "body", "measure", "resolution", "rtol", "volume", "content", "ratio",
    "error", "converged", "expected", "rel_error", "within_tol",
)


def cmd_perimeter(args) -> int:
    cfg = _config(args)
    rows, ok = perimeter_rows(cfg)
    if cfg.format == "json":
        _emit(_json(_clean(rows)), cfg.out)
    else:
        _emit(_csv([PERIM_COLS] + [[("" if r[c] is None else r[c]) for c in PERIM_COLS] for r in rows]), cfg.out)
    return EXIT_OK if ok else EXIT_TOLERANCE


def _clean(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    return obj


def table53(resolution: int = 256, rtol: float = DEFAULT_RTOL) -> dict:
    """Ratios of the four comparison surfaces for the unit diamond, against the reference values."""
    Q = ConvexBody.diamond()
    rows = []
    for name in TABLE_ROWS:
        S = parse_surface(name, Q, resolution)
        rep = iso_report(Q, S, rtol, name, "diamond", resolution)
        pm, pa, tol = REFERENCE_RATIOS[name]
        em, ea = _rel(rep.ratio_mink, pm), _rel(rep.ratio_anti, pa)
        rows.append({
            "surface": name, "volume": rep.volume,
            "mink": rep.perimeter_mink, "anti": rep.perimeter_anti,
            "ratio_mink": rep.ratio_mink, "ref_mink": pm, "rel_mink": em, "ok_mink": em <= tol,
            "ratio_anti": rep.ratio_anti, "ref_anti": pa, "rel_anti": ea, "ok_anti": ea <= tol,
            "tolerance": tol, "converged": rep.notes["converged"],
            "error_mink": rep.notes["error_mink"], "error_anti": rep.notes["error_anti"],
        })
    verdict = {}
    for col in ("ratio_mink", "ratio_anti"):
        pansu = rows[-1][col]
        verdict[col] = all(pansu > r[col] for r in rows[:-1])
    return {"body": "diamond", "resolution": resolution, "rtol": rtol, "rows": rows, "pansu_maximal": verdict}


TABLE_COLS = (
    "surface", "volume", "mink", "anti", "ratio_mink", "ref_mink", "rel_mink", "ok_mink",
    "ratio_anti", "ref_anti", "rel_anti", "ok_anti", "tolerance", "converged",
)


def cmd_table53(args) -> int:
    cfg = _config(args)
    t = table53(cfg.resolution, cfg.rtol)
    ok = all(r["ok_mink"] and r["ok_anti"] and r["converged"] for r in t["rows"])
    ok &= all(t["pansu_maximal"].values())
    if cfg.format == "json":
        _emit(_json(_clean(t)), cfg.out)
    else:
        rows = [TABLE_COLS] + [[r[c] for c in TABLE_COLS] for r in t["rows"]]
        v = t["pansu_maximal"]
        rows.append(["verdict", "pansu_maximal_mink", v["ratio_mink"], "pansu_maximal_anti", v["ratio_anti"]])
        _emit(_csv(rows), cfg.out)
    return EXIT_OK if ok else EXIT_TOLERANCE


def bounds_report(cfg: RunConfig) -> dict:
    Q = parse_body(cfg.body)
    S = parse_surface(cfg.surface, Q, cfg.resolution)
    vol = volume(S)
    sw = sandwich_bounds(Q, S, cfg.rtol, vol)
    checks = {"sandwich": {**sw.__dict__, "holds": sw.holds}}
    scal = {}
    for variant in (MINKOWSKI, ANTI):
        a, b = scaling_check(Q, 2.0, S, cfg.rtol, variant)
        scal[SHORT[variant]] = {"scaled_body": a, "predicted": b, "rel": _rel(a, b), "holds": _rel(a, b) <= 4 * cfg.rtol}
    checks["scaling_r2"] = scal
    r, R = in_circum_radii(Q)
    cont = {}
    for name, (inner, outer) in {
        "inscribed_disk": (ConvexBody.disk(r), Q), "circumscribed_disk": (Q, ConvexBody.disk(R)),
    }.items():
        try:
            a, b = containment_bounds(inner, outer, S, cfg.rtol)
            cont[name] = {"inner": a, "outer": b, "holds": True}
        except BoundViolation as exc:
            cont[name] = {"holds": False, "reason": str(exc)}
    checks["containment"] = cont
    brackets = []
    for n in (2, 3, 4, 5):
        br = strong_approx(n, S, cfg.rtol, vol)
        brackets.append({"n": n, "R_n": br.R_n, "lower": br.lower, "upper": br.upper,
                         "width": br.width, "iso_disk": br.iso_disk, "contains": br.contains})
    checks["strong_approx"] = brackets
    checks["strong_approx_narrows"] = brackets[-1]["width"] < brackets[0]["width"]
    ok = (
        sw.holds and all(v["holds"] for v in scal.values()) and all(v["holds"] for v in cont.values())
        and all(b["contains"] for b in brackets) and checks["strong_approx_narrows"]
    )
    return {"surface": cfg.surface, "body": cfg.body, "resolution": cfg.resolution, "rtol": cfg.rtol,
            "volume": vol, "checks": checks, "all_hold": bool(ok)}


def cmd_bounds(args) -> int:
    cfg = _config(args)
    rep = bounds_report(cfg)
    if cfg.format == "json":
        _emit(_json(_clean(rep)), cfg.out)
    else:
        c = rep["checks"]
        rows = [("check", "lower", "value", "upper", "holds")]
        sw = c["sandwich"]
        rows.append(("sandwich_mink", sw["lower"], sw["iso_q"], sw["upper"], sw["holds"]))
        rows.append(("sandwich_anti", sw["anti_lower"], sw["aiso_q"], sw["anti_upper"], sw["holds"]))
        for k, v in c["scaling_r2"].items():
            rows.append((f"scaling_{k}", v["predicted"], v["scaled_body"], v["predicted"], v["holds"]))
        for k, v in c["containment"].items():
            rows.append((f"containment_{k}", v.get("inner", ""), "", v.get("outer", ""), v["holds"]))
        for b in c["strong_approx"]:
            rows.append((f"strong_approx_n{b['n']}", b["lower"], b["iso_disk"], b["upper"], b["contains"]))
        rows.append(("strong_approx_narrows", "", "", "", c["strong_approx_narrows"]))
        _emit(_csv(rows), cfg.out)
    return EXIT_OK if rep["all_hold"] else EXIT_TOLERANCE


def _graph_only(cfg: RunConfig) -> Tuple[ConvexBody, GraphSurface]:
    if not cfg.surface.startswith("graph:"):
        raise InputError("this command needs a graph:expr surface")
    Q = parse_body(cfg.body)
    return Q, parse_surface(cfg.surface, Q, cfg.resolution)


def cmd_loci(args) -> int:
    cfg = _config(args)
    Q, S = _graph_only(cfg)
    variants = MEASURES[cfg.measure]
    if len(variants) != 1:
        raise InputError("loci need a single measure (mink or anti)")
    B = PerimeterMeasure(Q, variants[0]).integrand_body
    loci = switching_loci(B, S, grid=max(cfg.resolution, 16))
    if cfg.format == "json":
        doc = [{"generator": list(L.generator), "polylines": [P.tolist() for P in L.polylines]} for L in loci]
        _emit(_json(doc), cfg.out)
    else:
        rows = [("a", "b", "polyline", "x", "y")]
        for L in loci:
            for k, P in enumerate(L.polylines):
                rows += [(L.generator[0], L.generator[1], k, float(x), float(y)) for x, y in P]
        _emit(_csv(rows), cfg.out)
    return EXIT_OK


def cmd_variation(args) -> int:
    cfg = _config(args)
    Q, S = _graph_only(cfg)
    try:
        cx, cy, r = (float(t) for t in args.bump.split(","))
    except ValueError:
        raise InputError("--bump expects cx,cy,radius") from None
    bump = Bump.smooth((cx, cy), r, S.domain)
    out = []
    for variant in MEASURES[cfg.measure]:
        M = PerimeterMeasure(Q, variant)
        out.append({
            "measure": SHORT[variant], "first_variation": first_variation(M, S, bump),
            "linearized": linearized_variation(M, S, bump),
        })
    doc = {"surface": cfg.surface, "body": cfg.body, "bump": [cx, cy, r], "results": out}
    _emit(_json(_clean(doc)), cfg.out)
    return EXIT_OK


# --- entry point -------------------------------------------------------------------------


def _config(args) -> RunConfig:
    return RunConfig(
        body=getattr(args, "body", "diamond"), surface=getattr(args, "surface", "square-bubble"),
        measure=getattr(args, "measure", "both"), rtol=getattr(args, "rtol", DEFAULT_RTOL),
        resolution=getattr(args, "resolution", 256), out=getattr(args, "out", None),
        format=getattr(args, "format", "csv"),
    )


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="heisenperim", description="Sub-Finsler perimeter in the Heisenberg group.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, surface=True, formats=("csv", "json"), default_format="csv"):
        sp.add_argument("--body", default="diamond", help="diamond|square|disk|ngon:k|file:path")
        if surface:
            sp.add_argument("--surface", default="square-bubble")
            sp.add_argument("--measure", default="both", choices=sorted(MEASURES))
            sp.add_argument("--rtol", type=float, default=DEFAULT_RTOL)
            sp.add_argument("--resolution", type=int, default=256)
        sp.add_argument("--out", default=None)
        sp.add_argument("--format", default=default_format, choices=formats)

    common(sub.add_parser("dual", help="polar dual of a body"), surface=False)
    b = sub.add_parser("build", help="build and export a surface")
    common(b, formats=("obj", "json"), default_format="obj")
    b.add_argument("--convention", default="centered", choices=("centered", "origin"))
    common(sub.add_parser("perimeter", help="contents and isoperimetric ratios"))
    t = sub.add_parser("table53", help="ratio table for the unit diamond")
    t.add_argument("--rtol", type=float, default=DEFAULT_RTOL)
    t.add_argument("--resolution", type=int, default=256)
    t.add_argument("--out", default=None)
    t.add_argument("--format", default="csv", choices=("csv", "json"))
    common(sub.add_parser("bounds", help="sandwich, scaling, containment and approximation checks"), formats=("csv", "json"))
    common(sub.add_parser("loci", help="switching loci of a graph surface"))
    v = sub.add_parser("variation", help="first variation of a graph surface under a bump")
    common(v, formats=("json",), default_format="json")
    v.add_argument("--bump", default="0,0,0.5", help="cx,cy,radius")
    return p


COMMANDS = {
    "dual": cmd_dual, "build": cmd_build, "perimeter": cmd_perimeter, "table53": cmd_table53,
    "bounds": cmd_bounds, "loci": cmd_loci, "variation": cmd_variation,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (InputError, GeometryError, ExpressionError, MeshError, OSError) as exc:
        sys.stderr.write(f"heisenperim: invalid input: {exc}\n")
        return EXIT_INPUT
    except (QuadratureError, VariationError, BoundViolation) as exc:
        sys.stderr.write(f"heisenperim: tolerance failure: {exc}\n")
        return EXIT_TOLERANCE
