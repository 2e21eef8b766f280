"""Minkowski and anti-Minkowski content of surfaces, and isoperimetric ratios.

For a metric body ``Q`` the content of a surface with unit normal ``n`` is

    integral of  h_B([[1, 0, -y/2], [0, 1, x/2]] n)  dsigma

where ``h_B`` is the support function of ``B = Q`` (Minkowski content) or of
``B = Q*`` (anti-Minkowski content, which is Minkowski content in ``d_{Q*}``).
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from . import kernels
from .heisenberg import horizontal_projection
from .mesh import TriMesh
from .planar import ConvexBody, GeometryError, in_circum_radii, norm_eval, polar_dual, support
from .quadrature import QuadResult, integrate, tensor_nodes
from .surfaces import GraphSurface, ImplicitSurface, SlabSurface, Wall, volume

MINKOWSKI = "minkowski"
ANTI = "anti_minkowski"
DEFAULT_RTOL = 1e-4


class PerimeterError(ValueError):
    pass


class CharacteristicPointError(PerimeterError):
    pass


class BoundViolation(AssertionError):
    pass


@dataclass(frozen=True)
class PerimeterMeasure:
    body: ConvexBody
    variant: str = MINKOWSKI

    def __post_init__(self):
        if self.variant not in (MINKOWSKI, ANTI):
            raise ValueError(f"variant must be {MINKOWSKI!r} or {ANTI!r}")

    @property
    def integrand_body(self) -> ConvexBody:
        """Body whose support function is the integrand norm."""
        return self.body if self.variant == MINKOWSKI else polar_dual(self.body)

    def other(self) -> "PerimeterMeasure":
        return PerimeterMeasure(self.body, ANTI if self.variant == MINKOWSKI else MINKOWSKI)


def minkowski(Q: ConvexBody) -> PerimeterMeasure:
    return PerimeterMeasure(Q, MINKOWSKI)


def anti_minkowski(Q: ConvexBody) -> PerimeterMeasure:
    return PerimeterMeasure(Q, ANTI)


def integrand_norm(measure: PerimeterMeasure, v):
    out = support(measure.integrand_body, v)
    return float(out) if np.ndim(out) == 0 else out


def _generic_norm(B: ConvexBody, v: np.ndarray) -> np.ndarray:
    """``h_B`` computed as the gauge of ``B*`` (no vertex shortcut on ``B``)."""
    if not B.is_polygon:
        return support(B, v)
    return norm_eval(polar_dual(B), v)


# --- graphs ------------------------------------------------------------------------------


def graph_content_result(
    measure: PerimeterMeasure,
    S: GraphSurface,
    rtol: float = DEFAULT_RTOL,
    keep_nodes: bool = False,
    generic: bool = False,
) -> QuadResult:
    B = measure.integrand_body
    norm = (lambda w: _generic_norm(B, w)) if generic else (lambda w: support(B, w))

    def fn(x, y):
        return norm(S.horizontal_integrand(x, y))

    return integrate(fn, S.domain.quads, rtol=rtol, keep_nodes=keep_nodes)


def graph_content(measure: PerimeterMeasure, S: GraphSurface, rtol: float = DEFAULT_RTOL) -> float:
    return graph_content_result(measure, S, rtol).value


# --- walls -------------------------------------------------------------------------------


def wall_content(measure: PerimeterMeasure, w: Wall) -> float:
    """Content of a vertical wall: support value of the unit normal times the area.

    The normal of a wall over ``L`` is horizontal and perpendicular to ``L``,
    so the integrand is constant on the wall.
    """
    return integrand_norm(measure, w.unit_normal) * w.area


def wall_content_tangent(measure: PerimeterMeasure, w: Wall) -> float:
    """Variant evaluating the integrand on the direction of ``L`` instead of its normal."""
    d = (w.b - w.a) / w.length
    return integrand_norm(measure, d) * w.area


# --- meshes ------------------------------------------------------------------------------


@dataclass
class MeshContent:
    value: float
    levels: int
    change: float
    degenerate: int
    converged: bool


def _bary_points(level: int) -> np.ndarray:
    """Centroids of the 4**level triangles of the 1:4 midpoint subdivision."""
    tris = np.array([[[1.0, 0, 0], [0, 1.0, 0], [0, 0, 1.0]]])
    for _ in range(level):
        a, b, c = tris[:, 0], tris[:, 1], tris[:, 2]
        ab, bc, ca = (a + b) / 2, (b + c) / 2, (c + a) / 2
        tris = np.concatenate([
            np.stack([a, ab, ca], 1), np.stack([ab, b, bc], 1),
            np.stack([ca, bc, c], 1), np.stack([ab, bc, ca], 1),
        ])
    return tris.mean(axis=1)


def _mesh_level(B: ConvexBody, m: TriMesh, good: np.ndarray, level: int, generic: bool = False) -> float:
    p0, p1, p2 = (p[good] for p in m.corners)
    bary = _bary_points(level)
    if generic:
        nA = 0.5 * np.cross(p1 - p0, p2 - p0)
        acc = np.zeros(len(p0))
        for l0, l1, l2 in bary:
            c = l0 * p0 + l1 * p1 + l2 * p2
            acc += _generic_norm(B, horizontal_projection(c, nA))
        return kernels.stable_sum(acc / len(bary))
    if B.is_polygon:
        vals = kernels.tri_contents(p0, p1, p2, bary, B.vertices, 0.0)
    else:
        vals = kernels.tri_contents(p0, p1, p2, bary, None, B.radius)
    return kernels.stable_sum(vals)


def mesh_content_result(
    measure: PerimeterMeasure, m: TriMesh, rtol: float = DEFAULT_RTOL, max_level: int = 4,
    min_level: int = 1,
) -> MeshContent:
    B = measure.integrand_body
    areas = m.areas
    scale = float(np.max(areas)) if len(areas) else 0.0
    good = areas > 1e-14 * max(scale, 1e-300)
    degenerate = int(np.sum(~good))
    prev = _mesh_level(B, m, good, 0)
    change = math.inf
    level = 0
    while level < max_level:
        level += 1
        cur = _mesh_level(B, m, good, level)
        change = abs(cur - prev)
        prev = cur
        if level >= min_level and change <= rtol * abs(cur):
            return MeshContent(cur, level, change, degenerate, True)
    return MeshContent(prev, level, change, degenerate, change <= rtol * abs(prev))


def mesh_content(measure: PerimeterMeasure, m: TriMesh, rtol: float = DEFAULT_RTOL) -> float:
    return mesh_content_result(measure, m, rtol).value


# --- slabs and dispatch ------------------------------------------------------------------


def slab_content(measure: PerimeterMeasure, s: SlabSurface, rtol: float = DEFAULT_RTOL) -> float:
    parts = [graph_content(measure, p.as_graph(), rtol) for p in s.top]
    parts += [graph_content(measure, p.as_graph(), rtol) for p in s.bottom]
    parts += [wall_content(measure, w) for w in s.walls]
    return math.fsum(parts)


def content(measure: PerimeterMeasure, surface, rtol: float = DEFAULT_RTOL, cell: float = 0.02) -> float:
    if isinstance(surface, SlabSurface):
        return slab_content(measure, surface, rtol)
    if isinstance(surface, TriMesh):
        return mesh_content(measure, surface, rtol)
    if isinstance(surface, GraphSurface):
        return graph_content(measure, surface, rtol)
    if isinstance(surface, ImplicitSurface):
        return mesh_content(measure, surface.to_mesh(cell), rtol)
    raise TypeError(f"unsupported surface {type(surface).__name__}")


@dataclass
class ContentEstimate:
    value: float
    error: float
    converged: bool


def content_estimate(measure: PerimeterMeasure, surface, rtol: float = DEFAULT_RTOL, cell: float = 0.02) -> ContentEstimate:
    """Content together with the refinement change reported by the integrator."""
    if isinstance(surface, ImplicitSurface):
        surface = surface.to_mesh(cell)
    if isinstance(surface, TriMesh):
        r = mesh_content_result(measure, surface, rtol)
        return ContentEstimate(r.value, r.change, r.converged)
    if isinstance(surface, GraphSurface):
        q = graph_content_result(measure, surface, rtol)
        return ContentEstimate(q.value, q.error, q.converged)
    if isinstance(surface, SlabSurface):
        parts = [graph_content_result(measure, p.as_graph(), rtol) for p in surface.top + surface.bottom]
        walls = [wall_content(measure, w) for w in surface.walls]
        return ContentEstimate(
            math.fsum([q.value for q in parts] + walls),
            math.fsum(q.error for q in parts),
            all(q.converged for q in parts),
        )
    raise TypeError(f"unsupported surface {type(surface).__name__}")


def polygonal_fast_content(measure: PerimeterMeasure, surface, rtol: float = DEFAULT_RTOL):
    """Vertex-max evaluation on the nodes chosen by the generic path.

    Returns ``(fast, generic)`` evaluated on identical quadrature nodes.
    """
    B = measure.integrand_body
    if not B.is_polygon:
        raise GeometryError("vertex-max evaluation needs a polygonal body")
    if isinstance(surface, GraphSurface):
        graphs = [surface]
    elif isinstance(surface, SlabSurface):
        graphs = [p.as_graph() for p in surface.top] + [p.as_graph() for p in surface.bottom]
    elif isinstance(surface, TriMesh):
        res = mesh_content_result(measure, surface, rtol)
        good = surface.areas > 1e-14 * float(np.max(surface.areas))
        fast = _mesh_level(B, surface, good, res.levels)
        gen = _mesh_level(B, surface, good, res.levels, generic=True)
        return fast, gen
    else:
        raise TypeError(f"unsupported surface {type(surface).__name__}")
    fast_parts, gen_parts = [], []
    for g in graphs:
        r = graph_content_result(measure, g, rtol, keep_nodes=True, generic=True)
        w = g.horizontal_integrand(r.nodes[:, 0], r.nodes[:, 1])
        fast_parts.append(kernels.stable_sum(r.weights * kernels.support_max(w, B.vertices)))
        gen_parts.append(kernels.stable_sum(r.weights * _generic_norm(B, w)))
    if isinstance(surface, SlabSurface):
        walls = [wall_content(measure, w) for w in surface.walls]
        fast_parts += walls
        gen_parts += walls
    return math.fsum(fast_parts), math.fsum(gen_parts)


# --- neighbourhood oracle ----------------------------------------------------------------


@dataclass
class OracleResult:
    value: float
    eps: List[float]
    quotients: List[float]


def _body_samples(Q: ConvexBody, n: int) -> np.ndarray:
    """Dense sample of ``Q``: boundary points and two inner rings."""
    if Q.is_polygon:
        V = Q.vertices
        W = np.roll(V, -1, axis=0)
        m = max(2, n // len(V))
        t = np.arange(m) / m
        ring = (V[:, None, :] + t[None, :, None] * (W - V)[:, None, :]).reshape(-1, 2)
    else:
        th = 2 * np.pi * np.arange(n) / n
        ring = Q.radius * np.stack([np.cos(th), np.sin(th)], axis=1)
    return np.concatenate([ring, 0.75 * ring, 0.5 * ring, np.zeros((1, 2))])


def neighborhood_oracle(
    Q: ConvexBody,
    S: GraphSurface,
    eps_list: Optional[Sequence[float]] = None,
    grid: int = 400,
    samples: int = 256,
) -> OracleResult:
    """Content from the growth of the region under the graph when thickened by ``eps Q``.

    The upper boundary of the thickening is approximately
    ``Z(x, y) = max_{(a, b) in Q} f(x - eps a, y - eps b) + (eps / 2)(x b - y a)``;
    the area-weighted excess ``(Z - f) / eps`` is extrapolated to ``eps -> 0``.
    """
    if eps_list is None:
        d = S.domain.diameter
        eps_list = [0.1 * d, 0.05 * d, 0.025 * d]
    eps_list = [float(e) for e in eps_list]
    if any(e <= 0 for e in eps_list) or any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise ValueError("eps values must be positive and decreasing")
    X, W = tensor_nodes(S.domain.quads, grid)
    x, y = X[:, 0], X[:, 1]
    f0 = np.asarray(S.f(x, y), float)
    A = _body_samples(Q, samples)
    quotients = []
    for eps in eps_list:
        Z = np.full(len(x), -np.inf)
        for a, b in A:
            v = np.asarray(S.f(x - eps * a, y - eps * b), float) + 0.5 * eps * (x * b - y * a)
            np.maximum(Z, v, out=Z)
        quotients.append(kernels.stable_sum((Z - f0) * W) / eps)
    # Richardson on a geometric eps ladder, assuming an expansion in powers of eps
    table = list(quotients)
    ratios = [eps_list[i] / eps_list[i + 1] for i in range(len(eps_list) - 1)]
    order = 1
    while len(table) > 1:
        table = [
            (ratios[i] ** order * table[i + 1] - table[i]) / (ratios[i] ** order - 1)
            for i in range(len(table) - 1)
        ]
        order += 1
    return OracleResult(table[0], eps_list, quotients)


# --- densities, ratios, reports ----------------------------------------------------------


def rn_density(Q: ConvexBody, point, normal, tol: float = 1e-12) -> float:
    """Density of the Minkowski content against the sub-Riemannian one at a surface point."""
    p = np.asarray(point, float).reshape(1, 3)
    n = np.asarray(normal, float).reshape(1, 3)
    n0 = horizontal_projection(p, n)[0]
    r = float(np.hypot(*n0))
    if r <= tol * max(1.0, float(np.linalg.norm(n))):
        raise CharacteristicPointError("projected normal vanishes (characteristic point)")
    return float(support(Q, n0)) / r


def iso_ratio(vol: float, perimeter: float) -> float:
    if not perimeter > 0:
        raise PerimeterError("perimeter must be positive")
    if vol < 0:
        raise PerimeterError("volume must be nonnegative")
    return vol ** 0.75 / perimeter


@dataclass
class IsoReport:
    volume: float
    perimeter_mink: float
    perimeter_anti: float
    ratio_mink: float
    ratio_anti: float
    surface: str = ""
    body: str = ""
    rtol: float = DEFAULT_RTOL
    resolution: Optional[int] = None
    notes: dict = field(default_factory=dict)

    CSV_HEADER = "surface,body,volume,mink,anti,ratio_mink,ratio_anti"

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=1, sort_keys=True)

    def to_csv_row(self) -> str:
        return (
            f"{self.surface},{self.body},{self.volume:.10g},{self.perimeter_mink:.10g},"
            f"{self.perimeter_anti:.10g},{self.ratio_mink:.10g},{self.ratio_anti:.10g}"
        )


def iso_report(
    Q: ConvexBody, surface, rtol: float = DEFAULT_RTOL, surface_name: str = "", body_name: str = "",
    resolution: Optional[int] = None,
) -> IsoReport:
    vol = volume(surface)
    mk = content_estimate(minkowski(Q), surface, rtol)
    an = content_estimate(anti_minkowski(Q), surface, rtol)
    notes = {
        "error_mink": mk.error, "error_anti": an.error,
        "converged": bool(mk.converged and an.converged),
    }
    return IsoReport(
        vol, mk.value, an.value, iso_ratio(vol, mk.value), iso_ratio(vol, an.value),
        surface_name, body_name, rtol, resolution, notes,
    )


# --- bounds ------------------------------------------------------------------------------


def scaling_check(Q: ConvexBody, r: float, surface, rtol: float = DEFAULT_RTOL, variant: str = MINKOWSKI):
    """``(content with body rQ, r * content with body Q)``."""
    if not r > 0:
        raise ValueError("scale must be positive")
    a = content(PerimeterMeasure(Q.scaled(r), variant), surface, rtol)
    b = r * content(PerimeterMeasure(Q, variant), surface, rtol) if variant == MINKOWSKI else (
        content(PerimeterMeasure(Q, variant), surface, rtol) / r
    )
    return a, b


def containment_bounds(Q1: ConvexBody, Q2: ConvexBody, surface, rtol: float = DEFAULT_RTOL):
    """Minkowski contents for nested bodies; raises if the ordering fails."""
    if not Q2.contains(Q1):
        raise GeometryError("first body must lie inside the second")
    a = content(minkowski(Q1), surface, rtol)
    b = content(minkowski(Q2), surface, rtol)
    slack = 4 * rtol * max(abs(a), abs(b))
    if a > b + slack:
        raise BoundViolation(f"content with the smaller body exceeds the larger one ({a} > {b})")
    if Q2.contains_in_interior(Q1) and not a < b + slack and b > 0:
        raise BoundViolation("nested interior bodies should give strictly ordered contents")
    return a, b


@dataclass
class Sandwich:
    r: float
    R: float
    iso_disk: float
    iso_q: float
    aiso_q: float
    lower: float
    upper: float
    anti_lower: float
    anti_upper: float

    @property
    def holds(self) -> bool:
        tol = 1e-3
        return (
            self.lower * (1 - tol) <= self.iso_q <= self.upper * (1 + tol)
            and self.anti_lower * (1 - tol) <= self.aiso_q <= self.anti_upper * (1 + tol)
        )


def sandwich_bounds(Q: ConvexBody, surface, rtol: float = DEFAULT_RTOL, vol: Optional[float] = None) -> Sandwich:
    """Bounds from ``r D <= Q <= R D``: ``Iso_D/R <= Iso_Q <= Iso_D/r`` and ``r Iso_D <= AIso_Q <= R Iso_D``."""
    r, R = in_circum_radii(Q)
    v = volume(surface) if vol is None else vol
    sd = content(minkowski(ConvexBody.disk(1.0)), surface, rtol)
    sq = content(minkowski(Q), surface, rtol)
    sa = content(anti_minkowski(Q), surface, rtol)
    iso_d = iso_ratio(v, sd)
    return Sandwich(r, R, iso_d, iso_ratio(v, sq), iso_ratio(v, sa), iso_d / R, iso_d / r, r * iso_d, R * iso_d)


@dataclass
class Bracket:
    n: int
    R_n: float
    lower: float
    upper: float
    iso_disk: float

    @property
    def width(self) -> float:
        return self.upper - self.lower

    @property
    def contains(self) -> bool:
        tol = 1e-3 * max(abs(self.iso_disk), 1e-300)
        return self.lower - tol <= self.iso_disk <= self.upper + tol


def regular_polygon_body(n: int) -> ConvexBody:
    return ConvexBody.regular(2 ** n)


def strong_approx(n: int, surface, rtol: float = DEFAULT_RTOL, vol: Optional[float] = None) -> Bracket:
    """Bracket for the sub-Riemannian ratio from the inscribed regular ``2**n``-gon."""
    if n < 2:
        raise ValueError("n must be at least 2")
    Qn = regular_polygon_body(n)
    Rn = 1.0 / math.cos(math.pi / 2 ** n)
    v = volume(surface) if vol is None else vol
    iso_q = iso_ratio(v, content(minkowski(Qn), surface, rtol))
    aiso_q = iso_ratio(v, content(anti_minkowski(Qn), surface, rtol))
    iso_d = iso_ratio(v, content(minkowski(ConvexBody.disk(1.0)), surface, rtol))
    lower = min(iso_q / Rn, aiso_q)
    upper = max(iso_q, Rn * aiso_q)
    return Bracket(n, Rn, lower, upper, iso_d)
