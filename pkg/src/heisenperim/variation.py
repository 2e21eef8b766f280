"""First variation of perimeter and the curves carrying the mean curvature.

For a polygonal integrand body ``B`` the graph integrand ``h_B(w)``, with
``w = (-y/2 - f_x, x/2 - f_y)``, is a maximum of linear forms.  The active
vertex changes where ``<e, w> = 0`` for an edge direction ``e = (a, b)`` of
``B``; on such a curve the first variation can concentrate.  Opposite edges
give the same curve, so each antipodal pair is handled once.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from . import kernels
from .planar import ConvexBody, GeometryError, same_body, support
from .perimeter import ANTI, MINKOWSKI, PerimeterMeasure
from .quadrature import bilinear, tensor_nodes
from .surfaces import Domain, GraphSurface


class VariationError(RuntimeError):
    pass


@dataclass(frozen=True)
class Bump:
    phi: Callable
    grad_phi: Callable
    domain: Domain
    support: Optional[Domain] = None  # region covering supp(phi); nodes go there when given

    def __post_init__(self):
        P = self.domain.boundary_samples(64)
        v = np.abs(np.asarray(self.phi(P[:, 0], P[:, 1]), float))
        if np.max(v) > 1e-12:
            raise GeometryError(f"bump does not vanish on the boundary (max {np.max(v):.2e})")

    @classmethod
    def smooth(cls, center, radius: float, domain: Domain, amplitude: float = 1.0) -> "Bump":
        """``amplitude * exp(1 - 1 / (1 - r^2))`` inside the disk, zero outside."""
        cx, cy = float(center[0]), float(center[1])
        R = float(radius)

        def phi(x, y):
            r2 = ((np.asarray(x) - cx) ** 2 + (np.asarray(y) - cy) ** 2) / R ** 2
            out = np.zeros(np.shape(r2))
            m = r2 < 1
            out[m] = amplitude * np.exp(1 - 1 / (1 - r2[m]))
            return out

        def grad(x, y):
            dx = np.asarray(x, float) - cx
            dy = np.asarray(y, float) - cy
            r2 = (dx ** 2 + dy ** 2) / R ** 2
            g = np.zeros(np.shape(r2))
            m = r2 < 1
            # d/dr2 of exp(1 - 1/(1-r2)) is -exp(...) / (1-r2)^2
            g[m] = -amplitude * np.exp(1 - 1 / (1 - r2[m])) / (1 - r2[m]) ** 2
            return 2 * g * dx / R ** 2, 2 * g * dy / R ** 2

        lo = domain.outline.min(axis=0)
        hi = domain.outline.max(axis=0)
        box = Domain.rectangle(
            max(cx - R, lo[0]), min(cx + R, hi[0]), max(cy - R, lo[1]), min(cy + R, hi[1]),
        )
        return cls(phi, grad, domain, box)

    @property
    def region(self) -> Domain:
        return self.domain if self.support is None else self.support


def _content_on(B: ConvexBody, S: GraphSurface, X: np.ndarray, W: np.ndarray) -> float:
    w = S.horizontal_integrand(X[:, 0], X[:, 1])
    return kernels.stable_sum(support(B, w) * W)


def first_variation(
    measure: PerimeterMeasure,
    S: GraphSurface,
    bump: Bump,
    h: float = 1e-2,
    grid: int = 256,
    rtol: float = 1e-5,
    h_min: float = 1e-10,
) -> float:
    """``d/de content(f + e phi)`` at ``e = 0`` by central differences.

    Both perturbed surfaces are integrated on the same fixed nodes so the
    quotient is not polluted by node placement.  ``h`` is divided by 4 until
    two successive quotients agree to ``rtol`` relative.  For a polygonal body
    each node's integrand is piecewise linear in ``e``, so the quotients become
    exact once ``h`` drops below the nearest switch; the small absolute floor
    only absorbs rounding when the variation itself is zero.
    """
    B = measure.integrand_body
    # outside supp(phi) both perturbed integrands coincide, so only the support is sampled
    X, W = tensor_nodes(bump.region.quads, grid)
    gphi = np.hypot(*bump.grad_phi(X[:, 0], X[:, 1]))
    scale = kernels.stable_sum(gphi * W)  # natural size of a variation
    base = _content_on(B, S, X, W)
    prev = None
    while h >= h_min:
        up = _content_on(B, S.perturbed(bump.phi, bump.grad_phi, h), X, W)
        dn = _content_on(B, S.perturbed(bump.phi, bump.grad_phi, -h), X, W)
        val = (up - dn) / (2 * h)
        # rounding in up - dn is a few ulps of the content
        floor = 1e-9 * scale + 64 * np.finfo(float).eps * abs(base) / h
        if prev is not None and abs(val - prev) <= rtol * abs(val) + floor:
            return val
        prev = val
        h /= 4
    raise VariationError("central differences did not settle before the step underflowed")


def linearized_variation(measure: PerimeterMeasure, S: GraphSurface, bump: Bump, grid: int = 256) -> float:
    """``-integral <grad h_B(w), grad phi>`` (valid where the active vertex is locally constant)."""
    B = measure.integrand_body
    X, W = tensor_nodes(bump.region.quads, grid)
    w = S.horizontal_integrand(X[:, 0], X[:, 1])
    if B.is_polygon:
        # on a switch the symmetric derivative averages the tied vertices
        vals = w @ B.vertices.T
        top = vals.max(axis=1, keepdims=True)
        tied = vals >= top - 1e-12 * np.maximum(1.0, np.abs(top))
        grad_h = (tied @ B.vertices) / tied.sum(axis=1, keepdims=True)
    else:
        n = np.hypot(w[:, 0], w[:, 1])
        grad_h = B.radius * w / np.where(n > 0, n, 1.0)[:, None]
    px, py = bump.grad_phi(X[:, 0], X[:, 1])
    return kernels.stable_sum(-(grad_h[:, 0] * px + grad_h[:, 1] * py) * W)


# --- switching loci ----------------------------------------------------------------------


@dataclass(frozen=True)
class SwitchingLocus:
    polylines: Tuple[np.ndarray, ...]
    generator: Tuple[float, float]

    def residual(self, S: GraphSurface) -> float:
        a, b = self.generator
        if not self.polylines:
            return 0.0
        P = np.vstack(self.polylines)
        return float(np.max(np.abs(switching_function(S, a, b, P[:, 0], P[:, 1]))))

    def to_csv(self) -> str:
        rows = ["locus,polyline,x,y"]
        for k, P in enumerate(self.polylines):
            for x, y in P:
                rows.append(f"{self.generator[0]:.12g}:{self.generator[1]:.12g},{k},{x:.12g},{y:.12g}")
        return "\n".join(rows) + "\n"


def switching_function(S: GraphSurface, a: float, b: float, x, y) -> np.ndarray:
    """``a f_x + b f_y + (a y - b x) / 2``, i.e. ``-<(a, b), w>``."""
    fx, fy = S.grad(x, y)
    return a * np.asarray(fx) + b * np.asarray(fy) + 0.5 * (a * np.asarray(y) - b * np.asarray(x))


def curvature_factor(S: GraphSurface, a: float, b: float, x, y) -> np.ndarray:
    """Second derivative of ``f`` along ``(a, b)``; the locus carries curvature only where it is nonzero."""
    fxx, fxy, fyy = S.hess_f(x, y)
    return a * a * np.asarray(fxx) + 2 * a * b * np.asarray(fxy) + b * b * np.asarray(fyy)


def edge_generators(B: ConvexBody) -> List[Tuple[float, float]]:
    """Unit edge directions of ``B``, one per antipodal edge pair."""
    if not B.is_polygon:
        raise GeometryError("switching loci need a polygonal body")
    V = B.vertices
    E = np.roll(V, -1, axis=0) - V
    half = len(V) // 2
    out = []
    for e in E[:half]:
        e = e / np.hypot(*e)
        out.append((float(e[0]), float(e[1])))
    return out


def switching_loci(
    B: ConvexBody, S: GraphSurface, grid: int = 512, tol: float = 1e-9,
) -> List[SwitchingLocus]:
    """Zero sets of the switching functions of ``B`` over the (rectangular hull of the) domain.

    ``B`` is the integrand body (``Q`` for Minkowski content, ``Q*`` for
    anti-Minkowski content).  Runs where the curvature factor vanishes are
    dropped.
    """
    from skimage.measure import find_contours

    if S.hess_f is None:
        raise GeometryError("switching loci need the Hessian of f")
    lo = S.domain.outline.min(axis=0)
    hi = S.domain.outline.max(axis=0)
    xs = np.linspace(lo[0], hi[0], grid)
    ys = np.linspace(lo[1], hi[1], grid)
    Xg, Yg = np.meshgrid(xs, ys, indexing="ij")
    dx = (hi[0] - lo[0]) / (grid - 1)
    dy = (hi[1] - lo[1]) / (grid - 1)
    out = []
    for a, b in edge_generators(B):
        G = switching_function(S, a, b, Xg, Yg)
        lines = []
        if np.nanmin(G) <= 0 <= np.nanmax(G) and np.ptp(G) > 0:
            for C in find_contours(G, 0.0):
                P = np.column_stack([lo[0] + C[:, 0] * dx, lo[1] + C[:, 1] * dy])
                c = np.abs(curvature_factor(S, a, b, P[:, 0], P[:, 1]))
                for run in _runs(c > tol):
                    if run.stop - run.start >= 2:
                        lines.append(P[run])
        out.append(SwitchingLocus(tuple(lines), (a, b)))
    return out


def _runs(mask: np.ndarray) -> List[slice]:
    runs, start = [], None
    for i, m in enumerate(mask):
        if m and start is None:
            start = i
        elif not m and start is not None:
            runs.append(slice(start, i))
            start = None
    if start is not None:
        runs.append(slice(start, len(mask)))
    return runs


def fit_line(P: np.ndarray) -> Tuple[float, float, float]:
    """Total-least-squares line through points: ``(slope, offset at x = 0, max deviation)``."""
    c = P.mean(axis=0)
    _, _, vt = np.linalg.svd(P - c)
    d = vt[0]
    nrm = np.array([-d[1], d[0]])
    dev = float(np.max(np.abs((P - c) @ nrm)))
    if abs(d[0]) < 1e-15:
        return math.inf, math.nan, dev
    slope = d[1] / d[0]
    return float(slope), float(c[1] - slope * c[0]), dev


# --- square / diamond shortcut -----------------------------------------------------------


def linf_simplified_content(measure: PerimeterMeasure, S: GraphSurface, X=None, W=None) -> float:
    """Closed-form integrand when the integrand body is the unit square or the unit diamond.

    Square: ``|u| + |v|``.  Diamond: ``(|u| + |v| + ||u| - |v||) / 2``.  Here
    ``(u, v) = (F_x - (y/2) F_z, F_y + (x/2) F_z)`` with ``F = f - z`` up to sign.
    """
    B = measure.integrand_body
    if same_body(B, ConvexBody.square()):
        form = "sum"
    elif same_body(B, ConvexBody.diamond()):
        form = "max"
    else:
        raise GeometryError("closed form needs the unit square or unit diamond as integrand body")
    if X is None:
        X, W = tensor_nodes(S.domain.quads, 256)
    w = S.horizontal_integrand(X[:, 0], X[:, 1])
    u, v = np.abs(w[:, 0]), np.abs(w[:, 1])
    val = u + v if form == "sum" else 0.5 * (u + v + np.abs(u - v))
    return kernels.stable_sum(val * W)
