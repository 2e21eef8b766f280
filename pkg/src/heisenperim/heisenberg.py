"""Heisenberg group in exponential coordinates, horizontal lifts, CC geodesics.

Group law::

    (x1, y1, z1) * (x2, y2, z2) = (x1 + x2, y1 + y2, z1 + z2 + (x1 y2 - x2 y1) / 2)

which makes ``X = d/dx - (y/2) d/dz`` and ``Y = d/dy + (x/2) d/dz`` left
invariant.  A planar curve lifts to the horizontal curve whose height is the
signed area swept by the position vector.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from .mesh import MeshError, TriMesh, boundary_loops, compact
from .planar import (
    ConvexBody,
    GeometryError,
    PlanarCurve,
    isoperimetrix,
    norm_eval,
)

LIFT_TOL = 1e-9


@dataclass(frozen=True)
class HPoint:
    x: float
    y: float
    z: float

    def __post_init__(self):
        for v in (self.x, self.y, self.z):
            if not math.isfinite(v):
                raise ValueError("HPoint coordinates must be finite")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    @classmethod
    def of(cls, p) -> "HPoint":
        x, y, z = (float(t) for t in p)
        return cls(x, y, z)


IDENTITY = HPoint(0.0, 0.0, 0.0)


def group_mul(p: HPoint, q: HPoint) -> HPoint:
    return HPoint(p.x + q.x, p.y + q.y, p.z + q.z + 0.5 * (p.x * q.y - q.x * p.y))


def inverse(p: HPoint) -> HPoint:
    return HPoint(-p.x, -p.y, -p.z)


def dilate(s: float, p: HPoint) -> HPoint:
    if not s > 0:
        raise ValueError("dilation factor must be positive")
    return HPoint(s * p.x, s * p.y, s * s * p.z)


def mul_points(p, Q: np.ndarray) -> np.ndarray:
    """Left-translate an (n, 3) array of points by ``p``."""
    p = np.asarray(p, float)
    Q = np.asarray(Q, float)
    out = Q + p
    out[:, 2] += 0.5 * (p[0] * Q[:, 1] - Q[:, 0] * p[1])
    return out


def dilate_points(s: float, P: np.ndarray) -> np.ndarray:
    if not s > 0:
        raise ValueError("dilation factor must be positive")
    P = np.array(P, dtype=float)
    P[:, :2] *= s
    P[:, 2] *= s * s
    return P


def horizontal_frame(p) -> np.ndarray:
    """Rows X(p), Y(p) as vectors in R^3."""
    x, y = float(p[0]), float(p[1])
    return np.array([[1.0, 0.0, -0.5 * y], [0.0, 1.0, 0.5 * x]])


def horizontal_projection(points: np.ndarray, normals: np.ndarray) -> np.ndarray:
    """``[[1, 0, -y/2], [0, 1, x/2]] n`` row-wise."""
    P = np.asarray(points, float)
    N = np.asarray(normals, float)
    return np.stack([N[:, 0] - 0.5 * P[:, 1] * N[:, 2], N[:, 1] + 0.5 * P[:, 0] * N[:, 2]], axis=1)


@dataclass(frozen=True)
class HorizontalPath:
    planar: PlanarCurve
    heights: np.ndarray
    z0: float = 0.0

    def __post_init__(self):
        h = np.array(self.heights, dtype=float)
        if h.shape != (len(self.planar.samples),):
            raise ValueError("one height per planar sample")
        h.setflags(write=False)
        object.__setattr__(self, "heights", h)
        if abs(h[0] - self.z0) > LIFT_TOL:
            raise ValueError("first height must equal z0")
        r = self.residuals()
        if len(r) and r.max() > LIFT_TOL * max(1.0, np.abs(h).max()):
            raise ValueError(f"path is not horizontal (lift residual {r.max():.2e})")

    def residuals(self) -> np.ndarray:
        P = self.planar.samples
        dz = np.diff(self.heights)
        swept = 0.5 * (P[:-1, 0] * P[1:, 1] - P[:-1, 1] * P[1:, 0])
        return np.abs(dz - swept)

    @property
    def points(self) -> np.ndarray:
        return np.column_stack([self.planar.samples, self.heights])

    @property
    def start(self) -> HPoint:
        return HPoint.of(self.points[0])

    @property
    def end(self) -> HPoint:
        return HPoint.of(self.points[-1])

    def translated(self, g: HPoint) -> "HorizontalPath":
        """Left translate by ``g`` (stays horizontal)."""
        P = mul_points(g.as_array(), self.points)
        return HorizontalPath(PlanarCurve(P[:, :2]), P[:, 2], float(P[0, 2]))

    def length(self, Q: ConvexBody) -> float:
        return float(np.sum(norm_eval(Q, np.diff(self.planar.samples, axis=0))))


def lift_path(curve: PlanarCurve, z0: float = 0.0) -> HorizontalPath:
    """Horizontal lift; for a closed curve the returned path repeats the first sample at the end."""
    P = np.asarray(curve.samples, float)
    if curve.closed:
        P = np.vstack([P, P[:1]])
    swept = 0.5 * (P[:-1, 0] * P[1:, 1] - P[:-1, 1] * P[1:, 0])
    z = z0 + np.concatenate([[0.0], np.cumsum(swept)])
    return HorizontalPath(PlanarCurve(P), z, float(z0))


# --- discretised isoperimetrix -----------------------------------------------------------


@dataclass(frozen=True)
class IsoNodes:
    """Nodes on a closed discretisation of the isoperimetrix boundary.

    ``sigma`` is cumulative ``||.||_Q`` length (``sigma[0] = 0``), ``perimeter``
    the total, ``is_vertex`` marks polygon corners.
    """

    body: ConvexBody
    nodes: np.ndarray
    sigma: np.ndarray
    perimeter: float
    area: float
    is_vertex: np.ndarray

    @property
    def count(self) -> int:
        return len(self.nodes)

    def unrolled(self, length: int):
        """Nodes, lengths and prefix cross sums for indices ``0..length-1`` (wrapping)."""
        N = self.count
        idx = np.arange(length)
        pts = self.nodes[idx % N]
        sg = self.sigma[idx % N] + (idx // N) * self.perimeter
        cr = pts[:-1, 0] * pts[1:, 1] - pts[:-1, 1] * pts[1:, 0]
        pre = np.concatenate([[0.0], np.cumsum(cr)])
        return pts, sg, pre


def iso_nodes(Q: ConvexBody, resolution: int, normalize: str = "area") -> IsoNodes:
    """Discretise ``dI`` with about ``resolution`` nodes.

    ``normalize='area'`` gives the unit-area isoperimetrix, ``'perimeter'`` the
    one of unit ``||.||_Q`` length.  Polygon corners are always nodes.
    """
    if resolution < 4:
        raise GeometryError("resolution too coarse")
    I = isoperimetrix(Q, 1.0)
    if I.is_polygon:
        V = I.vertices
        k = len(V)
        m = max(1, int(round(resolution / k)))
        t = np.arange(m) / m
        E = np.roll(V, -1, axis=0) - V
        nodes = (V[:, None, :] + t[None, :, None] * E[:, None, :]).reshape(-1, 2)
        is_vertex = np.tile(np.arange(m) == 0, k)
    else:
        th = 2 * np.pi * np.arange(resolution) / resolution
        nodes = np.stack([np.cos(th), np.sin(th)], axis=1)
        is_vertex = np.zeros(resolution, dtype=bool)
    seg = np.roll(nodes, -1, axis=0) - nodes
    lens = norm_eval(Q, seg)
    area = 0.5 * float(np.sum(nodes[:, 0] * np.roll(nodes[:, 1], -1) - np.roll(nodes[:, 0], -1) * nodes[:, 1]))
    per = float(np.sum(lens))
    if normalize == "area":
        s = 1.0 / math.sqrt(area)
    elif normalize == "perimeter":
        s = 1.0 / per
    else:
        raise ValueError("normalize must be 'area' or 'perimeter'")
    nodes = nodes * s
    lens = lens * s
    sigma = np.concatenate([[0.0], np.cumsum(lens)[:-1]])
    return IsoNodes(Q, nodes, sigma, per * s, area * s * s, is_vertex)


def _chord_area(pts, pre, a, b):
    """Signed area between the arc ``a..b`` and the chord closing it."""
    return 0.5 * (pre[b] - pre[a] + (pts[b, 0] * pts[a, 1] - pts[b, 1] * pts[a, 0]))


@dataclass(frozen=True)
class GeodesicSpec:
    """Subarc of ``scale * dI`` (unit-area ``I``) starting at ``start``, of ``||.||_Q`` length ``span``."""

    body: ConvexBody
    scale: float
    start: Tuple[float, float]
    span: float
    resolution: int = 512

    def __post_init__(self):
        if not self.scale > 0:
            raise GeometryError("scale must be positive")
        if not self.span >= 0:
            raise GeometryError("span must be nonnegative")
        iso = iso_nodes(self.body, self.resolution)
        P = iso.nodes * self.scale
        d = _dist_to_polyline(np.asarray(self.start, float), P)
        if d > 1e-9 * max(1.0, self.scale):
            raise GeometryError(f"start point is off the scaled isoperimetrix (distance {d:.2e})")


def _dist_to_polyline(p: np.ndarray, P: np.ndarray) -> float:
    A = P
    B = np.roll(P, -1, axis=0)
    E = B - A
    t = np.clip(np.einsum("ij,ij->i", p - A, E) / np.einsum("ij,ij->i", E, E), 0.0, 1.0)
    return float(np.min(np.hypot(*(A + t[:, None] * E - p).T)))


def _locate(p: np.ndarray, P: np.ndarray) -> Tuple[int, float]:
    A = P
    E = np.roll(P, -1, axis=0) - P
    t = np.clip(np.einsum("ij,ij->i", p - A, E) / np.einsum("ij,ij->i", E, E), 0.0, 1.0)
    d = np.hypot(*(A + t[:, None] * E - p).T)
    i = int(np.argmin(d))
    return i, float(t[i])


def cc_geodesic(spec: GeodesicSpec) -> HorizontalPath:
    """Lift of the subarc, translated to start at the identity."""
    iso = iso_nodes(spec.body, spec.resolution)
    P = iso.nodes * spec.scale
    per = iso.perimeter * spec.scale
    if spec.span > per * (1 + 1e-12):
        raise GeometryError("span exceeds one full loop of the isoperimetrix")
    p0 = np.asarray(spec.start, float)
    i, t = _locate(p0, P)
    N = len(P)
    seglen = norm_eval(spec.body, np.roll(P, -1, axis=0) - P)
    pts = [p0]
    remaining = spec.span
    # first partial edge
    k = i
    avail = (1 - t) * seglen[k]
    cur = p0
    while remaining > 1e-15 * per:
        nxt = P[(k + 1) % N]
        if avail >= remaining:
            frac = remaining / seglen[k]
            cur = cur + frac * (P[(k + 1) % N] - P[k])
            pts.append(cur)
            remaining = 0.0
            break
        pts.append(nxt)
        cur = nxt
        remaining -= avail
        k = (k + 1) % N
        avail = seglen[k]
    path = np.array(pts) - p0
    if len(path) == 1:
        path = np.vstack([path, path])
    return lift_path(PlanarCurve(path), 0.0)


def bubble_family(Q: ConvexBody, samples: int, resolution: int = 512) -> List[HorizontalPath]:
    """Full loops of the unit-area isoperimetrix through the identity, one per start point."""
    if samples < 1:
        raise ValueError("need at least one sample")
    iso = iso_nodes(Q, max(resolution, samples))
    N = iso.count
    starts = np.unique(np.floor(np.arange(samples) * N / samples).astype(int))
    out = []
    for s in starts:
        loop = np.roll(iso.nodes, -s, axis=0) - iso.nodes[s]
        out.append(lift_path(PlanarCurve(loop, closed=True), 0.0))
    return out


# --- metric sphere -----------------------------------------------------------------------


def sphere_sample(Q: ConvexBody, resolution: int = 256, radius: float = 1.0) -> TriMesh:
    """Closed mesh of the CC sphere of given radius about the identity.

    Every endpoint of a unit-length geodesic from the identity is the endpoint
    of a subarc of a dilate of ``dI``.  On the unit-perimeter isoperimetrix an
    arc of ``||.||_Q`` length ``phi`` and chord ``c`` sweeping area ``A`` gives the
    sphere point ``(c / phi, A / phi**2)``.  For polygons, arcs that round fewer
    than two corners collapse onto ``dQ`` and are replaced by vertical walls.
    The lower half is the mirror image in ``z``.
    """
    if resolution < 16:
        raise MeshError("resolution too coarse to close the sphere mesh (need >= 16)")
    iso = iso_nodes(Q, resolution, normalize="perimeter")
    N = iso.count
    pts, sg, pre = iso.unrolled(2 * N + 2)
    polygon = Q.is_polygon

    # vertex grid (a, k): arc from node a to node a + k
    a = np.arange(N)[:, None]
    k = np.arange(1, N)[None, :]
    b = a + k
    phi = sg[b] - sg[a]
    chord = pts[b] - pts[a]
    area = _chord_area(pts, pre, a, b)
    grid = np.concatenate([chord / phi[..., None], (area / phi ** 2)[..., None]], axis=-1)

    # ids: (a, k) for k in 1..N-1 -> a * N + k ; equator row k = 0 -> a * N ; pole -> N * N
    V = np.zeros((N * N + 1, 3))
    V[(a * N + k).ravel()] = grid.reshape(-1, 3)
    if not polygon:
        th = 2 * np.pi * np.arange(N) / N
        V[np.arange(N) * N] = np.stack([-np.sin(th), np.cos(th), 0 * th], axis=1) * Q.radius
    V[N * N] = [0.0, 0.0, iso.area]
    pole = N * N

    def vid(aa, kk):
        aa = np.asarray(aa) % N
        kk = np.asarray(kk)
        return np.where(kk >= N, pole, aa * N + kk)

    A, K = np.meshgrid(np.arange(N), np.arange(1, N), indexing="ij")
    A = A.ravel()
    K = K.ravel()
    keep = np.ones(len(A), dtype=bool)
    if polygon:
        vcount = np.concatenate([[0], np.cumsum(iso.is_vertex[np.arange(2 * N + 2) % N])])
        keep = (vcount[A + K + 1] - vcount[A + 1]) >= 2
    A, K = A[keep], K[keep]
    p00, p10, p11, p01 = vid(A, K), vid(A + 1, K - 1), vid(A + 1, K), vid(A, K + 1)
    tris = [np.stack([p00, p10, p11], 1), np.stack([p00, p11, p01], 1)]
    if not polygon:
        aa = np.arange(N)
        tris.append(np.stack([aa * N, ((aa + 1) % N) * N, vid(aa, 1)], 1))
    T = np.concatenate(tris)
    Vt, Tt = compact(V, T)

    loops = boundary_loops(Tt)
    if len(loops) != 1:
        raise MeshError(f"upper sheet boundary has {len(loops)} loops; raise the resolution")
    loop = loops[0]

    # mirror, welding boundary vertices that lie on z = 0
    nv = len(Vt)
    Vb = Vt.copy()
    Vb[:, 2] *= -1
    mirror = np.arange(nv) + nv
    flat = np.abs(Vt[loop, 2]) <= 1e-12 * max(1.0, float(np.abs(Vt[:, 2]).max()))
    mirror[loop[flat]] = loop[flat]
    Tb = mirror[Tt][:, ::-1]
    t_i = loop
    t_j = np.roll(loop, -1)
    b_i = mirror[t_i]
    b_j = mirror[t_j]
    walls = np.concatenate([np.stack([t_j, t_i, b_i], 1), np.stack([t_j, b_i, b_j], 1)])
    Vall, Tall = compact(np.vstack([Vt, Vb]), np.concatenate([Tt, Tb, walls]))
    mesh = TriMesh(Vall, Tall, closed=False)
    if not mesh.is_watertight():
        raise MeshError("sphere mesh failed to close; raise the resolution")
    if mesh.volume() < 0:
        mesh = mesh.flipped()
    mesh = TriMesh(mesh.vertices, mesh.triangles, closed=True)
    if radius != 1.0:
        mesh = mesh.map_vertices(lambda P: dilate_points(radius, P))
    return mesh


def sphere_wall_profile(Q: ConvexBody, u: np.ndarray, edge: int) -> np.ndarray:
    """Upper height of the unit sphere over the point ``v_k + u (v_{k+1} - v_k)`` of ``dQ``."""
    V = Q.vertices
    v0, v1 = V[edge], V[(edge + 1) % len(V)]
    cr = v0[0] * v1[1] - v0[1] * v1[0]
    u = np.asarray(u, float)
    return 0.5 * u * (1 - u) * cr

