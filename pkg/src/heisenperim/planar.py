"""Planar normed geometry: convex bodies, norms, support functions, arclength.

A :class:`ConvexBody` is either a centrally symmetric convex polygon or a disk
centred at the origin.  For a body ``Q``

* ``norm_eval(Q, v)`` is the gauge ``inf{a : v in aQ}``;
* ``dual_norm_eval(Q, y)`` is the support function ``max_{x in Q} <x, y>``,
  i.e. the gauge of the polar body ``Q*``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np

TOL = 1e-9

ROT90 = np.array([[0.0, -1.0], [1.0, 0.0]])


class GeometryError(ValueError):
    """Invalid planar input (non-convex, asymmetric, degenerate...)."""


def _cross(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ConvexBody:
    """Centrally symmetric convex body: a polygon (CCW vertices) or a disk."""

    kind: str
    vertices: Optional[np.ndarray] = None
    radius: Optional[float] = None

    def __post_init__(self):
        if self.kind == "disk":
            if self.radius is None or not (self.radius > 0) or not math.isfinite(self.radius):
                raise GeometryError("disk radius must be positive and finite")
            return
        if self.kind != "polygon":
            raise GeometryError(f"unknown body kind {self.kind!r}")
        V = np.asarray(self.vertices, dtype=float)
        if V.ndim != 2 or V.shape[1] != 2 or len(V) < 4:
            raise GeometryError("polygon needs at least 4 planar vertices")
        if not np.all(np.isfinite(V)):
            raise GeometryError("polygon vertices must be finite")
        n = len(V)
        if n % 2:
            raise GeometryError("centrally symmetric polygon needs an even vertex count")
        edges = np.roll(V, -1, axis=0) - V
        turns = _cross(edges, np.roll(edges, -1, axis=0))
        if np.any(turns <= TOL):
            raise GeometryError(
                "polygon is not strictly convex and counterclockwise "
                f"(min edge cross product {turns.min():.3e})"
            )
        # vertex i must be antipodal to vertex i + n/2
        if np.max(np.abs(V + np.roll(V, -(n // 2), axis=0))) > TOL:
            raise GeometryError("polygon is not centrally symmetric about the origin")
        object.__setattr__(self, "vertices", _readonly(V))

    # constructors -----------------------------------------------------------
    @classmethod
    def polygon(cls, vertices) -> "ConvexBody":
        return cls("polygon", vertices=np.asarray(vertices, dtype=float))

    @classmethod
    def disk(cls, radius: float = 1.0) -> "ConvexBody":
        return cls("disk", radius=float(radius))

    @classmethod
    def diamond(cls, scale: float = 1.0) -> "ConvexBody":
        """Unit ball of the l1 norm."""
        return cls.polygon(scale * np.array([[1, 0], [0, 1], [-1, 0], [0, -1]], float))

    @classmethod
    def square(cls, scale: float = 1.0) -> "ConvexBody":
        """Unit ball of the l-infinity norm, ``[-1, 1]^2``."""
        return cls.polygon(scale * np.array([[1, -1], [1, 1], [-1, 1], [-1, -1]], float))

    @classmethod
    def regular(cls, k: int, circumradius: float = 1.0, phase: float = 0.0) -> "ConvexBody":
        """Regular ``k``-gon inscribed in the circle of given radius, first vertex at angle ``phase``."""
        if k < 4 or k % 2:
            raise GeometryError("regular body needs an even vertex count >= 4")
        t = phase + 2 * np.pi * np.arange(k) / k
        V = circumradius * np.stack([np.cos(t), np.sin(t)], axis=1)
        # symmetrize exactly so the antipodal check is not at the mercy of libm
        V[k // 2:] = -V[: k // 2]
        return cls.polygon(V)

    # basic properties -----------------------------------------------------------
    @property
    def is_polygon(self) -> bool:
        return self.kind == "polygon"

    @property
    def n_vertices(self) -> int:
        return 0 if self.vertices is None else len(self.vertices)

    @property
    def area(self) -> float:
        if not self.is_polygon:
            return math.pi * self.radius ** 2
        V = self.vertices
        return 0.5 * float(np.sum(_cross(V, np.roll(V, -1, axis=0))))

    def scaled(self, r: float) -> "ConvexBody":
        if r <= 0:
            raise GeometryError("scale factor must be positive")
        if self.is_polygon:
            return ConvexBody.polygon(r * self.vertices)
        return ConvexBody.disk(r * self.radius)

    def rotated90(self) -> "ConvexBody":
        if not self.is_polygon:
            return self
        return ConvexBody.polygon(self.vertices @ ROT90.T)

    def boundary(self, samples: int = 256) -> np.ndarray:
        """Closed boundary polyline (CCW, without repeated endpoint)."""
        if self.is_polygon:
            return np.array(self.vertices)
        t = 2 * np.pi * np.arange(samples) / samples
        return self.radius * np.stack([np.cos(t), np.sin(t)], axis=1)

    def contains(self, other: "ConvexBody", tol: float = 1e-12) -> bool:
        """``other`` is a subset of ``self`` (support-function comparison)."""
        dirs = _probe_directions(self, other)
        return bool(np.all(support(other, dirs) <= support(self, dirs) + tol))

    def contains_in_interior(self, other: "ConvexBody", tol: float = 1e-12) -> bool:
        dirs = _probe_directions(self, other)
        return bool(np.all(support(other, dirs) < support(self, dirs) - tol))

    def __eq__(self, other):
        if not isinstance(other, ConvexBody) or other.kind != self.kind:
            return NotImplemented if not isinstance(other, ConvexBody) else False
        if self.is_polygon:
            return self.vertices.shape == other.vertices.shape and bool(
                np.array_equal(self.vertices, other.vertices)
            )
        return self.radius == other.radius

    def __hash__(self):
        if self.is_polygon:
            return hash((self.kind, self.vertices.tobytes()))
        return hash((self.kind, self.radius))

    def __repr__(self):
        if self.is_polygon:
            return f"ConvexBody.polygon({self.vertices.tolist()!r})"
        return f"ConvexBody.disk({self.radius!r})"


def _probe_directions(*bodies: ConvexBody) -> np.ndarray:
    """Edge normals of the polygons plus a dense fan (covers disks)."""
    t = 2 * np.pi * np.arange(720) / 720
    dirs = [np.stack([np.cos(t), np.sin(t)], axis=1)]
    for b in bodies:
        if b.is_polygon:
            e = np.roll(b.vertices, -1, axis=0) - b.vertices
            dirs.append(np.stack([e[:, 1], -e[:, 0]], axis=1))
            dirs.append(b.vertices)
    return np.concatenate(dirs)


@dataclass(frozen=True)
class PlanarSegment:
    a: Tuple[float, float]
    b: Tuple[float, float]

    def __post_init__(self):
        a = np.asarray(self.a, float)
        b = np.asarray(self.b, float)
        if a.shape != (2,) or b.shape != (2,):
            raise GeometryError("segment endpoints must be planar points")
        if np.allclose(a, b, rtol=0.0, atol=0.0):
            raise GeometryError("segment endpoints coincide")
        object.__setattr__(self, "a", _readonly(a))
        object.__setattr__(self, "b", _readonly(b))

    @property
    def vector(self) -> np.ndarray:
        return self.b - self.a

    @property
    def length(self) -> float:
        return float(np.hypot(*self.vector))


@dataclass(frozen=True)
class PlanarCurve:
    """Polyline; when ``closed`` the last sample connects back to the first."""

    samples: np.ndarray
    closed: bool = False
    orientation: int = field(default=0, compare=False)

    def __post_init__(self):
        P = np.asarray(self.samples, dtype=float)
        if P.ndim != 2 or P.shape[1] != 2 or len(P) < 2:
            raise GeometryError("curve needs at least 2 planar samples")
        object.__setattr__(self, "samples", _readonly(P))
        if self.closed:
            a = 0.5 * float(np.sum(_cross(P, np.roll(P, -1, axis=0))))
            object.__setattr__(self, "orientation", int(np.sign(a)))

    def segments(self) -> np.ndarray:
        P = self.samples
        if self.closed:
            return np.roll(P, -1, axis=0) - P
        return np.diff(P, axis=0)


def support(Q: ConvexBody, y) -> np.ndarray:
    """Support function ``h_Q(y) = max_{x in Q} <x, y>``, vectorised over rows of ``y``."""
    y = np.asarray(y, dtype=float)
    if Q.is_polygon:
        from .kernels import support_max

        flat = np.ascontiguousarray(y.reshape(-1, 2))
        return support_max(flat, Q.vertices).reshape(y.shape[:-1])
    return Q.radius * np.hypot(y[..., 0], y[..., 1])


def dual_norm_eval(Q: ConvexBody, y):
    """Anti-norm ``||y||_{Q*}``; equals the support function of ``Q``."""
    out = support(Q, y)
    return float(out) if np.ndim(out) == 0 else out


def _dual_vertices(Q: ConvexBody) -> np.ndarray:
    """Vertices of ``Q*``: intersections of consecutive lines ``<v_i, y> = 1``."""
    V = Q.vertices
    W = np.roll(V, -1, axis=0)
    det = _cross(V, W)
    if np.any(det <= TOL):
        raise GeometryError("near-collinear vertices: polar dual is ill-conditioned")
    # solve [v_i; v_{i+1}] y = (1, 1)
    return np.stack([(W[:, 1] - V[:, 1]) / det, (V[:, 0] - W[:, 0]) / det], axis=1)


def norm_eval(Q: ConvexBody, v):
    """Gauge ``||v||_Q = inf{a : v in aQ}`` (support function of ``Q*``)."""
    v = np.asarray(v, dtype=float)
    if Q.is_polygon:
        from .kernels import support_max

        flat = np.ascontiguousarray(v.reshape(-1, 2))
        out = support_max(flat, _dual_vertices(Q)).reshape(v.shape[:-1])
        out = np.maximum(out, 0.0)
    else:
        out = np.hypot(v[..., 0], v[..., 1]) / Q.radius
    return float(out) if np.ndim(out) == 0 else out


def polar_dual(Q: ConvexBody) -> ConvexBody:
    """Polar body ``Q* = {y : <x, y> <= 1 for all x in Q}``."""
    if not Q.is_polygon:
        return ConvexBody.disk(1.0 / Q.radius)
    D = _dual_vertices(Q)
    n = len(D)
    # enforce exact antipodality against rounding in the solve
    D[n // 2:] = -D[: n // 2]
    return ConvexBody.polygon(D)


def bipolar_check(Q: ConvexBody, tol: float = 1e-9) -> ConvexBody:
    """Return ``Q**`` after asserting it reproduces ``Q`` up to vertex rotation."""
    QQ = polar_dual(polar_dual(Q))
    if not same_body(Q, QQ, tol):
        raise GeometryError("bipolar body differs from the original")
    return QQ


def same_body(A: ConvexBody, B: ConvexBody, tol: float = 1e-9) -> bool:
    """Equality up to cyclic relabelling of vertices."""
    if A.kind != B.kind:
        return False
    if not A.is_polygon:
        return abs(A.radius - B.radius) <= tol
    if A.n_vertices != B.n_vertices:
        return False
    for shift in range(B.n_vertices):
        if np.max(np.abs(A.vertices - np.roll(B.vertices, shift, axis=0))) <= tol:
            return True
    return False


def isoperimetrix(Q: ConvexBody, target_area: float = 1.0) -> ConvexBody:
    """Quarter-turn of ``Q*`` rescaled to enclose ``target_area``.

    Its boundary maximises enclosed area for a given ``||.||_Q`` length.
    """
    if target_area <= 0:
        raise GeometryError("target area must be positive")
    I = polar_dual(Q).rotated90()
    return I.scaled(math.sqrt(target_area / I.area))


def minkowski_length(Q: ConvexBody, curve: PlanarCurve) -> float:
    """Length of a polyline measured with ``||.||_Q``."""
    segs = curve.segments()
    return float(np.sum(norm_eval(Q, segs)))


def segment_content(Q: ConvexBody, L: PlanarSegment) -> float:
    """Minkowski content of a segment in the plane normed by ``Q``.

    The eps-neighbourhood ``L + eps Q`` has area ``eps |L| w + O(eps^2)`` with
    ``w`` the width of ``Q`` across ``L``, which gives ``|L| h_Q(n)`` for the
    unit normal ``n`` of ``L``.
    """
    v = L.vector
    n = np.array([-v[1], v[0]])  # |n| = |L|
    return float(support(Q, n))


def projection_content(Q: ConvexBody, L: PlanarSegment) -> float:
    """Same quantity via ``|Proj_{L-perp}(Q)| / 2 * |L|``."""
    u = L.vector / L.length
    nrm = np.array([-u[1], u[0]])
    if Q.is_polygon:
        p = Q.vertices @ nrm
        width = float(p.max() - p.min())
    else:
        width = 2 * Q.radius
    return 0.5 * width * L.length


def enclosed_area(curve: PlanarCurve) -> float:
    """Signed shoelace area, positive for counterclockwise traversal."""
    if not curve.closed:
        raise GeometryError("enclosed area needs a closed curve")
    P = curve.samples
    return 0.5 * float(np.sum(_cross(P, np.roll(P, -1, axis=0))))


def in_circum_radii(Q: ConvexBody) -> Tuple[float, float]:
    """Inradius and circumradius about the origin."""
    if not Q.is_polygon:
        return Q.radius, Q.radius
    V = Q.vertices
    E = np.roll(V, -1, axis=0) - V
    r = float(np.min(np.abs(_cross(V, E)) / np.hypot(E[:, 0], E[:, 1])))
    R = float(np.max(np.hypot(V[:, 0], V[:, 1])))
    return r, R


def unit_circle_curve(n: int, radius: float = 1.0) -> PlanarCurve:
    t = 2 * np.pi * np.arange(n) / n
    return PlanarCurve(radius * np.stack([np.cos(t), np.sin(t)], axis=1), closed=True)


def read_polygon_file(path) -> ConvexBody:
    """Plain text, one ``x y`` vertex per line, CCW, full symmetric list."""
    rows = []
    with open(path) as fh:
        for ln, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.replace(",", " ").split()
            if len(parts) != 2:
                raise GeometryError(f"{path}:{ln}: expected 'x y'")
            rows.append([float(parts[0]), float(parts[1])])
    return ConvexBody.polygon(np.array(rows))


def write_polygon_file(Q: ConvexBody, path) -> None:
    V = Q.vertices if Q.is_polygon else Q.boundary()
    with open(path, "w") as fh:
        for x, y in V:
            fh.write(f"{x:.17g} {y:.17g}\n")


def random_symmetric_polygon(rng: np.random.Generator, half: Optional[int] = None) -> ConvexBody:
    """Random centrally symmetric convex polygon with ``2 * half`` vertices."""
    if half is None:
        half = int(rng.integers(2, 7))
    while True:
        t = np.sort(rng.uniform(0.0, np.pi, size=half))
        r = rng.uniform(0.4, 1.6, size=half)
        P = np.stack([r * np.cos(t), r * np.sin(t)], axis=1)
        P = np.concatenate([P, -P])
        from scipy.spatial import ConvexHull

        try:
            hull = ConvexHull(P)
        except Exception:
            continue
        if len(hull.vertices) != len(P):
            continue
        V = P[hull.vertices]  # scipy returns CCW order in 2-D
        # rotate so vertex list starts with an antipodal pair layout
        k = len(V) // 2
        if np.max(np.abs(V + np.roll(V, -k, axis=0))) > 1e-12:
            continue
        E = np.roll(V, -1, axis=0) - V
        if np.min(_cross(E, np.roll(E, -1, axis=0))) <= 1e-6:
            continue
        return ConvexBody.polygon(V)


def regular_body_sequence(n: int) -> ConvexBody:
    """Regular ``2**n``-gon inscribed in the unit circle."""
    return ConvexBody.regular(2 ** n)


def polygon_from_spec(vertices: Sequence[Sequence[float]]) -> ConvexBody:
    return ConvexBody.polygon(np.asarray(vertices, dtype=float))
