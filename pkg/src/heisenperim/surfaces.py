"""Surface carriers and the bubble-set builders.

* :class:`GraphSurface` is ``z = f(x, y)`` over a planar domain.
* :class:`ImplicitSurface` is ``F = 0`` inside a box, meshed by marching cubes.
* :class:`SlabSurface` is ``{|z| <= f(x, y)}`` over a planar region, with
  ``f`` piecewise quadratic on quadrilaterals and vertical walls on the rim.

Bubble sets are returned in centred form, i.e. translated by ``(0, 0, -1/2)``
so that they are symmetric under ``z -> -z``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .heisenberg import horizontal_projection, iso_nodes
from .mesh import MeshError, TriMesh, compact, edge_report
from .planar import ConvexBody, GeometryError, isoperimetrix
from .quadrature import gauss_nodes, integrate, quad_area

ArrayFn = Callable[[np.ndarray, np.ndarray], np.ndarray]


# --- planar domains ----------------------------------------------------------------------


@dataclass(frozen=True)
class Domain:
    """Union of quadrilaterals (bilinear order p00, p10, p11, p01)."""

    quads: np.ndarray
    outline: np.ndarray

    @classmethod
    def rectangle(cls, x0: float, x1: float, y0: float, y1: float) -> "Domain":
        if not (x1 > x0 and y1 > y0):
            raise GeometryError("empty rectangle")
        q = np.array([[[x0, y0], [x1, y0], [x1, y1], [x0, y1]]], float)
        return cls(q, q[0].copy())

    @classmethod
    def quad(cls, corners) -> "Domain":
        c = np.asarray(corners, float).reshape(4, 2)
        return cls(c[None], c.copy())

    @classmethod
    def polygon(cls, vertices) -> "Domain":
        """Convex polygon, fanned from its centroid into degenerate quadrilaterals."""
        V = np.asarray(vertices, float)
        c = V.mean(axis=0)
        W = np.roll(V, -1, axis=0)
        q = np.stack([np.broadcast_to(c, V.shape), V, W, W], axis=1)
        return cls(q, V.copy())

    @property
    def area(self) -> float:
        return float(quad_area(self.quads).sum())

    @property
    def diameter(self) -> float:
        P = self.outline
        return float(np.max(np.hypot(*(P[:, None, :] - P[None, :, :]).transpose(2, 0, 1))))

    def sample_interior(self, rng: np.random.Generator, n: int) -> np.ndarray:
        from .quadrature import bilinear

        q = rng.integers(0, len(self.quads), size=n)
        s = rng.uniform(0.1, 0.9, size=n)
        t = rng.uniform(0.1, 0.9, size=n)
        X, _ = bilinear(self.quads[q], s, t)
        return X

    def boundary_samples(self, n: int = 64) -> np.ndarray:
        P = self.outline
        Q = np.roll(P, -1, axis=0)
        t = np.arange(n) / n
        return (P[:, None, :] + t[None, :, None] * (Q - P)[:, None, :]).reshape(-1, 2)


# --- graphs ------------------------------------------------------------------------------


@dataclass(frozen=True)
class GraphSurface:
    f: ArrayFn
    grad_f: Callable[[np.ndarray, np.ndarray], Tuple[np.ndarray, np.ndarray]]
    domain: Domain
    hess_f: Optional[Callable] = None
    label: str = "graph"
    check: bool = field(default=True, compare=False)

    def __post_init__(self):
        if self.check:
            self.check_gradient()

    def check_gradient(self, n: int = 16, step: float = 1e-5, tol: float = 1e-5) -> None:
        rng = np.random.default_rng(12345)
        P = self.domain.sample_interior(rng, n)
        x, y = P[:, 0], P[:, 1]
        gx, gy = (np.asarray(g, float) for g in self.grad_f(x, y))
        dx = (self.f(x + step, y) - self.f(x - step, y)) / (2 * step)
        dy = (self.f(x, y + step) - self.f(x, y - step)) / (2 * step)
        scale = np.maximum(1.0, np.hypot(gx, gy))
        err = np.maximum(np.abs(dx - gx), np.abs(dy - gy)) / scale
        # tolerate isolated kinks (abs) by requiring most samples to agree
        if np.mean(err > tol) > 0.25:
            raise GeometryError(f"gradient does not match f (max rel. error {err.max():.2e})")

    def grad(self, x, y):
        gx, gy = self.grad_f(x, y)
        return np.broadcast_to(gx, np.shape(x)), np.broadcast_to(gy, np.shape(x))

    def horizontal_integrand(self, x, y) -> np.ndarray:
        """``(-y/2 - f_x, x/2 - f_y)``: projected normal times the area element."""
        gx, gy = self.grad(x, y)
        return np.stack([-0.5 * y - gx, 0.5 * x - gy], axis=-1)

    def negated(self) -> "GraphSurface":
        f, g, h = self.f, self.grad_f, self.hess_f

        def nf(x, y):
            return -np.asarray(f(x, y))

        def ng(x, y):
            a, b = g(x, y)
            return -np.asarray(a), -np.asarray(b)

        nh = None
        if h is not None:
            def nh(x, y):
                return tuple(-np.asarray(t) for t in h(x, y))

        return GraphSurface(nf, ng, self.domain, nh, self.label + "(neg)", check=False)

    def perturbed(self, phi: ArrayFn, grad_phi, eps: float) -> "GraphSurface":
        f, g = self.f, self.grad_f

        def pf(x, y):
            return np.asarray(f(x, y)) + eps * np.asarray(phi(x, y))

        def pg(x, y):
            a, b = g(x, y)
            c, d = grad_phi(x, y)
            return np.asarray(a) + eps * np.asarray(c), np.asarray(b) + eps * np.asarray(d)

        return GraphSurface(pf, pg, self.domain, None, self.label, check=False)

    def swapped_xy(self) -> "GraphSurface":
        f, g = self.f, self.grad_f

        def sf(x, y):
            return f(y, x)

        def sg(x, y):
            a, b = g(y, x)
            return b, a

        D = self.domain
        q = D.quads[:, :, ::-1][:, [0, 3, 2, 1]]
        dom = Domain(q, D.outline[::-1, ::-1].copy())
        return GraphSurface(sf, sg, dom, None, self.label + "(swap)", check=False)

    def dilated(self, s: float) -> "GraphSurface":
        """Image under ``(x, y, z) -> (s x, s y, s^2 z)``."""
        f, g = self.f, self.grad_f

        def df(x, y):
            return s * s * np.asarray(f(x / s, y / s))

        def dg(x, y):
            a, b = g(x / s, y / s)
            return s * np.asarray(a), s * np.asarray(b)

        dom = Domain(self.domain.quads * s, self.domain.outline * s)
        return GraphSurface(df, dg, dom, None, self.label, check=False)

    def to_mesh(self, n: int = 64) -> TriMesh:
        meshes = []
        for q in self.domain.quads:
            g = np.linspace(0, 1, n + 1)
            S, T = np.meshgrid(g, g, indexing="ij")
            from .quadrature import bilinear

            X, _ = bilinear(np.repeat(q[None], S.size, axis=0), S.ravel(), T.ravel())
            Z = self.f(X[:, 0], X[:, 1])
            V = np.column_stack([X, Z])
            idx = np.arange((n + 1) ** 2).reshape(n + 1, n + 1)
            a, b, c, d = idx[:-1, :-1].ravel(), idx[1:, :-1].ravel(), idx[1:, 1:].ravel(), idx[:-1, 1:].ravel()
            T3 = np.concatenate([np.stack([a, b, c], 1), np.stack([a, c, d], 1)])
            # orient upward
            p0, p1, p2 = V[T3[:, 0]], V[T3[:, 1]], V[T3[:, 2]]
            nz = np.cross(p1 - p0, p2 - p0)[:, 2]
            if np.sum(nz) < 0:
                T3 = T3[:, ::-1]
            meshes.append((V, T3))
        Vs, Ts, off = [], [], 0
        for V, T3 in meshes:
            Vs.append(V)
            Ts.append(T3 + off)
            off += len(V)
        V, T3 = np.vstack(Vs), np.concatenate(Ts)
        return TriMesh(V, T3, closed=False)


def graph_from_field(field_, domain: Domain, label: Optional[str] = None) -> GraphSurface:
    """Graph surface from a parsed expression (see :mod:`heisenperim.expr`)."""
    return GraphSurface(field_.f, field_.grad, domain, field_.hess, label or field_.text)


def zero_graph(domain: Optional[Domain] = None) -> GraphSurface:
    dom = domain or Domain.rectangle(0, 1, 0, 1)
    return GraphSurface(
        lambda x, y: np.zeros_like(np.asarray(x, float)),
        lambda x, y: (np.zeros_like(np.asarray(x, float)), np.zeros_like(np.asarray(x, float))),
        dom,
        lambda x, y: (np.zeros_like(x), np.zeros_like(x), np.zeros_like(x)),
        "zero",
    )


def quadratic_graph(c, domain: Domain, label: str = "quadratic") -> GraphSurface:
    """``c0 + c1 x + c2 y + c3 x^2 + c4 x y + c5 y^2``."""
    c = np.asarray(c, float)

    def f(x, y):
        return c[0] + c[1] * x + c[2] * y + c[3] * x * x + c[4] * x * y + c[5] * y * y

    def g(x, y):
        return c[1] + 2 * c[3] * x + c[4] * y, c[2] + c[4] * x + 2 * c[5] * y

    def h(x, y):
        o = np.ones_like(np.asarray(x, float))
        return 2 * c[3] * o, c[4] * o, 2 * c[5] * o

    return GraphSurface(f, g, domain, h, label)


def plane_graph(k1: float, k2: float, domain: Domain, c: float = 0.0) -> GraphSurface:
    return quadratic_graph([c, k1, k2, 0, 0, 0], domain, f"plane({k1},{k2})")


# --- implicit surfaces -------------------------------------------------------------------


@dataclass(frozen=True)
class ImplicitSurface:
    """Level set ``F = 0`` in ``box = ((x0, y0, z0), (x1, y1, z1))``; ``F < 0`` inside."""

    F: Callable
    grad_F: Callable
    box: Tuple[Tuple[float, float, float], Tuple[float, float, float]]
    label: str = "implicit"

    def to_mesh(self, cell: float) -> TriMesh:
        from skimage.measure import marching_cubes

        lo = np.asarray(self.box[0], float)
        hi = np.asarray(self.box[1], float)
        n = np.maximum(np.ceil((hi - lo) / cell).astype(int) + 1, 3)
        axes = [np.linspace(lo[i], hi[i], n[i]) for i in range(3)]
        G = np.meshgrid(*axes, indexing="ij")
        vals = np.asarray(self.F(*G), float)
        # pad with a positive shell so surfaces touching the box still close up
        vals = np.pad(vals, 1, constant_values=max(1.0, float(np.abs(vals).max())))
        spacing = tuple((hi - lo) / (n - 1))
        verts, faces, _, _ = marching_cubes(vals, 0.0, spacing=spacing)
        verts = verts + lo - np.asarray(spacing)
        V, T = compact(verts, faces)
        mesh = TriMesh(V, T, closed=False)
        # orient with grad F (outward for F < 0 inside)
        c = mesh.centroids
        g = np.stack(self.grad_F(c[:, 0], c[:, 1], c[:, 2]), axis=1)
        if np.sum(np.einsum("ij,ij->i", g, mesh.area_vectors)) < 0:
            mesh = mesh.flipped()
        return TriMesh(mesh.vertices, mesh.triangles, closed=mesh.is_watertight())

    def critical_samples(self, mesh: TriMesh, tol: float = 1e-12) -> int:
        c = mesh.centroids
        g = np.stack(self.grad_F(c[:, 0], c[:, 1], c[:, 2]), axis=1)
        return int(np.sum(np.linalg.norm(g, axis=1) < tol))


# --- slabs -------------------------------------------------------------------------------

_MONO = ("1", "x", "y", "x^2", "xy", "y^2")


def _monomials(x, y):
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    return np.stack([np.ones_like(x), x, y, x * x, x * y, y * y], axis=-1)


@dataclass(frozen=True)
class QuadraticPatch:
    coeffs: np.ndarray
    quad: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, float).reshape(6)
        q = np.array(self.quad, float).reshape(4, 2)
        e = np.roll(q, -1, axis=0) - q
        turns = e[:, 0] * np.roll(e, -1, axis=0)[:, 1] - e[:, 1] * np.roll(e, -1, axis=0)[:, 0]
        if not (np.all(turns > -1e-12) or np.all(turns < 1e-12)):
            raise GeometryError("patch quadrilateral is not convex")
        c.setflags(write=False)
        q.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "quad", q)

    def __call__(self, x, y):
        return _monomials(x, y) @ self.coeffs

    def grad(self, x, y):
        c = self.coeffs
        return c[1] + 2 * c[3] * x + c[4] * y, c[2] + c[4] * x + 2 * c[5] * y

    def hess(self, x, y):
        c = self.coeffs
        o = np.ones_like(np.asarray(x, float))
        return 2 * c[3] * o, c[4] * o, 2 * c[5] * o

    def negated(self) -> "QuadraticPatch":
        return QuadraticPatch(-self.coeffs, self.quad)

    def dilated(self, s: float) -> "QuadraticPatch":
        """Patch of the image under ``(x, y, z) -> (s x, s y, s^2 z)``."""
        c = self.coeffs * np.array([s * s, s, s, 1.0, 1.0, 1.0])
        return QuadraticPatch(c, s * self.quad)

    def as_graph(self) -> GraphSurface:
        return GraphSurface(self.__call__, self.grad, Domain.quad(self.quad), self.hess, "patch", check=False)

    def integral(self) -> float:
        X, W = gauss_nodes(self.quad[None], 3)
        return float(np.sum(self(X[:, 0], X[:, 1]) * W))

    def to_dict(self):
        return {"coeffs": dict(zip(_MONO, self.coeffs.tolist())), "quad": self.quad.tolist()}


@dataclass(frozen=True)
class Wall:
    """Vertical strip over segment ``a -> b``; heights piecewise linear in the segment parameter."""

    a: np.ndarray
    b: np.ndarray
    knots: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        for name in ("a", "b", "knots", "lower", "upper"):
            arr = np.array(getattr(self, name), float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if np.any(self.upper < self.lower - 1e-12):
            raise GeometryError("wall upper height below lower height")
        if not (self.knots[0] == 0 and self.knots[-1] == 1 and np.all(np.diff(self.knots) > 0)):
            raise GeometryError("wall knots must increase from 0 to 1")

    @classmethod
    def rectangle(cls, a, b, h: float, base: float = 0.0) -> "Wall":
        return cls(a, b, [0.0, 1.0], [base, base], [base + h, base + h])

    @property
    def length(self) -> float:
        return float(np.hypot(*(self.b - self.a)))

    @property
    def area(self) -> float:
        d = self.upper - self.lower
        return self.length * float(np.sum(0.5 * (d[1:] + d[:-1]) * np.diff(self.knots)))

    @property
    def unit_normal(self) -> np.ndarray:
        d = (self.b - self.a) / self.length
        return np.array([d[1], -d[0]])

    def dilated(self, s: float) -> "Wall":
        return Wall(s * self.a, s * self.b, self.knots, s * s * self.lower, s * s * self.upper)

    def heights(self, t):
        return np.interp(t, self.knots, self.lower), np.interp(t, self.knots, self.upper)

    def to_dict(self):
        return {
            "a": self.a.tolist(), "b": self.b.tolist(), "knots": self.knots.tolist(),
            "lower": self.lower.tolist(), "upper": self.upper.tolist(),
        }


@dataclass(frozen=True)
class SlabSurface:
    top: Tuple[QuadraticPatch, ...]
    walls: Tuple[Wall, ...]
    support: ConvexBody
    label: str = "slab"

    @property
    def bottom(self) -> Tuple[QuadraticPatch, ...]:
        return tuple(p.negated() for p in self.top)

    def top_value(self, x, y) -> np.ndarray:
        """Evaluate the upper sheet at points of the support (nan outside)."""
        x = np.atleast_1d(np.asarray(x, float))
        y = np.atleast_1d(np.asarray(y, float))
        out = np.full(x.shape, np.nan)
        for p in self.top:
            inside = _in_convex_quad(p.quad, x, y)
            take = inside & np.isnan(out)
            out[take] = p(x[take], y[take])
        return out

    def volume(self) -> float:
        return 2.0 * math.fsum(p.integral() for p in self.top)

    def dilated(self, s: float) -> "SlabSurface":
        if not s > 0:
            raise GeometryError("dilation factor must be positive")
        return SlabSurface(
            tuple(p.dilated(s) for p in self.top), tuple(w.dilated(s) for w in self.walls),
            self.support.scaled(s), self.label,
        )

    def to_dict(self):
        return {
            "label": self.label,
            "support": self.support.vertices.tolist() if self.support.is_polygon else {"disk": self.support.radius},
            "top": [p.to_dict() for p in self.top],
            "bottom": "mirror of top (z -> -z)",
            "walls": [w.to_dict() for w in self.walls],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True)

    def to_mesh(self, n: int = 16) -> TriMesh:
        """Closed triangulation (for cross-checks against mesh builders)."""
        return slab_to_mesh(self, n)


def _in_convex_quad(q: np.ndarray, x, y, tol: float = 1e-12) -> np.ndarray:
    e = np.roll(q, -1, axis=0) - q
    sgn = np.sign(np.sum(q[:, 0] * np.roll(q[:, 1], -1) - np.roll(q[:, 0], -1) * q[:, 1]))
    ok = np.ones(np.shape(x), dtype=bool)
    for k in range(4):
        cr = e[k, 0] * (y - q[k, 1]) - e[k, 1] * (x - q[k, 0])
        ok &= sgn * cr >= -tol
    return ok


# --- bubble builders ---------------------------------------------------------------------


def _square_bubble_f(x, y):
    return 0.5 * (1 - np.abs(x * y))


def build_square_bubble() -> SlabSurface:
    """``|z| <= (1 - |xy|) / 2`` over ``[-1, 1]^2``."""
    patches = []
    for sx, sy in [(1, 1), (-1, 1), (-1, -1), (1, -1)]:
        s = sx * sy
        corners = np.array([[0, 0], [sx, 0], [sx, sy], [0, sy]], float)
        if s < 0:
            corners = corners[::-1]
        patches.append(QuadraticPatch([0.5, 0, 0, 0, -0.5 * s, 0], corners))
    rim = np.array([[1, -1], [1, 1], [-1, 1], [-1, -1]], float)
    walls = []
    for k in range(4):
        walls.append(Wall(rim[k], rim[(k + 1) % 4], [0, 0.5, 1], [0, -0.5, 0], [0, 0.5, 0]))
    return SlabSurface(tuple(patches), tuple(walls), ConvexBody.square(), "square-bubble")


def _arc_area(G: np.ndarray, i: int, alpha, j: int, beta, n2: int):
    """Area enclosed by the arc of ``dI`` from ``G_i + alpha e_i`` to ``G_j + beta e_j`` and its chord.

    ``j`` may exceed ``i``; the arc passes the vertices ``G_{i+1} .. G_j``.
    """
    E = np.roll(G, -1, axis=0) - G
    s = G[i % n2] + np.multiply.outer(alpha, E[i % n2])
    t = G[j % n2] + np.multiply.outer(beta, E[j % n2])
    mids = [G[k % n2] for k in range(i + 1, j + 1)]
    pts = [s] + [np.broadcast_to(m, s.shape) for m in mids] + [t]
    area = 0.0
    for p, q in zip(pts, pts[1:] + pts[:1]):
        area = area + 0.5 * (p[..., 0] * q[..., 1] - p[..., 1] * q[..., 0])
    return area, t - s


def build_polygonal_bubble(Q: ConvexBody) -> SlabSurface:
    """Bubble set of a polygonal body as a piecewise quadratic slab.

    A patch collects the endpoints of loops of the unit-area isoperimetrix that
    start on edge ``i`` and whose long arc ends on edge ``j``.  The chord is
    affine in the two edge parameters and the swept area quadratic, so the
    sheet is quadratic over a parallelogram.  Parallel edge pairs give walls.
    """
    if not Q.is_polygon:
        raise GeometryError("polygonal bubble needs a polygonal body")
    I = isoperimetrix(Q, 1.0)
    G = I.vertices
    n2 = len(G)
    n = n2 // 2
    E = np.roll(G, -1, axis=0) - G
    fit_nodes = np.array([[0, 0], [1, 0], [0, 1], [0.5, 0], [0, 0.5], [0.5, 0.5]])
    check_nodes = np.array([[1, 1], [1, 0.5], [0.5, 1]])
    patches = []
    for i in range(n2):
        for d in range(n + 1, n2):
            j = i + d
            z, p = _arc_area(G, i, fit_nodes[:, 0], j, fit_nodes[:, 1], n2)
            M = _monomials(p[:, 0], p[:, 1])
            c = np.linalg.solve(M, z - 0.5)
            zc, pc = _arc_area(G, i, check_nodes[:, 0], j, check_nodes[:, 1], n2)
            resid = np.max(np.abs(_monomials(pc[:, 0], pc[:, 1]) @ c - (zc - 0.5)))
            if resid > 1e-9:
                raise GeometryError(f"patch ({i},{j % n2}) is not quadratic (residual {resid:.2e})")
            ab = np.array([[0, 0], [1, 0], [1, 1], [0, 1]], float)
            _, corners = _arc_area(G, i, ab[:, 0], j, ab[:, 1], n2)
            if quad_signed_area(corners) < 0:
                corners = corners[::-1]
            patches.append(QuadraticPatch(c, corners))
    walls = []
    for i in range(n2):
        j = i + n
        knots = np.array([0.0, 0.5, 1.0])
        lo, hi = [], []
        for tau in knots:
            u = 2 * tau
            al = np.array([max(0.0, u - 1), min(1.0, u)])
            z, _ = _arc_area(G, i, al, j, u - al, n2)
            lo.append(z.min() - 0.5)
            hi.append(z.max() - 0.5)
        walls.append(Wall(-2 * G[i], -2 * G[(i + 1) % n2], knots, lo, hi))
    return SlabSurface(tuple(patches), tuple(walls), I.scaled(2.0), f"bubble({n2}-gon)")


def quad_signed_area(q: np.ndarray) -> float:
    x, y = q[:, 0], q[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def slab_to_mesh(s: SlabSurface, n: int = 16) -> TriMesh:
    """Closed mesh of a slab: each patch gridded ``n x n``, mirrored, walls stitched on the rim."""
    from .quadrature import bilinear

    g = np.linspace(0, 1, n + 1)
    S, T = np.meshgrid(g, g, indexing="ij")
    idx = np.arange((n + 1) ** 2).reshape(n + 1, n + 1)
    a, b, c, d = idx[:-1, :-1].ravel(), idx[1:, :-1].ravel(), idx[1:, 1:].ravel(), idx[:-1, 1:].ravel()
    cellT = np.concatenate([np.stack([a, b, c], 1), np.stack([a, c, d], 1)])
    V, Tr = [], []
    off = 0
    for sheet in (1, -1):
        for p in s.top:
            X, _ = bilinear(np.repeat(p.quad[None], S.size, axis=0), S.ravel(), T.ravel())
            Z = sheet * p(X[:, 0], X[:, 1])
            V.append(np.column_stack([X, Z]))
            tri = cellT if sheet > 0 else cellT[:, ::-1]
            Tr.append(tri + off)
            off += len(X)
    for w in s.walls:
        t = np.unique(np.concatenate([np.linspace(0, 1, 2 * n + 1), w.knots]))
        P = w.a[None] + t[:, None] * (w.b - w.a)[None]
        lo, hi = w.heights(t)
        top = np.column_stack([P, hi])
        bot = np.column_stack([P, lo])
        V.extend([top, bot])
        m = len(t)
        it = np.arange(m) + off
        ib = np.arange(m) + off + m
        # outward for a counterclockwise rim: (a -> b) with normal to the right
        tri = np.concatenate([
            np.stack([ib[:-1], ib[1:], it[1:]], 1),
            np.stack([ib[:-1], it[1:], it[:-1]], 1),
        ])
        Tr.append(tri)
        off += 2 * m
    V = np.vstack(V)
    Tr = np.concatenate(Tr)
    V, Tr = weld(V, Tr)
    V, Tr = compact(V, Tr)
    mesh = TriMesh(V, Tr)
    if mesh.is_watertight() and mesh.volume() < 0:
        mesh = mesh.flipped()
    return TriMesh(mesh.vertices, mesh.triangles, closed=mesh.is_watertight())


def weld(V: np.ndarray, T: np.ndarray, tol: float = 1e-10):
    """Merge vertices closer than ``tol`` (grid snapping; adequate for builder output)."""
    key = np.round(np.asarray(V) / tol).astype(np.int64)
    _, first, inv = np.unique(key, axis=0, return_index=True, return_inverse=True)
    return np.asarray(V)[first], inv.ravel()[T]


def build_q_bubble_mesh(Q: ConvexBody, resolution: int = 256, centered: bool = True) -> TriMesh:
    """Mesh of the bubble set stitched from the family of loops through the identity.

    Vertex ``(a, k)`` is the endpoint of the arc of length ``k`` nodes starting
    at node ``a`` of the unit-area isoperimetrix, lifted from the identity.
    ``k = 0`` and ``k = N`` are the two poles and are shared by index.
    """
    if resolution < 16:
        raise MeshError("resolution too coarse to stitch the bubble (need >= 16)")
    iso = iso_nodes(Q, resolution, normalize="area")
    N = iso.count
    pts, _, pre = iso.unrolled(2 * N + 2)
    a = np.arange(N)[:, None]
    k = np.arange(1, N)[None, :]
    b = a + k
    chord = pts[b] - pts[a]
    area = 0.5 * (pre[b] - pre[a] + (pts[b, 0] * pts[a, 1] - pts[b, 1] * pts[a, 0]))
    V = np.zeros((N * N + 1, 3))
    V[(a * N + k).ravel()] = np.concatenate([chord, area[..., None]], axis=-1).reshape(-1, 3)
    south = 0  # (0, 0) slot
    north = N * N
    V[north] = [0.0, 0.0, iso.area]

    def vid(aa, kk):
        aa = np.asarray(aa) % N
        kk = np.asarray(kk)
        return np.where(kk <= 0, south, np.where(kk >= N, north, aa * N + kk))

    A, K = np.meshgrid(np.arange(N), np.arange(1, N), indexing="ij")
    A, K = A.ravel(), K.ravel()
    p00, p10, p11, p01 = vid(A, K), vid(A + 1, K - 1), vid(A + 1, K), vid(A, K + 1)
    T = np.concatenate([np.stack([p00, p10, p11], 1), np.stack([p00, p11, p01], 1)])
    V, T = compact(V, T)
    ok, why = edge_report(T)
    if not ok:
        raise MeshError(f"bubble mesh does not close: {why}")
    mesh = TriMesh(V, T, closed=True)
    if mesh.volume() < 0:
        mesh = mesh.flipped()
    if centered:
        mesh = mesh.map_vertices(lambda P: P - np.array([0.0, 0.0, 0.5 * iso.area]))
    return mesh


def build_pansu_bubble(resolution: int = 256, centered: bool = True) -> TriMesh:
    return build_q_bubble_mesh(ConvexBody.disk(), resolution, centered)


# --- volume and characteristic set -------------------------------------------------------


def volume(surface, rtol: float = 1e-6) -> float:
    """Lebesgue volume enclosed by a slab or closed mesh, or under a graph (floor z = 0)."""
    if isinstance(surface, SlabSurface):
        return surface.volume()
    if isinstance(surface, TriMesh):
        return surface.volume()
    if isinstance(surface, GraphSurface):
        return integrate(surface.f, surface.domain.quads, rtol=rtol).value
    raise TypeError(f"cannot take the volume of {type(surface).__name__}")


def characteristic_points(surface, grid: int = 101, tol: float = 1e-9) -> np.ndarray:
    """Sample points where the horizontal projection of the unit normal is below ``tol``."""
    if isinstance(surface, TriMesh):
        c = surface.centroids
        w = horizontal_projection(c, surface.normals)
        ok = (np.hypot(w[:, 0], w[:, 1]) < tol) & (surface.areas > 0)
        return c[ok]
    if isinstance(surface, GraphSurface):
        graphs = [(surface, 1.0)]
    elif isinstance(surface, SlabSurface):
        graphs = [(p.as_graph(), 1.0) for p in surface.top] + [(p.as_graph(), -1.0) for p in surface.top]
    else:
        raise TypeError(f"unsupported surface {type(surface).__name__}")
    from .quadrature import bilinear

    out = []
    g = np.linspace(0, 1, grid)
    S, T = np.meshgrid(g, g, indexing="ij")
    for gs, sheet in graphs:
        for q in gs.domain.quads:
            X, _ = bilinear(np.repeat(q[None], S.size, axis=0), S.ravel(), T.ravel())
            x, y = X[:, 0], X[:, 1]
            fx, fy = gs.grad(x, y)
            fx, fy = sheet * np.asarray(fx), sheet * np.asarray(fy)
            w = np.stack([-0.5 * y - fx, 0.5 * x - fy], axis=1)
            norm = np.sqrt(1 + fx ** 2 + fy ** 2)
            ok = np.hypot(w[:, 0], w[:, 1]) / norm < tol
            if np.any(ok):
                z = sheet * np.asarray(gs.f(x[ok], y[ok]))
                out.append(np.column_stack([x[ok], y[ok], z]))
    if not out:
        return np.zeros((0, 3))
    return np.unique(np.round(np.vstack(out), 12), axis=0)
