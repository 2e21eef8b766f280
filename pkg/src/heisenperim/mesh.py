"""Triangle meshes in 3-space: validation, volume, OBJ I/O."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np


class MeshError(ValueError):
    """Mesh is open where a closed one is needed, or malformed."""


@dataclass(frozen=True)
class TriMesh:
    vertices: np.ndarray
    triangles: np.ndarray
    closed: bool = False

    def __post_init__(self):
        V = np.array(self.vertices, dtype=float)
        T = np.array(self.triangles, dtype=np.int64)
        if V.ndim != 2 or V.shape[1] != 3:
            raise MeshError("vertices must be an (n, 3) array")
        if T.ndim != 2 or T.shape[1] != 3:
            raise MeshError("triangles must be an (m, 3) index array")
        if len(T) and (T.min() < 0 or T.max() >= len(V)):
            raise MeshError("triangle index out of range")
        V.setflags(write=False)
        T.setflags(write=False)
        object.__setattr__(self, "vertices", V)
        object.__setattr__(self, "triangles", T)
        if self.closed:
            ok, why = edge_report(T)
            if not ok:
                raise MeshError(f"mesh flagged closed but {why}")

    @property
    def corners(self):
        V, T = self.vertices, self.triangles
        return V[T[:, 0]], V[T[:, 1]], V[T[:, 2]]

    @property
    def area_vectors(self) -> np.ndarray:
        p0, p1, p2 = self.corners
        return 0.5 * np.cross(p1 - p0, p2 - p0)

    @property
    def areas(self) -> np.ndarray:
        return np.linalg.norm(self.area_vectors, axis=1)

    @property
    def normals(self) -> np.ndarray:
        """Unit normals (zero rows for degenerate triangles)."""
        a = self.area_vectors
        n = np.linalg.norm(a, axis=1)
        out = np.zeros_like(a)
        good = n > 0
        out[good] = a[good] / n[good, None]
        return out

    @property
    def centroids(self) -> np.ndarray:
        p0, p1, p2 = self.corners
        return (p0 + p1 + p2) / 3.0

    def is_watertight(self) -> bool:
        return edge_report(self.triangles)[0]

    def volume(self) -> float:
        """Enclosed volume by the divergence theorem; rejects open meshes."""
        if not self.is_watertight():
            raise MeshError("volume needs a closed mesh")
        return float(np.sum(np.einsum("ij,ij->i", self.centroids, self.area_vectors)) / 3.0)

    def map_vertices(self, fn) -> "TriMesh":
        return TriMesh(fn(np.array(self.vertices)), self.triangles, self.closed)

    def flipped(self) -> "TriMesh":
        return TriMesh(self.vertices, self.triangles[:, ::-1], self.closed)

    def extent(self) -> np.ndarray:
        return np.stack([self.vertices.min(axis=0), self.vertices.max(axis=0)])


def edge_report(T: np.ndarray):
    """Every directed edge must appear once and be matched by its reverse."""
    T = np.asarray(T)
    if len(T) == 0:
        return False, "has no triangles"
    if np.any(T[:, 0] == T[:, 1]) or np.any(T[:, 1] == T[:, 2]) or np.any(T[:, 0] == T[:, 2]):
        return False, "has triangles with repeated vertices"
    e = np.concatenate([T[:, [0, 1]], T[:, [1, 2]], T[:, [2, 0]]])
    n = int(T.max()) + 1
    key = e[:, 0] * n + e[:, 1]
    uniq, counts = np.unique(key, return_counts=True)
    if np.any(counts > 1):
        return False, f"{int(np.sum(counts > 1))} directed edges repeat (orientation clash)"
    rev = e[:, 1] * n + e[:, 0]
    missing = ~np.isin(rev, uniq)
    if np.any(missing):
        return False, f"{int(missing.sum())} boundary edges"
    return True, "closed"


def boundary_loops(T: np.ndarray):
    """Ordered boundary vertex loops of an oriented surface (edges without a reverse)."""
    T = np.asarray(T)
    e = np.concatenate([T[:, [0, 1]], T[:, [1, 2]], T[:, [2, 0]]])
    n = int(T.max()) + 1
    key = set((e[:, 0] * n + e[:, 1]).tolist())
    nxt = {}
    for a, b in e.tolist():
        if b * n + a not in key:
            if a in nxt:
                raise MeshError("boundary is not a disjoint union of simple loops")
            nxt[a] = b
    loops = []
    seen = set()
    for start in sorted(nxt):
        if start in seen:
            continue
        loop = [start]
        seen.add(start)
        cur = nxt[start]
        while cur != start:
            if cur in seen or cur not in nxt:
                raise MeshError("boundary is not a disjoint union of simple loops")
            loop.append(cur)
            seen.add(cur)
            cur = nxt[cur]
        loops.append(np.array(loop))
    return loops


def compact(V: np.ndarray, T: np.ndarray):
    """Drop triangles with repeated indices and unreferenced vertices."""
    T = np.asarray(T, dtype=np.int64)
    keep = (T[:, 0] != T[:, 1]) & (T[:, 1] != T[:, 2]) & (T[:, 0] != T[:, 2])
    T = T[keep]
    used = np.unique(T)
    remap = -np.ones(len(V), dtype=np.int64)
    remap[used] = np.arange(len(used))
    return np.asarray(V)[used], remap[T]


def box_mesh(lo=(0.0, 0.0, 0.0), hi=(1.0, 1.0, 1.0)) -> TriMesh:
    lo = np.asarray(lo, float)
    hi = np.asarray(hi, float)
    V = np.array([[lo[0] if i & 1 == 0 else hi[0],
                   lo[1] if i & 2 == 0 else hi[1],
                   lo[2] if i & 4 == 0 else hi[2]] for i in range(8)])
    T = np.array([
        [0, 2, 1], [1, 2, 3],  # z = lo
        [4, 5, 6], [5, 7, 6],  # z = hi
        [0, 1, 4], [1, 5, 4],  # y = lo
        [2, 6, 3], [3, 6, 7],  # y = hi
        [0, 4, 2], [2, 4, 6],  # x = lo
        [1, 3, 5], [3, 7, 5],  # x = hi
    ])
    return TriMesh(V, T, closed=True)


def grid_mesh(xs: np.ndarray, ys: np.ndarray, z: np.ndarray) -> TriMesh:
    """Open graph mesh over a tensor grid, upward oriented."""
    nx, ny = len(xs), len(ys)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    V = np.stack([X.ravel(), Y.ravel(), np.asarray(z, float).ravel()], axis=1)
    idx = np.arange(nx * ny).reshape(nx, ny)
    a = idx[:-1, :-1].ravel()
    b = idx[1:, :-1].ravel()
    c = idx[1:, 1:].ravel()
    d = idx[:-1, 1:].ravel()
    T = np.concatenate([np.stack([a, b, c], 1), np.stack([a, c, d], 1)])
    return TriMesh(V, T, closed=False)


def write_obj(mesh: TriMesh, path, comment: Optional[str] = None) -> None:
    with open(path, "w", encoding="ascii") as fh:
        if comment:
            for line in comment.splitlines():
                fh.write(f"# {line}\n")
        for x, y, z in mesh.vertices:
            fh.write(f"v {x:.17g} {y:.17g} {z:.17g}\n")
        for a, b, c in mesh.triangles + 1:
            fh.write(f"f {a} {b} {c}\n")


def read_obj(path) -> TriMesh:
    verts, faces = [], []
    with open(path) as fh:
        for line in fh:
            parts = line.split()
            if not parts or parts[0].startswith("#"):
                continue
            if parts[0] == "v":
                verts.append([float(t) for t in parts[1:4]])
            elif parts[0] == "f":
                idx = [int(t.split("/")[0]) for t in parts[1:]]
                idx = [i - 1 if i > 0 else len(verts) + i for i in idx]
                for k in range(1, len(idx) - 1):  # fan-split polygons
                    faces.append([idx[0], idx[k], idx[k + 1]])
    T = np.array(faces, dtype=np.int64).reshape(-1, 3)
    closed = edge_report(T)[0] if len(T) else False
    return TriMesh(np.array(verts).reshape(-1, 3), T, closed=closed)


def write_points_csv(points: np.ndarray, path) -> None:
    np.savetxt(path, np.asarray(points, float), delimiter=",", fmt="%.17g", header="x,y,z", comments="")
