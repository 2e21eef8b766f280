"""Meshes, quadrature, the expression grammar and the kernel backends."""
import math

import numpy as np
import pytest

from heisenperim import _pykernels, kernels
from heisenperim.expr import ExpressionError, parse_field
from heisenperim.mesh import (
    MeshError, TriMesh, boundary_loops, box_mesh, compact, edge_report, grid_mesh, read_obj,
    write_obj,
)
from heisenperim.perimeter import _bary_points
from heisenperim.planar import ConvexBody
from heisenperim.quadrature import (
    QuadratureError, gauss_nodes, integrate, quad_area, tensor_nodes,
)

SQUARE = np.array([[[0, 0], [1, 0], [1, 1], [0, 1]]], float)


# --- meshes -------------------------------------------------------------------------------

def test_box_is_closed_and_outward():
    m = box_mesh((0, 0, 0), (2, 3, 4))
    assert m.is_watertight()
    assert m.volume() == pytest.approx(24.0)
    assert m.flipped().volume() == pytest.approx(-24.0)
    assert m.areas.sum() == pytest.approx(2 * (6 + 8 + 12))
    # normals point away from the centre
    out = np.einsum("ij,ij->i", m.normals, m.centroids - [1, 1.5, 2])
    assert np.all(out > 0)


def test_volume_translation_invariant():
    m = box_mesh()
    assert m.map_vertices(lambda V: V + [5, -3, 7]).volume() == pytest.approx(1.0, rel=1e-12)


def test_edge_report_reasons():
    T = box_mesh().triangles
    assert edge_report(T) == (True, "closed")
    ok, why = edge_report(T[:-1])
    assert not ok and "boundary" in why
    bad = T.copy()
    bad[0] = bad[0][::-1]
    ok, why = edge_report(bad)
    assert not ok
    assert not edge_report(np.array([[0, 0, 1]]))[0]
    assert not edge_report(np.zeros((0, 3), int))[0]


def test_closed_flag_is_validated():
    m = box_mesh()
    with pytest.raises(MeshError):
        TriMesh(m.vertices, m.triangles[:-2], closed=True)
    with pytest.raises(MeshError):
        TriMesh(m.vertices, [[0, 1, 99]])
    with pytest.raises(MeshError):
        TriMesh(np.zeros((3, 2)), [[0, 1, 2]])


def test_grid_mesh_boundary_loop():
    xs = np.linspace(0, 1, 5)
    m = grid_mesh(xs, xs, np.zeros((5, 5)))
    assert m.areas.sum() == pytest.approx(1.0)
    assert np.all(m.normals[:, 2] == pytest.approx(1.0))
    loops = boundary_loops(m.triangles)
    assert len(loops) == 1 and len(loops[0]) == 16


def test_compact_drops_degenerate():
    V = np.arange(15.0).reshape(5, 3)
    T = np.array([[0, 1, 2], [2, 2, 3], [0, 2, 1]])
    V2, T2 = compact(V, T)
    assert len(V2) == 3 and T2.tolist() == [[0, 1, 2], [0, 2, 1]]


def test_obj_roundtrip(tmp_path):
    m = box_mesh((-0.1, 0.2, 0.3), (1.0 / 3, 2.0, math.pi))
    p = tmp_path / "box.obj"
    write_obj(m, p, comment="box\nsecond line")
    back = read_obj(p)
    assert back.closed
    assert np.array_equal(back.vertices, m.vertices)
    assert np.array_equal(back.triangles, m.triangles)


def test_obj_polygons_and_negative_indices(tmp_path):
    p = tmp_path / "quad.obj"
    p.write_text("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf -4/1 -3/2 -2/3 -1/4\n")
    m = read_obj(p)
    assert m.triangles.tolist() == [[0, 1, 2], [0, 2, 3]]
    assert not m.closed


# --- quadrature ---------------------------------------------------------------------------

def test_quad_area():
    assert quad_area(SQUARE)[0] == pytest.approx(1.0)
    tri = np.array([[0, 0], [2, 0], [0, 2], [0, 2]], float)
    assert quad_area(tri) == pytest.approx(2.0)


@pytest.mark.parametrize("rtol", [1e-4, 1e-5, 1e-6])
def test_integrate_meets_rtol(rtol):
    r = integrate(lambda x, y: x * x + y, SQUARE, rtol=rtol)
    assert r.converged
    assert r.value == pytest.approx(1 / 3 + 1 / 2, rel=rtol)


def test_integrate_triangle_and_skewed_quad():
    tri = np.array([[0, 0], [1, 0], [0, 1], [0, 1]], float)
    assert integrate(lambda x, y: x, tri, rtol=1e-6).value == pytest.approx(1 / 6, rel=1e-6)
    q = np.array([[0, 0], [2, 0], [1.5, 1], [0.2, 1.3]], float)
    X, W = gauss_nodes(q, 4)
    ref = float(np.sum(W * X[:, 0] * X[:, 1]))
    assert integrate(lambda x, y: x * y, q, rtol=1e-6).value == pytest.approx(ref, rel=1e-6)


def test_integrate_kink_converges():
    # |x - 1/3| has a kink off the dyadic grid
    exact = (1 / 3) ** 2 / 2 + (2 / 3) ** 2 / 2
    r = integrate(lambda x, y: np.abs(x - 1 / 3), SQUARE, rtol=1e-5)
    assert r.converged
    assert r.value == pytest.approx(exact, rel=1e-5)
    assert r.error < 1e-5


def test_integrate_errors():
    with pytest.raises(ValueError):
        integrate(lambda x, y: x, SQUARE, rtol=0)
    with pytest.raises(QuadratureError), np.errstate(invalid="ignore"):
        integrate(lambda x, y: np.log(x - 0.5), SQUARE)
    flat = np.array([[[0, 0], [1, 0], [2, 0], [3, 0]]], float)
    with pytest.raises(QuadratureError):
        integrate(lambda x, y: x, flat)


def test_integrate_budget_reports_nonconvergence():
    r = integrate(lambda x, y: np.sin(1 / (x + 1e-3)), SQUARE, rtol=1e-12, max_level=2)
    assert not r.converged


def test_integrate_keep_nodes():
    r = integrate(lambda x, y: 1 + x, SQUARE, rtol=1e-6, keep_nodes=True)
    assert r.weights.sum() == pytest.approx(1.0)
    assert np.sum(r.weights * (1 + r.nodes[:, 0])) == pytest.approx(r.value, rel=1e-12)


def test_tensor_and_gauss_nodes():
    X, W = tensor_nodes(SQUARE, 16)
    assert W.sum() == pytest.approx(1.0)
    assert np.sum(W * X[:, 0] ** 2) == pytest.approx(1 / 3, abs=1 / 16 ** 2)
    X, W = gauss_nodes(SQUARE, 3)
    assert np.sum(W * X[:, 0] ** 5 * X[:, 1] ** 4) == pytest.approx(1 / 30, rel=1e-13)


# --- expressions --------------------------------------------------------------------------

def test_parse_field_values_and_derivatives():
    F = parse_field("x^2 - 3*x*y + 0.5*y^2 + 2")
    x, y = np.array([0.3, -1.0]), np.array([0.7, 2.0])
    assert F.f(x, y) == pytest.approx(x ** 2 - 3 * x * y + 0.5 * y ** 2 + 2)
    fx, fy = F.grad(x, y)
    assert fx == pytest.approx(2 * x - 3 * y)
    assert fy == pytest.approx(-3 * x + y)
    assert [np.asarray(h).tolist() for h in F.hess(x, y)] == [[2, 2], [-3, -3], [1, 1]]


def test_parse_field_abs_and_constants():
    F = parse_field("abs(x*y)/2")
    assert F.f(-1.0, 0.5) == pytest.approx(0.25)
    assert F.fxx(np.array([0.3]), np.array([0.2])) == pytest.approx([0.0])
    C = parse_field("1.5e-1")
    assert C.f(np.zeros(3), np.zeros(3)).tolist() == [0.15] * 3
    assert C.fx(np.zeros(3), np.zeros(3)).shape == (3,)


@pytest.mark.parametrize("text", ["", "z + 1", "__import__('os')", "x ** ", "exp(x)", "x; y", "x,y"])
def test_parse_field_rejects(text):
    with pytest.raises(ExpressionError):
        parse_field(text)


# --- kernels ------------------------------------------------------------------------------

def test_stable_sum_chunk_independent(rng):
    v = rng.normal(size=3 * kernels.CHUNK + 17)
    assert kernels.stable_sum(v) == pytest.approx(math.fsum(v), abs=1e-9)


def test_n_workers(monkeypatch):
    monkeypatch.setenv("HEISENPERIM_THREADS", "1")
    assert kernels.n_workers() == 1
    monkeypatch.setenv("HEISENPERIM_THREADS", "junk")
    assert kernels.n_workers() >= 1


@pytest.mark.parametrize("Q", [ConvexBody.diamond(), ConvexBody.regular(16), ConvexBody.disk()])
def test_backends_agree(Q, rng):
    n = 2000
    p0, p1, p2 = (rng.normal(size=(n, 3)) for _ in range(3))
    bary = _bary_points(2)
    V = Q.vertices if Q.is_polygon else None
    R = 0.0 if Q.is_polygon else Q.radius
    ref = _pykernels.tri_contents(p0, p1, p2, bary, V if V is not None else np.zeros((1, 2)), R)
    got = kernels.tri_contents(p0, p1, p2, bary, V, R)
    assert np.allclose(got, ref, rtol=1e-12, atol=1e-14)
    if Q.is_polygon:
        w = rng.normal(size=(n, 2))
        assert np.allclose(kernels.support_max(w, V), _pykernels.support_max(w, V), rtol=1e-14)
