import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from heisenperim.heisenberg import (
    IDENTITY, GeodesicSpec, HorizontalPath, HPoint, bubble_family, cc_geodesic, dilate,
    dilate_points, group_mul, horizontal_frame, inverse, iso_nodes, lift_path, sphere_sample,
)
from heisenperim.mesh import MeshError, box_mesh
from heisenperim.planar import (
    ConvexBody, GeometryError, PlanarCurve, enclosed_area, isoperimetrix, minkowski_length,
    unit_circle_curve,
)

coord = st.floats(-20, 20, allow_nan=False, allow_infinity=False)
hpoint = st.builds(HPoint, coord, coord, coord)


def test_group_examples():
    p = HPoint(0.3, -1.2, 2.0)
    assert group_mul(IDENTITY, p) == p
    assert group_mul(HPoint(1, 0, 0), HPoint(0, 1, 0)) == HPoint(1, 1, 0.5)
    assert group_mul(p, inverse(p)) == IDENTITY


@settings(max_examples=100, deadline=None)
@given(hpoint, hpoint, hpoint)
def test_associative(p, q, r):
    a = group_mul(group_mul(p, q), r).as_array()
    b = group_mul(p, group_mul(q, r)).as_array()
    assert np.allclose(a, b, rtol=1e-12, atol=1e-9)


@settings(max_examples=100, deadline=None)
@given(hpoint, hpoint, st.floats(0.1, 10))
def test_dilation_is_automorphism(p, q, s):
    a = dilate(s, group_mul(p, q)).as_array()
    b = group_mul(dilate(s, p), dilate(s, q)).as_array()
    assert np.allclose(a, b, rtol=1e-12, atol=1e-9)


def test_dilation_examples():
    assert dilate(2, HPoint(1, 1, 1)) == HPoint(2, 2, 4)
    p = HPoint(0.5, -0.25, 3.0)
    assert dilate(1, p) == p
    assert dilate(3, dilate(0.5, p)).as_array() == pytest.approx(dilate(1.5, p).as_array())
    with pytest.raises(ValueError):
        dilate(0, p)


def test_dilation_scales_volume():
    m = box_mesh((-0.3, 0.1, -1.0), (0.7, 0.8, 0.5))
    for s in (0.5, 2.0, 3.0):
        v = m.map_vertices(lambda P: dilate_points(s, P)).volume()
        assert v == pytest.approx(s ** 4 * m.volume(), rel=1e-9)


def test_frame_is_left_invariant():
    # X at p is the push-forward of X at the identity under left translation by p
    p = np.array([0.7, -0.4, 1.1])
    h = 1e-6
    for k, e in enumerate(np.eye(2)):
        q = group_mul(HPoint.of(p), HPoint(h * e[0], h * e[1], 0.0)).as_array()
        assert (q - p) / h == pytest.approx(horizontal_frame(p)[k], abs=1e-9)


def test_lift_square_and_circle():
    sq = PlanarCurve([[0, 0], [1, 0], [1, 1], [0, 1]], closed=True)
    path = lift_path(sq)
    assert path.end.z == pytest.approx(1.0)
    assert path.end.x == 0 and path.end.y == 0
    c = unit_circle_curve(4096)
    loop = PlanarCurve(c.samples - c.samples[0], closed=True)
    assert lift_path(loop).end.z == pytest.approx(enclosed_area(c))
    assert enclosed_area(c) == pytest.approx(math.pi, rel=1e-5)


def test_lift_of_ray_is_flat():
    path = lift_path(PlanarCurve(np.outer(np.linspace(-1, 2, 30), [0.6, -0.8])))
    assert np.max(np.abs(path.heights)) < 1e-15


def test_lift_rejects_non_horizontal():
    with pytest.raises(ValueError):
        HorizontalPath(PlanarCurve([[0, 0], [1, 0], [1, 1]]), [0.0, 0.0, 0.0])


def test_left_translation_preserves_length(rng):
    Q = ConvexBody.regular(6)
    path = lift_path(PlanarCurve(rng.normal(size=(20, 2))), 0.3)
    g = HPoint(1.5, -2.0, 0.7)
    moved = path.translated(g)
    assert moved.residuals().max() < 1e-12
    assert moved.length(Q) == pytest.approx(path.length(Q), rel=1e-13)


@pytest.mark.parametrize("Q", [ConvexBody.disk(), ConvexBody.diamond(), ConvexBody.regular(6)])
def test_full_loop_reaches_unit_height(Q):
    iso = iso_nodes(Q, 512)
    start = tuple(iso.nodes[0])
    g = cc_geodesic(GeodesicSpec(Q, 1.0, start, iso.perimeter))
    assert g.end.as_array() == pytest.approx([0, 0, 1], abs=1e-9)
    assert minkowski_length(Q, g.planar) == pytest.approx(iso.perimeter, rel=1e-12)


def test_half_loop_sweeps_half_area():
    Q = ConvexBody.diamond()
    I = isoperimetrix(Q, 1.0)
    iso = iso_nodes(Q, 512)
    g = cc_geodesic(GeodesicSpec(Q, 1.0, tuple(I.vertices[0]), 0.5 * iso.perimeter))
    # the half loop of a square from one corner to the opposite one
    assert g.end.x == pytest.approx(I.vertices[2][0] - I.vertices[0][0])
    half = PlanarCurve(np.vstack([I.vertices[:3]]), closed=True)
    assert g.end.z == pytest.approx(enclosed_area(half), abs=1e-12)


def test_geodesic_endpoint_law(rng):
    Q = ConvexBody.regular(6)
    iso = iso_nodes(Q, 600)
    for _ in range(10):
        k = int(rng.integers(len(iso.nodes)))
        span = float(rng.uniform(0.1, 0.9)) * iso.perimeter
        g = cc_geodesic(GeodesicSpec(Q, 1.0, tuple(iso.nodes[k]), span))
        P = g.planar.samples
        assert g.end.z == pytest.approx(enclosed_area(PlanarCurve(P, closed=True)), abs=1e-12)
        assert minkowski_length(Q, g.planar) == pytest.approx(span, rel=1e-12)


def test_geodesic_spec_validation():
    Q = ConvexBody.diamond()
    with pytest.raises(GeometryError):
        GeodesicSpec(Q, 1.0, (0.3, 0.3), 1.0)
    iso = iso_nodes(Q, 64)
    with pytest.raises(GeometryError):
        cc_geodesic(GeodesicSpec(Q, 1.0, tuple(iso.nodes[0]), 1.5 * iso.perimeter))


@pytest.mark.parametrize("Q", [ConvexBody.disk(), ConvexBody.diamond()])
def test_bubble_family_endpoints(Q):
    fam = bubble_family(Q, 24, 384)
    assert len(fam) == 24
    for p in fam:
        assert p.start == IDENTITY
        assert p.end.as_array() == pytest.approx([0, 0, 1], abs=1e-9)
        assert p.residuals().max() < 1e-9


def test_diamond_family_projects_to_unit_squares():
    for p in bubble_family(ConvexBody.diamond(), 12, 256):
        P = p.planar.samples
        assert np.ptp(P[:, 0]) == pytest.approx(1.0)
        assert np.ptp(P[:, 1]) == pytest.approx(1.0)


def _max_arc_height():
    # area between a unit-length circular arc of angle phi and its chord
    phi = np.linspace(1e-3, 2 * np.pi, 200001)
    return float(np.max((phi - np.sin(phi)) / (2 * phi ** 2)))


def test_disk_sphere_shape():
    m = sphere_sample(ConvexBody.disk(), 256)
    assert m.is_watertight()
    V = m.vertices
    r = np.hypot(V[:, 0], V[:, 1])
    pole = V[r < 1e-12, 2]
    n = 256  # the disk is discretised by a regular n-gon of unit perimeter
    assert np.max(pole) == pytest.approx(1 / (4 * n * math.tan(math.pi / n)), rel=1e-12)
    assert np.max(pole) == pytest.approx(1 / (4 * math.pi), rel=1e-4)
    assert V[:, 2].max() == pytest.approx(_max_arc_height(), rel=1e-3)
    assert r.max() == pytest.approx(1.0, abs=1e-9)


def test_diamond_sphere_shadow_is_diamond():
    m = sphere_sample(ConvexBody.diamond(), 128)
    assert m.is_watertight()
    l1 = np.abs(m.vertices[:, 0]) + np.abs(m.vertices[:, 1])
    assert l1.max() == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("Q", [ConvexBody.disk(), ConvexBody.diamond(), ConvexBody.regular(6)])
def test_sphere_symmetries(Q):
    m = sphere_sample(Q, 96)
    V = m.vertices
    key = lambda P: np.round(P, 9).tolist()
    flipped = V * np.array([-1, -1, 1])
    assert sorted(map(tuple, key(flipped))) == sorted(map(tuple, key(V)))


def test_sphere_homogeneity():
    Q = ConvexBody.regular(6)
    m1 = sphere_sample(Q, 96)
    m2 = sphere_sample(Q, 96, radius=2.0)
    assert m2.vertices == pytest.approx(dilate_points(2.0, m1.vertices))


def test_sphere_rejects_coarse_grid():
    with pytest.raises((MeshError, GeometryError)):
        sphere_sample(ConvexBody.diamond(), 4)
