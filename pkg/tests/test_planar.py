import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from heisenperim.planar import (
    ConvexBody, GeometryError, PlanarCurve, PlanarSegment, bipolar_check, dual_norm_eval,
    enclosed_area, in_circum_radii, isoperimetrix, minkowski_length, norm_eval, polar_dual,
    projection_content, random_symmetric_polygon, read_polygon_file, same_body, segment_content,
    support, unit_circle_curve, write_polygon_file,
)

finite = st.floats(-50, 50, allow_nan=False, allow_infinity=False)
vec = st.tuples(finite, finite)


def test_rejects_bad_polygons():
    with pytest.raises(GeometryError):
        ConvexBody.polygon([[1, 0], [0, 1], [-1, 0]])  # odd count
    with pytest.raises(GeometryError):
        ConvexBody.polygon([[1, 0], [-1, 0], [0, 1], [0, -1]])  # not convex in order
    with pytest.raises(GeometryError):
        ConvexBody.polygon([[2, 0], [0, 1], [-1, 0], [0, -1]])  # not symmetric
    with pytest.raises(GeometryError):
        ConvexBody.polygon([[1, 0], [0.5, 0.5], [0, 1], [-1, 0], [-0.5, -0.5], [0, -1]])  # collinear
    with pytest.raises(GeometryError):
        ConvexBody.disk(0.0)


def test_norm_examples():
    assert norm_eval(ConvexBody.diamond(), (1, 1)) == pytest.approx(2.0)
    assert norm_eval(ConvexBody.regular(6), (0, 0)) == 0.0
    assert norm_eval(ConvexBody.disk(), (3, 4)) == pytest.approx(5.0)


def test_dual_norm_examples():
    assert dual_norm_eval(ConvexBody.diamond(), (1, 1)) == pytest.approx(1.0)
    assert dual_norm_eval(ConvexBody.disk(), (3, 4)) == pytest.approx(5.0)
    assert dual_norm_eval(ConvexBody.diamond(2.0), (1, 1)) == pytest.approx(2.0)


def test_polar_dual_examples():
    assert same_body(polar_dual(ConvexBody.diamond()), ConvexBody.square())
    assert same_body(polar_dual(ConvexBody.disk()), ConvexBody.disk())
    assert same_body(polar_dual(ConvexBody.diamond(2.0)), ConvexBody.square(0.5))
    D = polar_dual(ConvexBody.regular(6))
    assert D.n_vertices == 6


def _halfplane_dual(Q, n=2000):
    """Oracle: the polar body's boundary radius by direct search over rays."""
    t = 2 * np.pi * np.arange(n) / n
    u = np.stack([np.cos(t), np.sin(t)], 1)
    return u / support(Q, u)[:, None]


def test_dual_matches_halfplane_oracle():
    Q = ConvexBody.regular(6)
    D = polar_dual(Q)
    P = _halfplane_dual(Q)
    assert np.allclose(norm_eval(D, P), 1.0, atol=1e-12)


@pytest.mark.parametrize("Q", [ConvexBody.square(), ConvexBody.regular(6), ConvexBody.disk(2.0)])
def test_bipolar(Q):
    assert same_body(bipolar_check(Q), Q)


def test_bipolar_random(rng):
    for _ in range(50):
        Q = random_symmetric_polygon(rng)
        assert same_body(polar_dual(polar_dual(Q)), Q, 1e-9)


def test_isoperimetrix_examples():
    I = isoperimetrix(ConvexBody.diamond(), 1.0)
    assert same_body(I, ConvexBody.square(0.5))
    I = isoperimetrix(ConvexBody.disk(), math.pi)
    assert I.radius == pytest.approx(1.0)
    I = isoperimetrix(ConvexBody.square(), 1.0)
    assert I.area == pytest.approx(1.0)
    assert np.max(np.hypot(*I.vertices.T)) == pytest.approx(1 / math.sqrt(2))
    assert same_body(I, ConvexBody.diamond(1 / math.sqrt(2)))


def test_minkowski_length_examples():
    D = ConvexBody.diamond()
    assert minkowski_length(D, PlanarCurve([[0, 0], [1, 1]])) == pytest.approx(2.0)
    circ = unit_circle_curve(20000)
    assert minkowski_length(ConvexBody.disk(), circ) == pytest.approx(2 * math.pi, rel=1e-7)
    sq = PlanarCurve([[0, 0], [1, 0], [1, 1], [0, 1]], closed=True)
    assert minkowski_length(D, sq) == pytest.approx(4.0)


def test_minkowski_length_additive(rng):
    Q = random_symmetric_polygon(rng)
    P = rng.normal(size=(9, 2))
    whole = minkowski_length(Q, PlanarCurve(P))
    parts = minkowski_length(Q, PlanarCurve(P[:5])) + minkowski_length(Q, PlanarCurve(P[4:]))
    assert whole == pytest.approx(parts, rel=1e-13)


def test_segment_content_examples():
    L = PlanarSegment((0, 0), (1, 1))
    assert segment_content(ConvexBody.diamond(), L) == pytest.approx(1.0)
    assert segment_content(ConvexBody.disk(), PlanarSegment((0, 0), (3, 4))) == pytest.approx(5.0)
    assert projection_content(ConvexBody.diamond(), L) == pytest.approx(1.0)


def test_segment_content_is_width_formula(rng):
    for _ in range(200):
        Q = random_symmetric_polygon(rng)
        a, b = rng.normal(size=(2, 2))
        L = PlanarSegment(tuple(a), tuple(b))
        assert segment_content(Q, L) == pytest.approx(projection_content(Q, L), rel=1e-12)


def test_segment_content_against_neighbourhood_area(rng):
    # area(L + eps Q) = eps^2 area(Q) + 2 eps |L| h_Q(n): exact for convex Q
    shapely = pytest.importorskip("shapely")
    from shapely.geometry import Polygon

    for _ in range(20):
        Q = random_symmetric_polygon(rng)
        a, b = rng.normal(size=(2, 2))
        eps = 1e-3
        hull = Polygon(np.concatenate([a + eps * Q.vertices, b + eps * Q.vertices])).convex_hull
        content = (hull.area - eps ** 2 * Q.area) / (2 * eps)
        assert content == pytest.approx(segment_content(Q, PlanarSegment(tuple(a), tuple(b))), rel=1e-9)


def test_segment_content_equals_rotated_dual_length(rng):
    # equality with a Q*-length holds once Q* is turned by a quarter
    for _ in range(100):
        Q = random_symmetric_polygon(rng)
        a, b = rng.normal(size=(2, 2))
        L = PlanarSegment(tuple(a), tuple(b))
        I = polar_dual(Q).rotated90()
        assert segment_content(Q, L) == pytest.approx(minkowski_length(I, PlanarCurve([a, b])), rel=1e-12)


def test_enclosed_area():
    sq = [[0, 0], [1, 0], [1, 1], [0, 1]]
    assert enclosed_area(PlanarCurve(sq, closed=True)) == pytest.approx(1.0)
    assert enclosed_area(PlanarCurve(sq[::-1], closed=True)) == pytest.approx(-1.0)
    assert enclosed_area(unit_circle_curve(10 ** 4)) == pytest.approx(math.pi, abs=1e-6)
    with pytest.raises(GeometryError):
        enclosed_area(PlanarCurve(sq))


def test_circle_area_richardson():
    a1 = enclosed_area(unit_circle_curve(5000))
    a2 = enclosed_area(unit_circle_curve(10000))
    assert (4 * a2 - a1) / 3 == pytest.approx(math.pi, abs=1e-6)


def test_in_circum_radii():
    r, R = in_circum_radii(ConvexBody.diamond())
    assert (r, R) == pytest.approx((1 / math.sqrt(2), 1.0))
    assert in_circum_radii(ConvexBody.disk(2.0)) == (2.0, 2.0)
    for n in (2, 3, 4, 5):
        r, R = in_circum_radii(ConvexBody.regular(2 ** n))
        assert (r, R) == pytest.approx((math.cos(math.pi / 2 ** n), 1.0))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10 ** 6), vec, vec)
def test_norm_axioms(seed, u, v):
    Q = random_symmetric_polygon(np.random.default_rng(seed))
    u, v = np.array(u), np.array(v)
    nu, nv, nuv = norm_eval(Q, u), norm_eval(Q, v), norm_eval(Q, u + v)
    assert nuv <= nu + nv + 1e-12 * (1 + nu + nv)
    assert norm_eval(Q, -3.5 * u) == pytest.approx(3.5 * nu, rel=1e-12, abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10 ** 6), vec, st.sampled_from([0.25, 0.5, 2.0, 3.0]))
def test_dual_norm_scaling(seed, y, r):
    Q = random_symmetric_polygon(np.random.default_rng(seed))
    assert dual_norm_eval(Q.scaled(r), y) == pytest.approx(r * dual_norm_eval(Q, y), rel=1e-12, abs=1e-12)


def test_dual_norm_monotone(rng):
    inner = ConvexBody.diamond()
    outer = ConvexBody.square()
    Y = rng.normal(size=(500, 2))
    assert np.all(support(inner, Y) <= support(outer, Y) + 1e-15)


def test_polygon_file_roundtrip(tmp_path):
    Q = ConvexBody.regular(8, 1.3, 0.1)
    p = tmp_path / "oct.txt"
    write_polygon_file(Q, p)
    assert same_body(read_polygon_file(p), Q, 1e-15)
    p.write_text("1 0\n0 1\nbad\n")
    with pytest.raises(GeometryError):
        read_polygon_file(p)
