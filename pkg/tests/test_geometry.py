import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from socnav.geometry import (
    HalfPlane,
    Polygon,
    Pose,
    Vec2,
    box,
    cast_rays,
    ear_clip,
    edge_array,
    point_in_polygon,
    point_segment_closest,
    point_to_halfplane_distance,
    point_to_polygon_distance,
    polygons_overlap,
    ray_cast,
    wrap_angle,
)

L_SHAPE = [(0, 0), (2, 0), (2, 1), (1, 1), (1, 2), (0, 2)]
coord = st.floats(-5, 5, allow_nan=False)


def test_clockwise_input_is_reversed():
    p = Polygon([(0, 0), (0, 1), (1, 1), (1, 0)])
    assert p.area == pytest.approx(1.0)


def test_degenerate_and_self_intersecting_rejected():
    with pytest.raises(ValueError):
        Polygon([(0, 0), (1, 1), (2, 2)])
    with pytest.raises(ValueError):
        Polygon([(0, 0), (1, 1), (1, 0), (0, 1)])  # bow tie
    with pytest.raises(ValueError):
        Polygon([(0, 0), (1, 0)])


def test_convex_flag():
    assert box(0, 0, 1, 1).convex
    assert not Polygon(L_SHAPE).convex


def test_ear_clip_area_matches_shoelace():
    tris = ear_clip(Polygon(L_SHAPE).vertices)
    assert len(tris) == 4
    tri_area = sum(abs((b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)) / 2 for a, b, c in tris)
    assert tri_area == pytest.approx(3.0)


def _grid_overlap(p: Polygon, q: Polygon, n=160):
    # rasterization oracle: some grid sample strictly inside both
    xs = [v.x for v in p.vertices + q.vertices]
    ys = [v.y for v in p.vertices + q.vertices]
    for x in np.linspace(min(xs), max(xs), n):
        for y in np.linspace(min(ys), max(ys), n):
            if point_in_polygon((x, y), p.vertices) and point_in_polygon((x, y), q.vertices):
                return True
    return False


@pytest.mark.parametrize("dx,dy,expect", [(0.5, 0.5, True), (1.4, 1.4, False), (1.2, 1.2, True), (1.5, 0.2, True), (3.0, 0.0, False)])
def test_nonconvex_overlap_against_raster(dx, dy, expect):
    p = Polygon(L_SHAPE)
    q = box(0, 0, 0.6, 0.6)
    got = polygons_overlap(p, None, q, Pose(dx, dy, 0.0))
    assert got == expect
    assert _grid_overlap(p, q.transformed(Pose(dx, dy, 0.0))) == expect


def test_touching_boxes_do_not_overlap():
    assert not polygons_overlap(box(0, 0, 1, 1), None, box(1, 0, 1, 1), None)
    assert polygons_overlap(box(0, 0, 1, 1), None, box(0.999, 0, 1, 1), None)


@settings(max_examples=60, deadline=None)
@given(coord, coord, st.floats(-math.pi, math.pi))
def test_overlap_symmetric(x, y, th):
    p, q = Polygon(L_SHAPE), box(0.3, 0.2, 1.0, 0.4)
    assert polygons_overlap(p, None, q, Pose(x, y, th)) == polygons_overlap(q, Pose(x, y, th), p, None)


@settings(max_examples=60, deadline=None)
@given(coord, coord, st.floats(-math.pi, math.pi))
def test_transform_is_rigid(x, y, th):
    p = Polygon(L_SHAPE)
    t = p.transformed(Pose(x, y, th))
    assert t.area == pytest.approx(p.area)
    assert t.convex == p.convex
    # the cached split moves with the polygon
    tri = sum(abs((b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)) / 2 for a, b, c in t.convex_parts())
    assert tri == pytest.approx(p.area)


def test_point_segment_closest_clamps():
    assert point_segment_closest((-1, 1), (0, 0), (2, 0)) == Vec2(0, 0)
    assert point_segment_closest((1, 1), (0, 0), (2, 0)) == Vec2(1, 0)
    assert point_segment_closest((3, -2), (0, 0), (2, 0)) == Vec2(2, 0)


@settings(max_examples=80, deadline=None)
@given(coord, coord)
def test_polygon_distance_matches_dense_boundary_sampling(x, y):
    p = Polygon(L_SHAPE)
    d = point_to_polygon_distance((x, y), p)
    if p.contains((x, y)):
        assert d == 0.0
        return
    pts = []
    for a, b in p.edges():
        t = np.linspace(0, 1, 2001)[:, None]
        pts.append(np.array(a) + t * (np.array(b) - np.array(a)))
    brute = np.min(np.hypot(*(np.vstack(pts) - (x, y)).T))
    assert d == pytest.approx(brute, abs=1e-3)
    assert d <= brute + 1e-12


def test_ray_hits_wall_at_known_distance():
    wall = box(3.0, 0.0, 0.2, 4.0)
    assert ray_cast((0, 0), (1, 0), [wall], 10.0) == pytest.approx(2.9)
    assert ray_cast((0, 0), (-1, 0), [wall], 10.0) == 10.0
    assert ray_cast((0, 0), (1, 0), [wall], 2.0) == 2.0


@settings(max_examples=40, deadline=None)
@given(coord, coord)
def test_vectorized_rays_match_scalar(x, y):
    obs = [Polygon(L_SHAPE), box(-2, 3, 1, 0.5)]
    ang = np.linspace(0, 2 * np.pi, 8, endpoint=False)
    dirs = np.stack([np.cos(ang), np.sin(ang)], 1)
    fast = cast_rays((x, y), dirs, edge_array(obs), 3.0)
    slow = [ray_cast((x, y), d, obs, 3.0) for d in dirs]
    assert fast == pytest.approx(slow, abs=1e-9)


def test_halfplane_distance_and_direction():
    h = HalfPlane(Vec2(1, 0), Vec2(1, 0))
    assert point_to_halfplane_distance((3, 5), h) == pytest.approx(2.0)
    assert point_to_halfplane_distance((0, 5), h) == pytest.approx(-1.0)
    d = h.direction
    # boundary direction is perpendicular and keeps the allowed side on its left
    assert d.dot(h.normal) == pytest.approx(0.0)
    assert d.cross(h.normal) > 0


@given(st.floats(-50, 50))
def test_wrap_angle_range(a):
    w = wrap_angle(a)
    assert -math.pi < w <= math.pi
    assert math.cos(w) == pytest.approx(math.cos(a), abs=1e-9)
