"""Exact 2-D primitives: vectors, segments, polygons, ray casting, overlap tests.

Hot paths (LP solver, constraint assembly) work on plain floats, so ``Vec2`` is a
NamedTuple rather than a numpy array.
"""
from __future__ import annotations

import math
from typing import Iterable, NamedTuple, Sequence

import numpy as np

EPS = 1e-9


class Vec2(NamedTuple):
    x: float
    y: float

    def __add__(self, other):  # type: ignore[override]
        return Vec2(self.x + other[0], self.y + other[1])

    def __sub__(self, other):
        return Vec2(self.x - other[0], self.y - other[1])

    def __mul__(self, k):  # type: ignore[override]
        return Vec2(self.x * k, self.y * k)

    __rmul__ = __mul__

    def __truediv__(self, k):
        return Vec2(self.x / k, self.y / k)

    def __neg__(self):
        return Vec2(-self.x, -self.y)

    def dot(self, other) -> float:
        return self.x * other[0] + self.y * other[1]

    def cross(self, other) -> float:
        return self.x * other[1] - self.y * other[0]

    def norm(self) -> float:
        return math.hypot(self.x, self.y)

    def norm_sq(self) -> float:
        return self.x * self.x + self.y * self.y

    def normalized(self) -> "Vec2":
        n = math.hypot(self.x, self.y)
        if n < 1e-12:
            return Vec2(0.0, 0.0)
        return Vec2(self.x / n, self.y / n)

    def rotated(self, angle: float) -> "Vec2":
        c, s = math.cos(angle), math.sin(angle)
        return Vec2(c * self.x - s * self.y, s * self.x + c * self.y)

    def perp(self) -> "Vec2":
        """Counterclockwise perpendicular."""
        return Vec2(-self.y, self.x)

    def angle(self) -> float:
        return math.atan2(self.y, self.x)


class Segment(NamedTuple):
    a: Vec2
    b: Vec2


class HalfPlane(NamedTuple):
    """Allowed region ``{v : (v - point) . normal >= 0}``."""

    point: Vec2
    normal: Vec2

    @property
    def direction(self) -> Vec2:
        # boundary direction with the allowed side on its left
        return Vec2(self.normal.y, -self.normal.x)


class Pose(NamedTuple):
    x: float
    y: float
    heading: float


def wrap_angle(a: float) -> float:
    """Wrap to (-pi, pi]."""
    a = math.fmod(a + math.pi, 2.0 * math.pi)
    if a <= 0.0:
        a += 2.0 * math.pi
    return a - math.pi


def signed_area(vertices: Sequence[Sequence[float]]) -> float:
    s = 0.0
    n = len(vertices)
    for i in range(n):
        x0, y0 = vertices[i]
        x1, y1 = vertices[(i + 1) % n]
        s += x0 * y1 - x1 * y0
    return 0.5 * s


def _segments_properly_cross(p1, p2, q1, q2) -> bool:
    d1 = _orient(q1, q2, p1)
    d2 = _orient(q1, q2, p2)
    d3 = _orient(p1, p2, q1)
    d4 = _orient(p1, p2, q2)
    return d1 * d2 < 0 and d3 * d4 < 0


def _orient(a, b, c) -> float:
    v = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
    if abs(v) <= EPS * EPS:
        return 0.0
    return v


class Polygon:
    """Simple polygon, stored counterclockwise.

    Clockwise input is reversed. Zero-area or self-intersecting input raises
    ``ValueError``.
    """

    __slots__ = ("vertices", "convex", "_parts")

    def __init__(self, vertices: Iterable[Sequence[float]]):
        verts = [Vec2(float(v[0]), float(v[1])) for v in vertices]
        if len(verts) < 3:
            raise ValueError("polygon needs at least 3 vertices")
        area = signed_area(verts)
        if abs(area) <= EPS:
            raise ValueError("degenerate (zero-area) polygon")
        if area < 0:
            verts.reverse()
        n = len(verts)
        for i in range(n):
            for j in range(i + 2, n):
                if i == 0 and j == n - 1:
                    continue
                if _segments_properly_cross(verts[i], verts[(i + 1) % n], verts[j], verts[(j + 1) % n]):
                    raise ValueError("self-intersecting polygon")
        self.vertices: tuple[Vec2, ...] = tuple(verts)
        self.convex = all(
            _orient(verts[i - 1], verts[i], verts[(i + 1) % n]) >= 0.0 for i in range(n)
        )
        self._parts: tuple[tuple[Vec2, ...], ...] | None = None

    def __repr__(self) -> str:
        return f"Polygon({[tuple(v) for v in self.vertices]})"

    def __eq__(self, other) -> bool:
        return isinstance(other, Polygon) and self.vertices == other.vertices

    def __hash__(self) -> int:
        return hash(self.vertices)

    @property
    def area(self) -> float:
        return signed_area(self.vertices)

    def edges(self) -> list[Segment]:
        v = self.vertices
        return [Segment(v[i], v[(i + 1) % len(v)]) for i in range(len(v))]

    def transformed(self, pose: Pose | Sequence[float]) -> "Polygon":
        # rigid motion: orientation, simplicity and the convex split all carry over
        x, y, th = pose
        c, s = math.cos(th), math.sin(th)

        def move(vs):
            return tuple(Vec2(x + c * v.x - s * v.y, y + s * v.x + c * v.y) for v in vs)

        out = object.__new__(Polygon)
        out.vertices = move(self.vertices)
        out.convex = self.convex
        parts = self.convex_parts()
        out._parts = (out.vertices,) if self.convex else tuple(move(t) for t in parts)
        return out

    def convex_parts(self) -> tuple[tuple[Vec2, ...], ...]:
        if self._parts is None:
            self._parts = (self.vertices,) if self.convex else tuple(ear_clip(self.vertices))
        return self._parts

    def contains(self, p: Sequence[float]) -> bool:
        return point_in_polygon(p, self.vertices)


def ear_clip(vertices: Sequence[Vec2]) -> list[tuple[Vec2, Vec2, Vec2]]:
    """Triangulate a simple CCW polygon by ear clipping."""
    idx = list(range(len(vertices)))
    tris: list[tuple[Vec2, Vec2, Vec2]] = []
    guard = 0
    while len(idx) > 3:
        guard += 1
        if guard > 10 * len(vertices) ** 2:
            raise ValueError("ear clipping failed; polygon not simple")
        m = len(idx)
        for k in range(m):
            a, b, c = vertices[idx[k - 1]], vertices[idx[k]], vertices[idx[(k + 1) % m]]
            if _orient(a, b, c) <= 0.0:
                continue
            if any(
                _point_in_triangle(vertices[j], a, b, c)
                for j in idx
                if vertices[j] not in (a, b, c)
            ):
                continue
            tris.append((a, b, c))
            del idx[k]
            break
        else:
            raise ValueError("ear clipping failed; polygon not simple")
    tris.append(tuple(vertices[i] for i in idx))  # type: ignore[arg-type]
    return tris


def _point_in_triangle(p, a, b, c) -> bool:
    return _orient(a, b, p) >= 0 and _orient(b, c, p) >= 0 and _orient(c, a, p) >= 0


def point_in_polygon(p: Sequence[float], vertices: Sequence[Sequence[float]]) -> bool:
    """Even-odd rule; boundary points may land either way."""
    x, y = p[0], p[1]
    inside = False
    n = len(vertices)
    for i in range(n):
        x0, y0 = vertices[i]
        x1, y1 = vertices[(i + 1) % n]
        if (y0 > y) != (y1 > y):
            xi = x0 + (y - y0) * (x1 - x0) / (y1 - y0)
            if xi > x:
                inside = not inside
    return inside


def point_segment_closest(p: Sequence[float], a: Sequence[float], b: Sequence[float]) -> Vec2:
    ax, ay = a[0], a[1]
    dx, dy = b[0] - ax, b[1] - ay
    L = dx * dx + dy * dy
    t = 0.0 if L <= 0.0 else ((p[0] - ax) * dx + (p[1] - ay) * dy) / L
    t = 0.0 if t < 0.0 else (1.0 if t > 1.0 else t)
    return Vec2(ax + t * dx, ay + t * dy)


def point_to_polygon_distance(p: Sequence[float], poly: Polygon) -> float:
    """Distance to the polygon region (0 inside)."""
    if poly.contains(p):
        return 0.0
    best = math.inf
    for a, b in poly.edges():
        q = point_segment_closest(p, a, b)
        d = math.hypot(p[0] - q.x, p[1] - q.y)
        if d < best:
            best = d
    return best


def ray_cast(
    origin: Sequence[float],
    direction: Sequence[float],
    obstacles: Iterable[Polygon],
    max_range: float,
) -> float:
    """Distance along a unit ray to the nearest obstacle edge, clamped to ``max_range``."""
    ox, oy = origin[0], origin[1]
    dx, dy = direction[0], direction[1]
    best = max_range
    for poly in obstacles:
        for a, b in poly.edges():
            ex, ey = b.x - a.x, b.y - a.y
            denom = dx * ey - dy * ex
            if abs(denom) <= EPS:
                continue
            wx, wy = a.x - ox, a.y - oy
            t = (wx * ey - wy * ex) / denom
            s = (wx * dy - wy * dx) / denom
            if t >= 0.0 and -EPS <= s <= 1.0 + EPS and t < best:
                best = t
    return max(0.0, best)


def edge_array(obstacles: Iterable[Polygon]) -> np.ndarray:
    """Stack obstacle edges as an (E, 4) array ``[ax, ay, bx, by]``."""
    rows = [(a.x, a.y, b.x, b.y) for poly in obstacles for a, b in poly.edges()]
    return np.asarray(rows, dtype=float).reshape(-1, 4)


def cast_rays(origin: Sequence[float], directions: np.ndarray, edges: np.ndarray, max_range: float) -> np.ndarray:
    """Vectorized ``ray_cast`` for many unit directions against a flat edge array."""
    out = np.full(len(directions), float(max_range))
    if len(edges) == 0:
        return out
    ax, ay = edges[:, 0] - origin[0], edges[:, 1] - origin[1]
    ex, ey = edges[:, 2] - edges[:, 0], edges[:, 3] - edges[:, 1]
    dx, dy = directions[:, 0:1], directions[:, 1:2]
    denom = dx * ey - dy * ex
    ok = np.abs(denom) > EPS
    safe = np.where(ok, denom, 1.0)
    t = (ax * ey - ay * ex) / safe
    s = (ax * dy - ay * dx) / safe
    hit = ok & (t >= 0.0) & (s >= -EPS) & (s <= 1.0 + EPS)
    t = np.where(hit, t, np.inf)
    return np.clip(np.minimum(out, t.min(axis=1)), 0.0, max_range)


def _sat_overlap(p: Sequence[Vec2], q: Sequence[Vec2]) -> bool:
    # separated (or merely touching within EPS) along any edge normal -> no overlap
    for poly in (p, q):
        n = len(poly)
        for i in range(n):
            a, b = poly[i], poly[(i + 1) % n]
            nx, ny = a.y - b.y, b.x - a.x
            L = math.hypot(nx, ny)
            nx, ny = nx / L, ny / L
            pmin = pmax = p[0].x * nx + p[0].y * ny
            for v in p[1:]:
                d = v.x * nx + v.y * ny
                if d < pmin:
                    pmin = d
                elif d > pmax:
                    pmax = d
            qmin = qmax = q[0].x * nx + q[0].y * ny
            for v in q[1:]:
                d = v.x * nx + v.y * ny
                if d < qmin:
                    qmin = d
                elif d > qmax:
                    qmax = d
            if pmax <= qmin + EPS or qmax <= pmin + EPS:
                return False
    return True


def polygons_overlap(
    p: Polygon,
    pose_a: Pose | Sequence[float] | None,
    q: Polygon,
    pose_b: Pose | Sequence[float] | None,
) -> bool:
    """True iff the interiors of ``p`` at ``pose_a`` and ``q`` at ``pose_b`` intersect.

    Non-convex polygons are split into ear-clipped triangles; touching boundaries
    (within ``EPS``) do not count as overlap.
    """
    pa = p.transformed(pose_a) if pose_a is not None else p
    qb = q.transformed(pose_b) if pose_b is not None else q
    return any(_sat_overlap(u, w) for u in pa.convex_parts() for w in qb.convex_parts())


def point_to_halfplane_distance(v: Sequence[float], h: HalfPlane) -> float:
    """Signed distance of ``v`` to the boundary of ``h``; positive inside."""
    return (v[0] - h.point.x) * h.normal.x + (v[1] - h.point.y) * h.normal.y


def box(cx: float, cy: float, w: float, h: float) -> Polygon:
    """Axis-aligned rectangle centered at (cx, cy)."""
    hw, hh = 0.5 * w, 0.5 * h
    return Polygon([(cx - hw, cy - hh), (cx + hw, cy - hh), (cx + hw, cy + hh), (cx - hw, cy + hh)])
