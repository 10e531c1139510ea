"""Asymmetric social-norm region, its overlap penalty, and pass/overtake side classification.

Body frame: x forward, y to the left. The region is wider on the right so that
keeping right costs less lateral clearance than keeping left.
"""
from __future__ import annotations

import math
from enum import Enum
from typing import Sequence

import numpy as np

from .geometry import Polygon, Pose, Vec2, point_segment_closest, polygons_overlap

NORM_PENALTY = -2.0
INTERACTION_RADIUS = 1.0

DEFAULT_NORM_VERTICES = (
    (0.07, 0.126),
    (0.21, 0.07),
    (0.21, -0.07),
    (0.07, -0.182),
    (-0.14, -0.07),
    (-0.14, 0.07),
)


class Side(str, Enum):
    LEFT = "left"
    RIGHT = "right"
    NONE = "none"


def default_norm_polygon() -> Polygon:
    return Polygon(DEFAULT_NORM_VERTICES)


def norm_reward(
    pose_i: Pose,
    poly_i: Polygon,
    others: Sequence[tuple[Pose, Polygon]],
    mode: str = "overlap",
    penalty: float = NORM_PENALTY,
) -> float:
    """``penalty`` if any other agent intrudes on agent i's region, else 0.

    ``mode="overlap"`` tests region against region; ``mode="point"`` tests whether
    another agent's center lies in agent i's region.
    """
    if mode == "overlap":
        hit = any(polygons_overlap(poly_i, pose_i, q, pose_j) for pose_j, q in others)
    elif mode == "point":
        region = poly_i.transformed(pose_i)
        hit = any(region.contains((pose_j[0], pose_j[1])) for pose_j, _ in others)
    else:
        raise ValueError(f"unknown norm mode {mode!r}")
    return penalty if hit else 0.0


def norm_penalties(
    poses: Sequence[Pose],
    polys: Sequence[Polygon],
    mode: str = "overlap",
    penalty: float = NORM_PENALTY,
    reach: float = 0.8,
) -> list[float]:
    """Per-agent norm reward for one tick; pairs farther apart than ``reach`` are skipped."""
    n = len(poses)
    hit = [False] * n
    if mode == "overlap":
        placed: dict[int, Polygon] = {}
        for i in range(n):
            for j in range(i + 1, n):
                if math.hypot(poses[i][0] - poses[j][0], poses[i][1] - poses[j][1]) > reach:
                    continue
                for k in (i, j):
                    if k not in placed:
                        placed[k] = polys[k].transformed(poses[k])
                if polygons_overlap(placed[i], None, placed[j], None):
                    hit[i] = hit[j] = True
    else:
        for i in range(n):
            others = [(poses[j], polys[j]) for j in range(n) if j != i]
            hit[i] = norm_reward(poses[i], polys[i], others, mode) != 0.0
    return [penalty if h else 0.0 for h in hit]


def _headings(traj: np.ndarray) -> np.ndarray:
    d = np.diff(traj, axis=0)
    d = np.vstack([d, d[-1:]]) if len(d) else np.zeros((1, 2))
    # carry the last nonzero direction over stationary ticks
    out = np.zeros_like(d)
    last = np.array([1.0, 0.0])
    for k in range(len(d) - 1, -1, -1):
        nrm = np.hypot(*d[k])
        if nrm > 1e-12:
            last = d[k] / nrm
        out[k] = last
    return out


def classify_pass_side(traj_i: Sequence, traj_j: Sequence, threshold: float = INTERACTION_RADIUS) -> Side:
    """Which way agent i kept when passing j.

    At the tick of closest approach: j on i's left means i kept RIGHT.
    """
    a = np.asarray(traj_i, dtype=float)
    b = np.asarray(traj_j, dtype=float)
    n = min(len(a), len(b))
    if n == 0:
        return Side.NONE
    a, b = a[:n], b[:n]
    d = np.hypot(*(b - a).T)
    k = int(np.argmin(d))
    if d[k] > threshold:
        return Side.NONE
    h = _headings(a)[k]
    rel = b[k] - a[k]
    cross = h[0] * rel[1] - h[1] * rel[0]
    if cross > 0:
        return Side.RIGHT
    if cross < 0:
        return Side.LEFT
    return Side.NONE


def classify_overtake_side(traj_fast: Sequence, traj_slow: Sequence, threshold: float = INTERACTION_RADIUS) -> Side:
    """Side on which the faster agent passed the slower one, in the slower agent's frame.

    Evaluated at the first tick where the fast agent's along-track coordinate
    overtakes the slow agent's.
    """
    f = np.asarray(traj_fast, dtype=float)
    s = np.asarray(traj_slow, dtype=float)
    n = min(len(f), len(s))
    if n < 2:
        return Side.NONE
    f, s = f[:n], s[:n]
    hs = _headings(s)
    rel = f - s
    along = np.einsum("ij,ij->i", rel, hs)
    lateral = hs[:, 0] * rel[:, 1] - hs[:, 1] * rel[:, 0]
    for k in range(1, n):
        if along[k - 1] < 0.0 <= along[k]:
            if np.hypot(*rel[k]) > threshold:
                return Side.NONE
            return Side.LEFT if lateral[k] > 0 else Side.RIGHT
    return Side.NONE


def circling_clearance(poly: Polygon, clockwise: bool, hi: float = 2.0, iters: int = 50) -> float:
    """Smallest circle radius at which two agents circling diametrically opposite keep regions apart."""
    def overlaps(r: float) -> bool:
        # agent A at (0, -r), agent B at (0, r); both tangent in the same rotational sense
        ha = math.pi if clockwise else 0.0
        hb = 0.0 if clockwise else math.pi
        return polygons_overlap(poly, Pose(0.0, -r, ha), poly, Pose(0.0, r, hb))

    lo = 0.0
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if overlaps(mid):
            lo = mid
        else:
            hi = mid
    return hi


def lateral_extents(poly: Polygon) -> tuple[float, float]:
    """(left width, right width) of a body-frame region."""
    ys = [v.y for v in poly.vertices]
    return max(ys), -min(ys)


def min_edge_clearance(poly: Polygon, center: Vec2 = Vec2(0.0, 0.0)) -> float:
    """Distance from ``center`` to the nearest boundary edge."""
    best = math.inf
    for a, b in poly.edges():
        q = point_segment_closest(center, a, b)
        best = min(best, math.hypot(q.x - center.x, q.y - center.y))
    return best
