"""Priority-weighted ORCA: velocity obstacles, half-plane allocation and the 2-D/3-D LPs."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

from .geometry import EPS, HalfPlane, Polygon, Vec2, point_segment_closest

__all__ = [
    "HalfPlane",
    "VOQuery",
    "PrioritySplit",
    "OrcaConstraintSet",
    "OrcaParams",
    "vo_contains",
    "compute_u_and_n",
    "priority_halfplane",
    "assemble_constraints",
    "forward_cone_halfplanes",
    "lp2",
    "lp3",
    "max_violation",
]


class VOQuery(NamedTuple):
    rel_position: Vec2  # p_j - p_i
    rel_opt_velocity: Vec2  # v_i^opt - v_j^opt
    combined_radius: float
    tau: float


class PrioritySplit(NamedTuple):
    pr_i: float
    pr_j: float

    @property
    def share(self) -> float:
        """Fraction of the avoidance adjustment agent i takes on."""
        return self.pr_j / (self.pr_i + self.pr_j)


@dataclass(frozen=True)
class OrcaConstraintSet:
    """Half-planes plus the speed disc (and optionally a forward cone).

    ``fixed[k]`` marks constraints that lp3 never relaxes (static obstacles).
    """

    halfplanes: tuple[HalfPlane, ...]
    max_speed: float
    forward_only: bool = False
    heading: float = 0.0
    cone_halfangle: float = math.pi / 3
    fixed: tuple[bool, ...] = ()

    def __post_init__(self):
        if self.max_speed <= 0:
            raise ValueError("max_speed must be positive")
        if not self.fixed:
            object.__setattr__(self, "fixed", (False,) * len(self.halfplanes))
        if len(self.fixed) != len(self.halfplanes):
            raise ValueError("fixed flags must match halfplanes")

    def lines(self) -> tuple[list[HalfPlane], list[bool]]:
        """All half-planes in processing order, cone half-planes last."""
        hps = list(self.halfplanes)
        fixed = list(self.fixed)
        if self.forward_only:
            hps.extend(forward_cone_halfplanes(self.heading, self.cone_halfangle))
            fixed.extend((True, True))
        return hps, fixed

    def satisfied_by(self, v: Sequence[float], tol: float = EPS) -> bool:
        if v[0] * v[0] + v[1] * v[1] > (self.max_speed + tol) ** 2:
            return False
        hps, _ = self.lines()
        return all(_dist(v, h) >= -tol for h in hps)


@dataclass(frozen=True)
class OrcaParams:
    tau: float = 4.0
    tau_obst: float = 2.0
    dt: float = 0.2
    tracking_error: float = 0.0
    max_speed: float = 0.2
    forward_only: bool = True
    cone_halfangle: float = math.pi / 3
    obstacle_margin: float = 0.05
    equal_responsibility: bool = False  # reference path: plain ORCA, u/2 each


def _dist(v, h: HalfPlane) -> float:
    return (v[0] - h.point[0]) * h.normal[0] + (v[1] - h.point[1]) * h.normal[1]


def _det(ax, ay, bx, by) -> float:
    return ax * by - ay * bx


def vo_contains(q: VOQuery, v: Sequence[float]) -> bool:
    """True iff some ``t`` in (0, tau] puts ``t * v`` inside the open collision disc."""
    px, py = q.rel_position
    vx, vy = v[0], v[1]
    vv = vx * vx + vy * vy
    r2 = q.combined_radius * q.combined_radius
    if vv == 0.0:
        return px * px + py * py < r2
    t = (px * vx + py * vy) / vv
    if t <= 0.0:
        t = 0.0
    elif t > q.tau:
        t = q.tau
    dx, dy = t * vx - px, t * vy - py
    return t > 0.0 and dx * dx + dy * dy < r2


def compute_u_and_n(q: VOQuery) -> tuple[Vec2, Vec2]:
    """Minimum change ``u`` taking the relative velocity to the VO boundary, and the outward normal there.

    The truncated cone: cutoff disc of radius R/tau at p/tau, plus two tangent legs.
    """
    px, py = q.rel_position
    vx, vy = q.rel_opt_velocity
    R = q.combined_radius
    inv_tau = 1.0 / q.tau
    dist_sq = px * px + py * py
    r_sq = R * R
    if dist_sq <= r_sq:
        raise ValueError("agents interpenetrate; use the recovery branch")
    wx, wy = vx - inv_tau * px, vy - inv_tau * py
    w_sq = wx * wx + wy * wy
    dot1 = wx * px + wy * py
    if dot1 < 0.0 and dot1 * dot1 > r_sq * w_sq:
        # cutoff disc sector
        w_len = math.sqrt(w_sq)
        ux, uy = wx / w_len, wy / w_len
        k = R * inv_tau - w_len
        return Vec2(k * ux, k * uy), Vec2(ux, uy)
    leg = math.sqrt(dist_sq - r_sq)
    if _det(px, py, wx, wy) > 0.0:
        dx = (px * leg - py * R) / dist_sq
        dy = (px * R + py * leg) / dist_sq
    else:
        dx = -(px * leg + py * R) / dist_sq
        dy = -(-px * R + py * leg) / dist_sq
    dot2 = vx * dx + vy * dy
    u = Vec2(dot2 * dx - vx, dot2 * dy - vy)
    # allowed side lies to the left of the leg direction
    return u, Vec2(-dy, dx)


def _recovery_u_and_n(q: VOQuery, dt: float) -> tuple[Vec2, Vec2]:
    # already within combined radius: separate within one time step
    px, py = q.rel_position
    vx, vy = q.rel_opt_velocity
    inv_dt = 1.0 / dt
    wx, wy = vx - inv_dt * px, vy - inv_dt * py
    w_len = math.hypot(wx, wy)
    if w_len < 1e-12:
        d = math.hypot(px, py)
        wx, wy, w_len = (-px / d, -py / d, 1.0) if d > 1e-12 else (1.0, 0.0, 1.0)
        ux, uy = wx, wy
        k = q.combined_radius * inv_dt
    else:
        ux, uy = wx / w_len, wy / w_len
        k = q.combined_radius * inv_dt - w_len
    return Vec2(k * ux, k * uy), Vec2(ux, uy)


def priority_halfplane(v_opt_i: Sequence[float], u: Sequence[float], n: Sequence[float], split: PrioritySplit) -> HalfPlane:
    s = split.pr_j / (split.pr_i + split.pr_j)
    return HalfPlane(Vec2(v_opt_i[0] + s * u[0], v_opt_i[1] + s * u[1]), Vec2(n[0], n[1]))


def forward_cone_halfplanes(heading: float, halfangle: float) -> tuple[HalfPlane, HalfPlane]:
    """Wedge of velocities within ``halfangle`` (<= pi/2) of ``heading``, as two half-planes through 0."""
    a = heading + halfangle - 0.5 * math.pi
    b = heading - halfangle + 0.5 * math.pi
    origin = Vec2(0.0, 0.0)
    return HalfPlane(origin, Vec2(math.cos(a), math.sin(a))), HalfPlane(origin, Vec2(math.cos(b), math.sin(b)))


def assemble_constraints(
    position: Sequence[float],
    priority: float,
    radius: float,
    v_opt: Sequence[float],
    neighbors: Sequence,
    obstacles: Sequence[Polygon],
    params: OrcaParams,
    heading: float = 0.0,
) -> OrcaConstraintSet:
    """Build the agent's ORCA constraint set for this tick.

    ``neighbors`` items need ``p``, ``v``, ``r_safe`` and ``pr``; their observed
    velocity stands in for their optimization velocity. ``radius`` is the agent's
    safety radius; both radii are inflated by ``params.tracking_error``.
    """
    px, py = position[0], position[1]
    eps = params.tracking_error
    r_i = radius + eps
    hps: list[HalfPlane] = []
    fixed: list[bool] = []

    ordered = sorted(
        neighbors,
        key=lambda nb: (nb.p[0] - px) ** 2 + (nb.p[1] - py) ** 2,
    )
    v_opt = Vec2(v_opt[0], v_opt[1])
    for nb in ordered:
        rel_p = Vec2(nb.p[0] - px, nb.p[1] - py)
        rel_v = Vec2(v_opt.x - nb.v[0], v_opt.y - nb.v[1])
        q = VOQuery(rel_p, rel_v, r_i + nb.r_safe + eps, params.tau)
        if rel_p.norm_sq() > q.combined_radius * q.combined_radius:
            u, n = compute_u_and_n(q)
        else:
            u, n = _recovery_u_and_n(q, params.dt)
        if params.equal_responsibility:
            hps.append(HalfPlane(Vec2(v_opt.x + 0.5 * u.x, v_opt.y + 0.5 * u.y), n))
        else:
            hps.append(priority_halfplane(v_opt, u, n, PrioritySplit(priority, nb.pr)))
        fixed.append(False)

    reach = r_i + params.tau_obst * params.max_speed + params.obstacle_margin
    for poly in obstacles:
        for a, b in poly.edges():
            hp = _edge_halfplane(px, py, a, b, r_i, reach, params)
            if hp is not None:
                hps.append(hp)
                fixed.append(True)

    return OrcaConstraintSet(
        tuple(hps),
        params.max_speed,
        forward_only=params.forward_only,
        heading=heading,
        cone_halfangle=params.cone_halfangle,
        fixed=tuple(fixed),
    )


def _edge_halfplane(px, py, a: Vec2, b: Vec2, r: float, reach: float, params: OrcaParams) -> HalfPlane | None:
    # The supporting line at the edge's closest point keeps the whole edge on one side,
    # so {v : (p + t v - q) . n >= r for t <= tau_obst} is collision-free w.r.t. the edge.
    q = point_segment_closest((px, py), a, b)
    dx, dy = px - q.x, py - q.y
    d = math.hypot(dx, dy)
    if d >= reach:
        return None
    if d < 1e-12:
        ex, ey = b.x - a.x, b.y - a.y
        L = math.hypot(ex, ey)
        nx, ny = ey / L, -ex / L  # outward for CCW polygons
    else:
        nx, ny = dx / d, dy / d
    if d > r:
        k = -(d - r) / params.tau_obst
    else:
        k = (r - d) / params.dt
    return HalfPlane(Vec2(k * nx, k * ny), Vec2(nx, ny))


# --- linear programs -----------------------------------------------------------------


def _lp1(lines: Sequence[HalfPlane], k: int, radius: float, opt: Vec2, direction_opt: bool) -> Vec2 | None:
    line = lines[k]
    (lpx, lpy), (nx, ny) = line
    dx, dy = ny, -nx
    dot = lpx * dx + lpy * dy
    disc = dot * dot + radius * radius - (lpx * lpx + lpy * lpy)
    if disc < -EPS:
        return None
    sq = math.sqrt(max(disc, 0.0))
    t_left = -dot - sq
    t_right = -dot + sq
    for i in range(k):
        (opx, opy), (onx, ony) = lines[i]
        odx, ody = ony, -onx
        denom = dx * ody - dy * odx
        numer = odx * (lpy - opy) - ody * (lpx - opx)
        if abs(denom) <= EPS:
            if numer < -EPS:
                return None
            continue
        t = numer / denom
        if denom >= 0.0:
            t_right = min(t_right, t)
        else:
            t_left = max(t_left, t)
        if t_left > t_right + EPS:
            return None
    if t_left > t_right:
        t_left = t_right = 0.5 * (t_left + t_right)
    if direction_opt:
        t = t_right if opt.x * dx + opt.y * dy > 0.0 else t_left
    else:
        t = dx * (opt.x - lpx) + dy * (opt.y - lpy)
        if t < t_left:
            t = t_left
        elif t > t_right:
            t = t_right
    return Vec2(lpx + t * dx, lpy + t * dy)


def _lp2(lines: Sequence[HalfPlane], radius: float, opt: Vec2, direction_opt: bool) -> tuple[Vec2, int]:
    if direction_opt:
        result = Vec2(opt.x * radius, opt.y * radius)
    elif opt.x * opt.x + opt.y * opt.y > radius * radius:
        n = math.hypot(opt.x, opt.y)
        result = Vec2(opt.x / n * radius, opt.y / n * radius)
    else:
        result = opt
    for i, h in enumerate(lines):
        if _dist(result, h) < 0.0:
            nxt = _lp1(lines, i, radius, opt, direction_opt)
            if nxt is None:
                return result, i
            result = nxt
    return result, len(lines)


def lp2(constraints: OrcaConstraintSet, v_preferred: Sequence[float]) -> Vec2 | None:
    """Closest velocity to ``v_preferred`` satisfying every half-plane and the speed disc.

    Returns ``None`` when the feasible region is empty.
    """
    lines, _ = constraints.lines()
    result, fail = _lp2(lines, constraints.max_speed, Vec2(v_preferred[0], v_preferred[1]), False)
    return result if fail == len(lines) else None


def lp3(constraints: OrcaConstraintSet) -> Vec2:
    """Minimize the largest half-plane violation over the speed disc.

    Fixed (obstacle/cone) constraints stay hard unless they are infeasible on
    their own, in which case everything is relaxed.
    """
    lines, fixed = constraints.lines()
    hard = [h for h, f in zip(lines, fixed) if f]
    soft = [h for h, f in zip(lines, fixed) if not f]
    radius = constraints.max_speed
    origin = Vec2(0.0, 0.0)
    _, hard_fail = _lp2(hard, radius, origin, False)
    if hard_fail < len(hard):
        hard, soft = [], hard + soft
    ordered = hard + soft
    result, fail = _lp2(ordered, radius, origin, False)
    if fail == len(ordered):
        return result
    return _lp3(ordered, len(hard), fail, radius, result)


def _lp3(lines: list[HalfPlane], n_hard: int, begin: int, radius: float, result: Vec2) -> Vec2:
    distance = 0.0
    for i in range(begin, len(lines)):
        if -_dist(result, lines[i]) > distance:
            li = lines[i]
            di = li.direction
            proj: list[HalfPlane] = list(lines[:n_hard])
            for j in range(n_hard, i):
                lj = lines[j]
                dj = lj.direction
                det = _det(di.x, di.y, dj.x, dj.y)
                if abs(det) <= EPS:
                    if di.x * dj.x + di.y * dj.y > 0.0:
                        continue
                    point = Vec2(0.5 * (li.point.x + lj.point.x), 0.5 * (li.point.y + lj.point.y))
                else:
                    s = _det(dj.x, dj.y, li.point.x - lj.point.x, li.point.y - lj.point.y) / det
                    point = Vec2(li.point.x + s * di.x, li.point.y + s * di.y)
                ddx, ddy = dj.x - di.x, dj.y - di.y
                L = math.hypot(ddx, ddy)
                ddx, ddy = ddx / L, ddy / L
                # direction -> normal (allowed side on the left)
                proj.append(HalfPlane(point, Vec2(-ddy, ddx)))
            temp = result
            cand, fail = _lp2(proj, radius, li.normal, True)
            result = cand if fail == len(proj) else temp
            distance = -_dist(result, lines[i])
    return result


def max_violation(constraints: OrcaConstraintSet, v: Sequence[float], include_fixed: bool = False) -> float:
    """Largest positive part of the half-plane violation at ``v``."""
    lines, fixed = constraints.lines()
    worst = 0.0
    for h, f in zip(lines, fixed):
        if f and not include_fixed:
            continue
        worst = max(worst, -_dist(v, h))
    return worst
