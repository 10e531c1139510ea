"""Differential-drive model: allowed holonomic velocities, tracking controller, arc integration."""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .geometry import Vec2, wrap_angle

HEADING_GAIN = 4.0  # k_psi, 1/s


@dataclass(frozen=True)
class ActionBounds:
    v_min: float = 0.01
    v_max: float = 0.20
    w_min: float = -2.5
    w_max: float = 2.5

    def clamp(self, v: float, w: float) -> tuple[float, float, bool]:
        cv = min(max(v, self.v_min), self.v_max)
        cw = min(max(w, self.w_min), self.w_max)
        return cv, cw, (cv != v or cw != w)


@dataclass(frozen=True)
class DiffDriveState:
    position: Vec2
    heading: float
    v: float = 0.0
    w: float = 0.0

    def velocity(self) -> Vec2:
        return Vec2(self.v * math.cos(self.heading), self.v * math.sin(self.heading))


@dataclass(frozen=True)
class AllowedVelocitySet:
    """Speed disc intersected with a forward wedge around the heading."""

    max_speed: float
    tracking_error: float
    forward_cone_halfangle: float = math.pi / 3

    def __post_init__(self):
        if self.max_speed <= 0:
            raise ValueError("max_speed must be positive")
        if self.tracking_error < 0:
            raise ValueError("tracking_error must be nonnegative")

    def contains(self, v_h: Sequence[float], heading: float, tol: float = 1e-9) -> bool:
        s = math.hypot(v_h[0], v_h[1])
        if s > self.max_speed + tol:
            return False
        if s <= tol:
            return True
        return abs(wrap_angle(math.atan2(v_h[1], v_h[0]) - heading)) <= self.forward_cone_halfangle + tol

    def project(self, v_h: Sequence[float], heading: float) -> Vec2:
        """Clamp speed to the disc and direction into the wedge (angular clamp keeps turning intent)."""
        s = math.hypot(v_h[0], v_h[1])
        if s <= 1e-12:
            return Vec2(0.0, 0.0)
        ang = wrap_angle(math.atan2(v_h[1], v_h[0]) - heading)
        a = self.forward_cone_halfangle
        ang = min(max(ang, -a), a)
        s = min(s, self.max_speed)
        return Vec2(s * math.cos(heading + ang), s * math.sin(heading + ang))


def track_holonomic(
    state: DiffDriveState,
    v_h: Sequence[float],
    bounds: ActionBounds = ActionBounds(),
    k_psi: float = HEADING_GAIN,
) -> tuple[float, float]:
    """Convert a holonomic velocity into a bounded (v, w) command."""
    speed = math.hypot(v_h[0], v_h[1])
    if speed <= 1e-12:
        return bounds.v_min, 0.0
    err = wrap_angle(math.atan2(v_h[1], v_h[0]) - state.heading)
    w = min(max(k_psi * err, bounds.w_min), bounds.w_max)
    v = min(max(speed * max(0.0, math.cos(err)), bounds.v_min), bounds.v_max)
    return v, w


def holonomic_from_action(state: DiffDriveState, action: Sequence[float], k_psi: float = HEADING_GAIN) -> Vec2:
    """Inverse of ``track_holonomic`` where it is invertible (unsaturated w)."""
    v, w = action
    err = w / k_psi
    speed = v / max(math.cos(err), 1e-6)
    a = state.heading + err
    return Vec2(speed * math.cos(a), speed * math.sin(a))


def integrate(
    state: DiffDriveState,
    action: Sequence[float],
    dt: float,
    bounds: ActionBounds | None = None,
) -> DiffDriveState:
    """Exact unicycle arc over ``dt``; straight line when |w| < 1e-6.

    With ``bounds`` given the action is clamped first.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    v, w = float(action[0]), float(action[1])
    if bounds is not None:
        v, w, _ = bounds.clamp(v, w)
    x, y = state.position
    th = state.heading
    if abs(w) < 1e-6:
        nx = x + v * dt * math.cos(th)
        ny = y + v * dt * math.sin(th)
    else:
        r = v / w
        nx = x + r * (math.sin(th + w * dt) - math.sin(th))
        ny = y - r * (math.cos(th + w * dt) - math.cos(th))
    return DiffDriveState(Vec2(nx, ny), wrap_angle(th + w * dt), v, w)


@lru_cache(maxsize=64)
def derive_tracking_error(
    max_speed: float,
    dt: float,
    bounds: ActionBounds = ActionBounds(),
    k_psi: float = HEADING_GAIN,
    cone_halfangle: float = math.pi / 3,
    samples: int = 121,
) -> float:
    """Worst one-tick deviation between the tracked arc and the holonomic displacement.

    Grid search over angle error in the wedge and speed in [0, max_speed], with the
    deviation measured at several points along the arc; a 2% margin covers the grid.
    """
    worst = 0.0
    start = DiffDriveState(Vec2(0.0, 0.0), 0.0)
    fracs = np.linspace(0.25, 1.0, 4)
    for ang in np.linspace(-cone_halfangle, cone_halfangle, samples):
        c, s = math.cos(ang), math.sin(ang)
        for speed in np.linspace(0.0, max_speed, 41):
            v_h = (speed * c, speed * s)
            act = track_holonomic(start, v_h, bounds, k_psi)
            for f in fracs:
                end = integrate(start, act, f * dt)
                d = math.hypot(end.position.x - v_h[0] * f * dt, end.position.y - v_h[1] * f * dt)
                worst = max(worst, d)
    return worst * 1.02
