"""Agent state records shared by the simulator, ORCA assembly and the policy."""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .geometry import Vec2
from .kinematics import ActionBounds, DiffDriveState


class Failure(str, Enum):
    NONE = "none"
    COL_ROBOT = "col_robot"
    COL_OBST = "col_obst"
    TIMEOUT = "timeout"
    ROTATE_IN_PLACE = "rotate_in_place"


@dataclass
class AgentState:
    d_g: Vec2
    p: Vec2
    v: Vec2
    v_pref: float
    psi: float
    r_safe: float = 0.105
    pr: float = 1.0
    arrived: bool = False
    failed: Failure = Failure.NONE
    # bookkeeping beyond the observable internal state
    speed: float = 0.0
    omega: float = 0.0
    bounds: ActionBounds = ActionBounds()
    start: Vec2 = Vec2(0.0, 0.0)

    def __post_init__(self):
        if self.r_safe <= 0:
            raise ValueError("r_safe must be positive")
        if self.pr <= 0:
            raise ValueError("priority must be positive")

    @property
    def alive(self) -> bool:
        return not self.arrived and self.failed is Failure.NONE

    @property
    def outcome(self) -> str:
        if self.arrived:
            return "success"
        if self.failed is Failure.NONE:
            return "running"
        return self.failed.value

    def kinematic(self) -> DiffDriveState:
        return DiffDriveState(self.p, self.psi, self.speed, self.omega)

    def observed(self) -> "ObservedAgent":
        return ObservedAgent(self.p, self.v, self.r_safe, self.psi, self.pr)

    def goal_distance(self) -> float:
        return math.hypot(self.d_g.x - self.p.x, self.d_g.y - self.p.y)


@dataclass(frozen=True)
class ObservedAgent:
    """What another agent sees: position, velocity, radius, heading, priority."""

    p: Vec2
    v: Vec2
    r_safe: float
    psi: float
    pr: float
