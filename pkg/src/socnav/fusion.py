"""Per-tick execution policy: combine the learned action with the priority-ORCA constraint set."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Sequence

from .geometry import Polygon, Vec2
from .kinematics import AllowedVelocitySet, HEADING_GAIN, holonomic_from_action, track_holonomic
from .orca import OrcaConstraintSet, OrcaParams, assemble_constraints, lp2, lp3, max_violation
from .state import AgentState


class Mode(str, Enum):
    ORCA_DRL = "orca-drl"
    PURE_DRL = "pure-drl"
    PURE_ORCA = "pure-orca"

    @property
    def uses_network(self) -> bool:
        return self is not Mode.PURE_ORCA


class Case(str, Enum):
    CASE1 = "1"
    CASE2 = "2"
    CASE3 = "3"
    NONE = "-"  # fusion bypassed


@dataclass(frozen=True)
class FusionDecision:
    case: Case
    v_rl: Vec2
    v_final: Vec2
    constraint_count: int
    max_violation: float


def fuse(v_rl: Sequence[float], constraints: OrcaConstraintSet) -> FusionDecision:
    """Keep ``v_rl`` if it satisfies every constraint, else project (lp2), else minimax (lp3)."""
    v_rl = Vec2(v_rl[0], v_rl[1])
    n = len(constraints.halfplanes)
    if constraints.satisfied_by(v_rl):
        return FusionDecision(Case.CASE1, v_rl, v_rl, n, 0.0)
    v = lp2(constraints, v_rl)
    if v is not None:
        return FusionDecision(Case.CASE2, v_rl, v, n, 0.0)
    v = lp3(constraints)
    return FusionDecision(Case.CASE3, v_rl, v, n, max_violation(constraints, v))


def preferred_velocity(agent: AgentState, dt: float) -> Vec2:
    """Straight toward the goal at the preferred speed, slowing so as not to overshoot."""
    gx, gy = agent.d_g.x - agent.p.x, agent.d_g.y - agent.p.y
    d = math.hypot(gx, gy)
    if d <= 1e-12:
        return Vec2(0.0, 0.0)
    s = min(agent.v_pref, d / dt)
    return Vec2(gx / d * s, gy / d * s)


def step_policy(
    mode: Mode,
    agent: AgentState,
    neighbors: Sequence,
    obstacles: Sequence[Polygon],
    params: OrcaParams,
    rl_action: Sequence[float] | None = None,
    k_psi: float = HEADING_GAIN,
) -> tuple[tuple[float, float], FusionDecision | None]:
    """One agent's (v, w) command for this tick.

    ``rl_action`` is the network's squashed action, required for the two
    network modes. PURE_ORCA solves ORCA with the current velocity as the
    optimization velocity and the goal-directed preferred velocity as target.
    """
    mode = Mode(mode)
    if mode.uses_network and rl_action is None:
        raise ValueError(f"mode {mode.value} needs a network action")
    if mode is Mode.PURE_DRL:
        v, w, _ = agent.bounds.clamp(float(rl_action[0]), float(rl_action[1]))
        return (v, w), None

    p = params if params.max_speed == agent.bounds.v_max else replace(params, max_speed=agent.bounds.v_max)
    kin = agent.kinematic()
    if mode is Mode.PURE_ORCA:
        cons = assemble_constraints(agent.p, agent.pr, agent.r_safe, agent.v, neighbors, obstacles, p, agent.psi)
        target = preferred_velocity(agent, p.dt)
        v_final = lp2(cons, target)
        if v_final is not None:
            dec = FusionDecision(Case.CASE2 if v_final != target else Case.CASE1, target, v_final, len(cons.halfplanes), 0.0)
        else:
            v_final = lp3(cons)
            dec = FusionDecision(Case.CASE3, target, v_final, len(cons.halfplanes), max_violation(cons, v_final))
        return track_holonomic(kin, v_final, agent.bounds, k_psi), dec

    # ORCA_DRL: the network action becomes the optimization velocity
    ahv = AllowedVelocitySet(p.max_speed, p.tracking_error, p.cone_halfangle)
    raw = holonomic_from_action(kin, rl_action, k_psi)
    v_h = raw if ahv.contains(raw, agent.psi) else ahv.project(raw, agent.psi)
    cons = assemble_constraints(agent.p, agent.pr, agent.r_safe, v_h, neighbors, obstacles, p, agent.psi)
    dec = fuse(v_h, cons)
    if dec.case is Case.CASE1 and v_h is raw:
        v, w, _ = agent.bounds.clamp(float(rl_action[0]), float(rl_action[1]))
        return (v, w), dec
    return track_holonomic(kin, dec.v_final, agent.bounds, k_psi), dec
