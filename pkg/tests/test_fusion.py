import math
from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from socnav.fusion import Case, Mode, fuse, preferred_velocity, step_policy
from socnav.geometry import HalfPlane, Vec2
from socnav.oracles import grid_lp2, grid_lp3, random_halfplanes
from socnav.orca import OrcaConstraintSet, OrcaParams
from socnav.state import AgentState


def agent(p=(0.0, 0.0), goal=(3.0, 0.0), psi=0.0, speed=0.15, pr=1.0):
    v = Vec2(speed * math.cos(psi), speed * math.sin(psi))
    return AgentState(Vec2(*goal), Vec2(*p), v, 0.2, psi, pr=pr, speed=speed)


def test_case1_empty_scene():
    d = fuse((0.1, 0.05), OrcaConstraintSet((), 0.2))
    assert d.case is Case.CASE1
    assert d.v_final == d.v_rl


def test_case2_is_oracle_projection():
    h = HalfPlane(Vec2(0.05, 0.0), Vec2(-1.0, 0.0))  # v.x <= 0.05
    c = OrcaConstraintSet((h,), 0.2)
    d = fuse((0.15, 0.02), c)
    assert d.case is Case.CASE2
    ref, res = grid_lp2([h], 0.2, (0.15, 0.02))
    assert math.hypot(d.v_final.x - ref.x, d.v_final.y - ref.y) <= 2 * res
    assert c.satisfied_by(d.v_final, tol=1e-9)


def test_case3_equalizes():
    hs = (HalfPlane(Vec2(0.0, 0.1), Vec2(0.0, 1.0)), HalfPlane(Vec2(0.0, -0.1), Vec2(0.0, -1.0)))
    c = OrcaConstraintSet(hs, 0.2)
    d = fuse((0.1, 0.0), c)
    assert d.case is Case.CASE3
    _, ref_v, res = grid_lp3(list(hs), 0.2)
    assert d.max_violation <= ref_v + 2 * res
    assert d.max_violation == pytest.approx(0.1)


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 10**6), st.floats(-0.14, 0.14), st.floats(-0.14, 0.14))
def test_case1_case2_satisfy_all_constraints(seed, vx, vy):
    rng = np.random.default_rng(seed)
    c = OrcaConstraintSet(tuple(random_halfplanes(rng)), 0.2)
    d = fuse((vx, vy), c)
    if d.case is Case.CASE1:
        assert d.v_final == Vec2(vx, vy)
    if d.case in (Case.CASE1, Case.CASE2):
        assert c.satisfied_by(d.v_final, tol=1e-9)


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 10**6), st.floats(-0.14, 0.14), st.floats(-0.14, 0.14))
def test_adding_constraint_never_turns_case2_into_case1(seed, vx, vy):
    rng = np.random.default_rng(seed)
    hs = random_halfplanes(rng)
    base = fuse((vx, vy), OrcaConstraintSet(tuple(hs[:-1]), 0.2))
    more = fuse((vx, vy), OrcaConstraintSet(tuple(hs), 0.2))
    if base.case is Case.CASE2:
        assert more.case is not Case.CASE1


def test_preferred_velocity_slows_near_goal():
    a = agent(p=(2.99, 0.0))
    v = preferred_velocity(a, 0.2)
    assert v.x == pytest.approx(0.05)
    assert preferred_velocity(agent(), 0.2) == pytest.approx(Vec2(0.2, 0.0))


def test_pure_drl_bypasses_fusion():
    (v, w), d = step_policy(Mode.PURE_DRL, agent(), [], [], OrcaParams(), (0.5, 4.0))
    assert (v, w) == (0.2, 2.5)
    assert d is None


def test_network_modes_need_action():
    with pytest.raises(ValueError):
        step_policy(Mode.ORCA_DRL, agent(), [], [], OrcaParams())


def test_orca_drl_free_space_keeps_action():
    (v, w), d = step_policy(Mode.ORCA_DRL, agent(), [], [], OrcaParams(), (0.12, 0.3))
    assert d.case is Case.CASE1
    assert (v, w) == (0.12, 0.3)


def test_orca_drl_head_on_corrects_action():
    other = SimpleNamespace(p=Vec2(0.6, 0.0), v=Vec2(-0.15, 0.0), r_safe=0.105, pr=1.0)
    (v, w), d = step_policy(Mode.ORCA_DRL, agent(), [other], [], OrcaParams(), (0.2, 0.0))
    assert d.case in (Case.CASE2, Case.CASE3)
    assert d.v_final != d.v_rl


@pytest.mark.parametrize("seed", range(20))
def test_uniform_priority_pure_orca_is_bit_exact(seed):
    rng = np.random.default_rng(seed)
    me = agent(p=tuple(rng.uniform(-1, 1, 2)), psi=rng.uniform(-math.pi, math.pi))
    nbs = []
    for _ in range(3):
        t, r = rng.uniform(0, 2 * math.pi), rng.uniform(0.3, 1.2)
        p = Vec2(me.p.x + r * math.cos(t), me.p.y + r * math.sin(t))
        nbs.append(SimpleNamespace(p=p, v=Vec2(*rng.uniform(-0.2, 0.2, 2)), r_safe=0.105, pr=1.0))
    a, da = step_policy(Mode.PURE_ORCA, me, nbs, [], OrcaParams())
    b, db = step_policy(Mode.PURE_ORCA, me, nbs, [], OrcaParams(equal_responsibility=True))
    assert a == b
    assert da == db
