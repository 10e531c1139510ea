import math
from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from socnav.geometry import HalfPlane, Vec2, box, point_to_polygon_distance
from socnav.oracles import grid_lp2, grid_lp3, run_lp2_suite, run_lp3_suite, vo_escape_distance, vo_hit
from socnav.orca import (
    OrcaConstraintSet,
    OrcaParams,
    PrioritySplit,
    VOQuery,
    assemble_constraints,
    compute_u_and_n,
    forward_cone_halfplanes,
    lp2,
    lp3,
    max_violation,
    priority_halfplane,
    vo_contains,
)

speed = st.floats(-0.4, 0.4)


def nb(p, v, r=0.105, pr=1.0):
    return SimpleNamespace(p=Vec2(*p), v=Vec2(*v), r_safe=r, pr=pr)


@settings(max_examples=200, deadline=None)
@given(st.floats(0, 2 * math.pi), st.floats(0.3, 3.0), speed, speed)
def test_vo_membership_matches_ray_disc(ang, dist, vx, vy):
    p = (dist * math.cos(ang), dist * math.sin(ang))
    q = VOQuery(Vec2(*p), Vec2(vx, vy), 0.25, 4.0)
    assert vo_contains(q, (vx, vy)) == vo_hit(p, (vx, vy), 0.25, 4.0)


@pytest.mark.parametrize("seed", range(6))
def test_u_is_shortest_escape(seed):
    rng = np.random.default_rng(seed)
    ang, dist = rng.uniform(0, 2 * math.pi), rng.uniform(0.4, 2.5)
    p = (dist * math.cos(ang), dist * math.sin(ang))
    v = tuple(rng.uniform(-0.3, 0.3, 2))
    q = VOQuery(Vec2(*p), Vec2(*v), 0.3, 4.0)
    u, n = compute_u_and_n(q)
    assert math.hypot(*u) == pytest.approx(vo_escape_distance(p, v, 0.3, 4.0), abs=2e-3)
    assert math.hypot(*n) == pytest.approx(1.0)
    # n is the outward normal: u points along it from inside, against it from outside
    inside = vo_contains(q, v)
    assert (u.dot(n) > 0) == inside or math.hypot(*u) < 1e-12


def test_head_on_u_is_lateral():
    # relative velocity straight into the neighbor; escape is sideways
    q = VOQuery(Vec2(1.0, 0.0), Vec2(0.4, 0.0), 0.21, 4.0)
    u, n = compute_u_and_n(q)
    assert abs(u.y) > abs(u.x)
    assert vo_contains(q, (0.4, 0.0))
    assert not vo_contains(q, (0.4 + 1.001 * u.x, 1.001 * u.y))


def test_interpenetration_needs_recovery_branch():
    with pytest.raises(ValueError):
        compute_u_and_n(VOQuery(Vec2(0.1, 0.0), Vec2(0.0, 0.0), 0.21, 4.0))


@pytest.mark.parametrize("pr,share", [((1, 1), 0.5), ((1, 10), 10 / 11), ((10, 1), 1 / 11), ((2, 6), 0.75)])
def test_priority_split_share(pr, share):
    assert PrioritySplit(*pr).share == pytest.approx(share)
    h = priority_halfplane((0.1, 0.0), (0.0, 0.2), (0.0, 1.0), PrioritySplit(*pr))
    assert h.point.y == pytest.approx(0.2 * share)


def test_equal_priorities_give_exactly_half():
    assert PrioritySplit(3.0, 3.0).share == 0.5
    assert PrioritySplit(0.7, 0.7).share == 0.5


def test_uniform_priority_is_bit_exact_with_reference_path():
    params = OrcaParams()
    ref = OrcaParams(equal_responsibility=True)
    nbs = [nb((0.8, 0.1), (-0.2, 0.0)), nb((0.3, -0.6), (0.0, 0.15)), nb((0.15, 0.1), (0.0, 0.0))]
    a = assemble_constraints((0, 0), 1.0, 0.105, (0.2, 0.0), nbs, [], params)
    b = assemble_constraints((0, 0), 1.0, 0.105, (0.2, 0.0), nbs, [], ref)
    assert a.halfplanes == b.halfplanes


def test_reciprocal_halfplanes_mirror():
    params = OrcaParams(forward_only=False)
    pi, pj = Vec2(0.0, 0.0), Vec2(1.0, 0.05)
    vi, vj = Vec2(0.2, 0.0), Vec2(-0.2, 0.0)
    ci = assemble_constraints(pi, 1.0, 0.105, vi, [nb(pj, vj)], [], params)
    cj = assemble_constraints(pj, 1.0, 0.105, vj, [nb(pi, vi)], [], params)
    hi, hj = ci.halfplanes[0], cj.halfplanes[0]
    assert hi.normal.x == pytest.approx(-hj.normal.x)
    assert hi.normal.y == pytest.approx(-hj.normal.y)
    # the two shifts are equal and opposite
    assert (hi.point - vi).x == pytest.approx(-(hj.point - vj).x)
    assert (hi.point - vi).y == pytest.approx(-(hj.point - vj).y)


def test_tracking_error_inflates_radius():
    nbs = [nb((0.6, 0.0), (0.0, 0.0))]
    base = assemble_constraints((0, 0), 1.0, 0.105, (0.2, 0.0), nbs, [], OrcaParams(forward_only=False))
    wide = assemble_constraints((0, 0), 1.0, 0.105, (0.2, 0.0), nbs, [], OrcaParams(forward_only=False, tracking_error=0.03))
    v = lp2(base, (0.2, 0.0))
    w = lp2(wide, (0.2, 0.0))
    assert abs(w.y) > abs(v.y)


def test_lp2_without_constraints_clamps_to_disc():
    c = OrcaConstraintSet((), 0.2)
    assert lp2(c, (0.1, 0.05)) == pytest.approx(Vec2(0.1, 0.05))
    v = lp2(c, (0.6, 0.8))
    assert v.x == pytest.approx(0.12)
    assert v.y == pytest.approx(0.16)


def test_lp2_single_halfplane_projection():
    h = HalfPlane(Vec2(0.0, 0.05), Vec2(0.0, 1.0))
    v = lp2(OrcaConstraintSet((h,), 0.2), (0.1, -0.1))
    assert v.x == pytest.approx(0.1)
    assert v.y == pytest.approx(0.05)
    ref, res = grid_lp2([h], 0.2, (0.1, -0.1))
    assert math.hypot(v.x - ref.x, v.y - ref.y) <= 2 * res


def test_lp2_infeasible_and_lp3_equalizes():
    hs = (HalfPlane(Vec2(0.1, 0.0), Vec2(1.0, 0.0)), HalfPlane(Vec2(-0.1, 0.0), Vec2(-1.0, 0.0)))
    c = OrcaConstraintSet(hs, 0.2)
    assert lp2(c, (0.0, 0.0)) is None
    v = lp3(c)
    assert v.x == pytest.approx(0.0, abs=1e-9)
    assert max_violation(c, v) == pytest.approx(0.1)
    _, ref_v, res = grid_lp3(list(hs), 0.2)
    assert max_violation(c, v) <= ref_v + 2 * res


def test_lp3_keeps_fixed_constraints_hard():
    soft = HalfPlane(Vec2(0.15, 0.0), Vec2(1.0, 0.0))  # wants v.x >= 0.15
    wall = HalfPlane(Vec2(0.0, 0.0), Vec2(-1.0, 0.0))  # obstacle: v.x <= 0
    c = OrcaConstraintSet((soft, wall), 0.2, fixed=(False, True))
    v = lp3(c)
    assert v.x <= 1e-9
    assert max_violation(c, v, include_fixed=True) == pytest.approx(0.15)


@settings(max_examples=100, deadline=None)
@given(st.floats(-math.pi, math.pi), st.floats(-math.pi, math.pi))
def test_forward_cone(heading, rel):
    h1, h2 = forward_cone_halfplanes(heading, math.pi / 3)
    assume(abs(abs(rel) - math.pi / 3) > 1e-6)
    v = (math.cos(heading + rel), math.sin(heading + rel))
    inside = all((v[0] - h.point.x) * h.normal.x + (v[1] - h.point.y) * h.normal.y >= 0 for h in (h1, h2))
    assert inside == (abs(rel) < math.pi / 3)


@settings(max_examples=60, deadline=None)
@given(st.floats(-1.5, 1.5), st.floats(0.25, 0.5), speed, speed)
def test_obstacle_halfplane_is_safe_for_tau(px, py, vx, vy):
    # wall below the agent; any admissible velocity keeps clearance >= r over tau_obst
    wall = box(0.0, -0.05, 4.0, 0.1)
    params = OrcaParams(forward_only=False, max_speed=0.4)
    c = assemble_constraints((px, py), 1.0, 0.105, (0, 0), [], [wall], params)
    assume(c.satisfied_by((vx, vy)))
    for t in np.linspace(0, params.tau_obst, 21):
        d = point_to_polygon_distance((px + vx * t, py + vy * t), wall)
        assert d >= 0.105 - 1e-9


def test_lp_oracle_suites_small():
    assert run_lp2_suite(instances=60).passed
    assert run_lp3_suite(instances=60).passed
