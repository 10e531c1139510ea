import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from socnav.rewards import RewardBreakdown, RewardConfig, TickContext, reward_dir, reward_mf, reward_step


def test_paper_constants():
    c = RewardConfig()
    assert (c.b_mf, c.c_dir, c.d_col_s, c.e_col_d) == (3.0, 1.0, -40.0, -15.0)
    assert (c.g_tim, c.m_goal, c.n_norm, c.q_goal) == (-0.25, 80.0, -2.0, 0.12)


@pytest.mark.parametrize("kw", [{"q_goal": 0.0}, {"d_col_s": 1.0}, {"n_norm": 0.5}, {"m_goal": -1.0}])
def test_invalid_config(kw):
    with pytest.raises(ValueError):
        RewardConfig(**kw)


def test_overrides():
    c = RewardConfig().with_overrides(c_dir=0.05)
    assert c.c_dir == 0.05 and c.b_mf == 3.0
    with pytest.raises(KeyError):
        RewardConfig().with_overrides(bogus=1)
    assert RewardConfig.sparse().b_mf == 0.0 and RewardConfig.sparse().c_dir == 0.0


def test_moving_forward():
    g = (5.0, 0.0)
    assert reward_mf((0, 0), (0, 0), g) == 0.0
    assert reward_mf((0, 0), (0.1, 0), g) == pytest.approx(0.3)
    assert reward_mf((0, 0), (-0.1, 0), g) == pytest.approx(-0.3)


@pytest.mark.parametrize("v,expected", [((1, 0), math.pi), ((-1, 0), -math.pi), ((0, 1), 0.0), ((0, 0), 0.0)])
def test_direction(v, expected):
    assert reward_dir(v, (2.0, 0.0)) == pytest.approx(expected, abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.floats(-math.pi, math.pi), st.floats(-math.pi, math.pi), st.floats(0.01, 1.0))
def test_direction_depends_only_on_angle(a, b, s):
    # independent form: pi - 2 * angle between the vectors
    ang = abs(math.remainder(a - b, 2 * math.pi))
    got = reward_dir((s * math.cos(a), s * math.sin(a)), (math.cos(b), math.sin(b)))
    assert got == pytest.approx(math.pi - 2 * ang, abs=1e-6)


def test_quiet_tick():
    r = reward_step(TickContext((0, 0), (0, 0), (3, 0), (0.1, 0.0)))
    assert r.mf == 0.0 and r.tim == -0.25 and r.dir == pytest.approx(math.pi)
    assert r.goal == r.col_s == r.col_d == r.norm == 0.0


def test_events():
    r = reward_step(TickContext((0, 0), (0.02, 0), (3, 0), (0.1, 0.0), hit_robot=True, norm_hit=True, curiosity=0.5))
    assert r.col_d == -15.0 and r.norm == -2.0
    assert r.total == pytest.approx(r.total_ex + 0.5)
    r = reward_step(TickContext((0, 0), (0.02, 0), (3, 0), (0.1, 0.0), hit_obstacle=True, reached_goal=True))
    assert r.col_s == -40.0 and r.goal == 80.0


def test_breakdown_sum():
    b = RewardBreakdown(1, 2, 3, 4, 5, 6, 7, 8)
    assert b.total_ex == 28 and b.total == 36
