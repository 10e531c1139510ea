import math

import numpy as np
import pytest

from socnav.geometry import Vec2
from socnav.sim import (
    LOG_HEADER,
    EpisodeLog,
    SimConfig,
    World,
    build_scenario,
    load_scenario,
    metrics_from_logs,
    run_batch,
    run_episode,
    social_compliance,
    validate_log,
)
from socnav.state import Failure


def doc(agents, obstacles=(), tick_limit=100, **extra):
    return {"name": "t", "tick_limit": tick_limit, "obstacles": list(obstacles), "agents": agents, **extra}


def pt(x, y):
    return {"point": [x, y]}


def test_scenario_ids_and_determinism():
    s2 = build_scenario(2, seed=0)
    assert sorted(a.v_max for a in s2.agents) == [0.12, 0.2]
    assert not s2.obstacles
    s3 = build_scenario(3, seed=0)
    assert len(s3.agents) == 8 and all(s3.convex)
    dirs = {round(math.degrees(a.psi) / 90) % 4 for a in s3.agents}
    assert len(dirs) == 4
    s4 = build_scenario(4, seed=0)
    assert sum(not c for c in s4.convex) == 6
    s1 = build_scenario(1, seed=5)
    assert not all(s1.convex)
    assert build_scenario(1, seed=5) == s1
    assert build_scenario(1, seed=6) != s1
    with pytest.raises(KeyError):
        build_scenario(9)


def test_overlapping_spawns_rejected():
    with pytest.raises(ValueError):
        load_scenario(doc([{"spawn": pt(0, 0), "goal": pt(1, 0)}, {"spawn": pt(0.1, 0), "goal": pt(2, 0)}]))


def test_empty_world_observation():
    w = World(load_scenario(doc([{"spawn": pt(0, 0), "goal": pt(3, 0)}])))
    s = w.observe(0)
    assert s.shape == (SimConfig().state_dim(),) == (39,)
    assert np.all(s[10:31] == 0.0)
    assert np.all(s[31:] == 1.0)
    assert s[0] == pytest.approx(1.0)  # goal 3 m straight ahead, scaled by 3


def test_wall_ray_matches_distance():
    wall = {"shape": "box", "box": [1.5, 0, 0.2, 4.0]}  # near face at x = 1.4
    w = World(load_scenario(doc([{"spawn": pt(0, 0), "goal": pt(0, 1), "heading": 0}], [wall])))
    rays = w.observe(0)[31:]
    assert rays[0] == pytest.approx(1.4 / 3.0)
    assert rays[1] == pytest.approx(1.4 / math.cos(math.pi / 4) / 3.0)
    assert rays[4] == 1.0


def test_three_nearest_sorted():
    agents = [{"spawn": pt(0, 0), "goal": pt(5, 5), "heading": 0}] + [
        {"spawn": pt(d, 0.0), "goal": pt(5, -5)} for d in (1.5, 0.6, 1.0, 0.3, 1.8)
    ]
    w = World(load_scenario(doc(agents)))
    nb = w.neighbors(0, 3)
    assert [n.p.x for n in nb] == [0.3, 0.6, 1.0]
    s = w.observe(0)
    assert s[10] * 2.0 == pytest.approx(0.3) and s[17] * 2.0 == pytest.approx(0.6) and s[24] * 2.0 == pytest.approx(1.0)


def test_robot_collision_marks_both():
    agents = [
        {"spawn": pt(0, 0), "goal": pt(3, 0), "heading": 0},
        {"spawn": pt(0.25, 0), "goal": pt(-3, 0), "heading": 180},
    ]
    w = World(load_scenario(doc(agents)))
    res = w.step({0: (0.1, 0.0), 1: (0.1, 0.0)})
    assert w.agents[0].failed is Failure.COL_ROBOT and w.agents[1].failed is Failure.COL_ROBOT
    assert res.rewards[0].col_d == -15.0 and res.terminal[0]


def test_obstacle_collision_and_goal():
    wall = {"shape": "box", "box": [0.18, 0, 0.1, 1.0]}  # face at x = 0.13
    w = World(load_scenario(doc([{"spawn": pt(0, 0), "goal": pt(1, 0), "heading": 0}], [wall])))
    res = w.step({0: (0.2, 0.0)})
    assert w.agents[0].failed is Failure.COL_OBST and res.rewards[0].col_s == -40.0
    w = World(load_scenario(doc([{"spawn": pt(0, 0), "goal": pt(0.1, 0), "heading": 0}])))
    res = w.step({0: (0.01, 0.0)})
    assert w.agents[0].arrived and res.rewards[0].goal == 80.0


def test_timeout_and_rotate_in_place():
    w = World(load_scenario(doc([{"spawn": pt(0, 0), "goal": pt(3, 0)}], tick_limit=3)))
    for _ in range(3):
        w.step({0: (0.2, 0.0)})
    assert w.agents[0].failed is Failure.TIMEOUT and w.done
    w = World(load_scenario(doc([{"spawn": pt(0, 0), "goal": pt(3, 0)}], tick_limit=200)))
    while w.agents[0].alive:
        w.step({0: (0.01, 2.5)})
    assert w.agents[0].failed is Failure.ROTATE_IN_PLACE
    assert w.tick == SimConfig().rip_window


def test_update_is_simultaneous():
    agents = [{"spawn": pt(0, 0), "goal": pt(3, 0), "heading": 0}, {"spawn": pt(0.6, 0), "goal": pt(-3, 0), "heading": 180}]
    w1, w2 = World(load_scenario(doc(agents))), World(load_scenario(doc(agents)))
    obs = w1.observe_all([0, 1])
    w1.step({0: (0.2, 0.5), 1: (0.1, -0.3)})
    w2.step({1: (0.1, -0.3), 0: (0.2, 0.5)})
    assert [a.p for a in w1.agents] == [a.p for a in w2.agents]
    # observations taken before the step still describe the committed previous tick
    assert obs[0][10] * 2.0 == pytest.approx(0.6)


def test_log_shape_and_csv():
    log = run_episode(build_scenario("headon", 0), "pure-orca", 0)
    assert len(log.rows) == (log.ticks + 1) * log.n_agents
    assert log.to_csv().splitlines()[0] == ",".join(LOG_HEADER)
    assert set(log.outcomes) <= {"success", "col_robot", "col_obst", "timeout", "rotate_in_place"}


def test_trivial_scenario_metrics():
    scn = load_scenario(doc([{"spawn": pt(0, 0), "goal": pt(1, 0)}, {"spawn": pt(0, 1), "goal": pt(1, 1)}]))
    rep = metrics_from_logs([run_episode(scn, "pure-orca", 0)])
    assert rep.success == 100.0 and rep.timeout == 0.0 and rep.average_time is not None


def test_average_time_arithmetic_and_fail_flag():
    log = EpisodeLog("t", "pure-orca", 0, 2, 0.2, outcomes=["success", "success"], arrival_tick={0: 100, 1: 150}, v_max=[0.2, 0.2])
    assert metrics_from_logs([log]).average_time == pytest.approx(25.0)
    bad = EpisodeLog("t", "pure-orca", 0, 2, 0.2, outcomes=["success", "timeout"], arrival_tick={0: 100}, v_max=[0.2, 0.2])
    rep = metrics_from_logs([bad])
    assert rep.success == 50.0 and rep.average_time is None and rep.row()["Average time"] == "fail"


def test_compliance_from_constructed_log():
    log = EpisodeLog("t", "x", 0, 2, 0.2, v_max=[0.2, 0.2])
    for t in range(41):
        x = -2 + 0.1 * t
        log.rows.append((t, 0, x, -0.2, 0.0, 0, 0, "-", 0, 0, "running"))
        log.rows.append((t, 1, -x, 0.2, math.pi, 0, 0, "-", 0, 0, "running"))
    ok, events = social_compliance(log, 0)
    assert ok and events[0][0] == "pass"


def test_pure_orca_scenario3_logs_validate():
    scn = build_scenario(3, 1)
    log = run_episode(scn, "pure-orca", 1)
    assert validate_log(log, scn.obstacles) == []


def test_batch_worker_count_does_not_change_logs():
    a = run_batch("headon", "pure-orca", 4, seed=3, workers=1)
    b = run_batch("headon", "pure-orca", 4, seed=3, workers=2)
    assert [x.to_csv() for x in a] == [x.to_csv() for x in b]


def test_cyclic_respawn_counts_laps():
    scn = load_scenario(doc([{"spawn": pt(0, 0), "goal": pt(0.5, 0)}], tick_limit=60, cyclic=True))
    log = run_episode(scn, "pure-orca", 0)
    assert log.outcomes == ["success"]
    assert log.ticks == 60
