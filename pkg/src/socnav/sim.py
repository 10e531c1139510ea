"""Scenarios, sensing, the synchronous tick loop, episode logs and evaluation metrics."""
from __future__ import annotations

import csv
import io
import json
import math
from collections import deque
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .fusion import Case, FusionDecision, Mode, step_policy
from .geometry import Polygon, Pose, Vec2, box, cast_rays, edge_array, point_to_polygon_distance, wrap_angle
from .kinematics import ActionBounds, derive_tracking_error, integrate
from .neural import curiosity_reward, sample_action
from .norms import Side, classify_overtake_side, classify_pass_side, default_norm_polygon, norm_penalties
from .orca import OrcaParams
from .rewards import RewardBreakdown, RewardConfig, TickContext, reward_step
from .state import AgentState, Failure

SCENARIO_DIR = Path(__file__).parent / "scenarios"
SCENARIO_FILES = {
    "1": "scenario1.json",
    "2": "scenario2.json",
    "3": "scenario3.json",
    "4": "scenario4.json",
    "headon": "headon.json",
    "crossroad4": "crossroad4.json",
    "4-sparse": "scenario4_sparse.json",
}

# observation scaling
POS_SCALE = 5.0
GOAL_SCALE = 3.0
SPEED_SCALE = 0.2
REL_SCALE = 2.0
PR_SCALE = 10.0


# --- scenarios ---------------------------------------------------------------------


@dataclass(frozen=True)
class AgentSpawn:
    p: Vec2
    psi: float
    goal: Vec2
    v_max: float = 0.2
    pr: float = 1.0
    r_safe: float = 0.105
    tag: str = ""


@dataclass(frozen=True)
class Scenario:
    name: str
    obstacles: tuple[Polygon, ...]
    convex: tuple[bool, ...]
    agents: tuple[AgentSpawn, ...]
    tick_limit: int = 600
    dt: float = 0.2
    cyclic: bool = False

    def __post_init__(self):
        if self.dt <= 0 or self.tick_limit < 1:
            raise ValueError("dt and tick_limit must be positive")
        for i, a in enumerate(self.agents):
            for b in self.agents[i + 1 :]:
                if math.hypot(a.p.x - b.p.x, a.p.y - b.p.y) <= a.r_safe + b.r_safe:
                    raise ValueError(f"{self.name}: overlapping spawns")


def cup(at: Sequence[float], facing: float, inner_width: float = 0.5, depth: float = 0.5, thickness: float = 0.06) -> Polygon:
    """U-shaped obstacle whose closed end lies at ``at`` and whose opening faces away from ``facing``."""
    h = 0.5 * inner_width
    t = thickness
    local = [
        (t, -(h + t)), (t, h + t), (-depth, h + t), (-depth, h),
        (0.0, h), (0.0, -h), (-depth, -h), (-depth, -(h + t)),
    ]
    c, s = math.cos(facing), math.sin(facing)
    return Polygon([(at[0] + c * x - s * y, at[1] + s * x + c * y) for x, y in local])


def _obstacle(spec: dict) -> Polygon:
    kind = spec.get("shape", "polygon")
    if kind == "polygon":
        return Polygon(spec["vertices"])
    if kind == "box":
        return box(*spec["box"])
    if kind == "cup":
        extra = {k: spec[k] for k in ("inner_width", "depth", "thickness") if k in spec}
        return cup(spec["at"], math.radians(spec["facing_deg"]), **extra)
    raise ValueError(f"unknown obstacle shape {kind!r}")


def _sample_point(spec: dict, rng: np.random.Generator) -> Vec2:
    if "point" in spec:
        return Vec2(float(spec["point"][0]), float(spec["point"][1]))
    cx, cy, w, h = spec["box"]
    return Vec2(float(cx + (rng.random() - 0.5) * w), float(cy + (rng.random() - 0.5) * h))


def load_scenario(source: str | int | Path | dict, seed: int = 0, **overrides) -> Scenario:
    """Build a concrete scenario from a shipped id, a file path, or a parsed document.

    Spawns and goals drawn from boxes are sampled with ``seed``; resampled until
    no two spawns overlap.
    """
    if isinstance(source, dict):
        doc = source
    else:
        key = str(source)
        path = SCENARIO_DIR / SCENARIO_FILES[key] if key in SCENARIO_FILES else Path(key)
        if not path.exists():
            raise FileNotFoundError(f"no scenario {source!r}")
        doc = json.loads(path.read_text())
    doc = {**doc, **{k: v for k, v in overrides.items() if k != "priorities"}}
    obstacles = tuple(_obstacle(o) for o in doc.get("obstacles", []))
    convex = tuple(p.convex for p in obstacles)
    priorities = overrides.get("priorities")
    rng = np.random.default_rng(seed)
    for _ in range(1000):
        agents = []
        for k, a in enumerate(doc["agents"]):
            p = _sample_point(a["spawn"], rng)
            g = _sample_point(a["goal"], rng)
            psi = a.get("heading")
            psi = math.atan2(g.y - p.y, g.x - p.x) if psi is None else math.radians(psi)
            pr = priorities[k] if priorities is not None else a.get("pr", 1.0)
            agents.append(AgentSpawn(p, psi, g, a.get("v_max", 0.2), float(pr), a.get("r_safe", 0.105), a.get("tag", "")))
        try:
            return Scenario(
                doc["name"], obstacles, convex, tuple(agents),
                int(doc.get("tick_limit", 600)), float(doc.get("dt", 0.2)), bool(doc.get("cyclic", False)),
            )
        except ValueError as e:
            if "overlapping" not in str(e):
                raise
    raise ValueError(f"could not place non-overlapping spawns for {doc['name']}")


def build_scenario(scenario_id: int | str, seed: int = 0) -> Scenario:
    if str(scenario_id) not in SCENARIO_FILES:
        raise KeyError(f"unknown scenario id {scenario_id!r}")
    return load_scenario(scenario_id, seed)


# --- world -------------------------------------------------------------------------


@dataclass(frozen=True)
class SimConfig:
    lidar_rays: int = 8
    lidar_range: float = 3.0
    sense_k: int = 3
    sense_range: float = 2.0
    tau: float = 4.0
    tau_obst: float = 2.0
    rip_window: int = 50
    rip_displacement: float = 0.02
    rip_omega: float = 0.5
    norm_mode: str = "overlap"

    def state_dim(self) -> int:
        return 10 + 7 * self.sense_k + self.lidar_rays


@dataclass
class StepResult:
    rewards: dict[int, RewardBreakdown]
    decisions: dict[int, FusionDecision | None]
    actions: dict[int, tuple[float, float]]
    terminal: dict[int, bool]


class World:
    """Mutable simulation state for one episode."""

    def __init__(self, scenario: Scenario, cfg: SimConfig = SimConfig(), rewards: RewardConfig = RewardConfig()):
        self.scenario = scenario
        self.cfg = cfg
        self.rewards = rewards
        self.dt = scenario.dt
        self.obstacles = scenario.obstacles
        self.edges = edge_array(scenario.obstacles)
        v_cap = max(a.v_max for a in scenario.agents)
        eps = derive_tracking_error(v_cap, self.dt)
        self.orca = OrcaParams(tau=cfg.tau, tau_obst=cfg.tau_obst, dt=self.dt, tracking_error=eps, max_speed=v_cap)
        ang = np.arange(cfg.lidar_rays) * (2 * math.pi / cfg.lidar_rays)
        self._ray_angles = ang
        self.agents: list[AgentState] = []
        for s in scenario.agents:
            self.agents.append(AgentState(
                d_g=s.goal, p=s.p, v=Vec2(0.0, 0.0), v_pref=s.v_max, psi=s.psi, r_safe=s.r_safe, pr=s.pr,
                bounds=ActionBounds(v_max=s.v_max), start=s.p,
            ))
        self.tick = 0
        self.arrival_tick: dict[int, int] = {}
        self.laps = [0] * len(self.agents)
        self._hist = [deque(maxlen=cfg.rip_window + 1) for _ in self.agents]
        for i, a in enumerate(self.agents):
            self._hist[i].append((a.p, 0.0))
        self._norm_poly = default_norm_polygon()

    # sensing
    def alive_ids(self) -> list[int]:
        return [i for i, a in enumerate(self.agents) if a.alive]

    def neighbors(self, i: int, limit: int | None = None) -> list:
        me = self.agents[i]
        out = []
        for j, a in enumerate(self.agents):
            if j == i or not a.alive:
                continue
            d = math.hypot(a.p.x - me.p.x, a.p.y - me.p.y)
            if d <= self.cfg.sense_range:
                out.append((d, j, a.observed()))
        out.sort(key=lambda t: (t[0], t[1]))
        if limit is not None:
            out = out[:limit]
        return [o for _, _, o in out]

    def lidar(self, i: int) -> np.ndarray:
        a = self.agents[i]
        ang = self._ray_angles + a.psi
        dirs = np.stack([np.cos(ang), np.sin(ang)], axis=1)
        return cast_rays(a.p, dirs, self.edges, self.cfg.lidar_range)

    def observe(self, i: int) -> np.ndarray:
        """Body-frame state vector ``[s_in (10), k neighbors x 7, rays]``, all scaled to O(1)."""
        a = self.agents[i]
        c, s = math.cos(a.psi), math.sin(a.psi)

        def body(x, y):
            return c * x + s * y, -s * x + c * y

        gx, gy = body(a.d_g.x - a.p.x, a.d_g.y - a.p.y)
        vx, vy = body(a.v.x, a.v.y)
        out = [
            gx / GOAL_SCALE, gy / GOAL_SCALE, a.p.x / POS_SCALE, a.p.y / POS_SCALE,
            vx / SPEED_SCALE, vy / SPEED_SCALE, a.v_pref / SPEED_SCALE, a.psi / math.pi,
            a.r_safe / SPEED_SCALE, a.pr / PR_SCALE,
        ]
        nbs = self.neighbors(i, self.cfg.sense_k)
        for nb in nbs:
            rx, ry = body(nb.p.x - a.p.x, nb.p.y - a.p.y)
            ux, uy = body(nb.v.x - a.v.x, nb.v.y - a.v.y)
            out += [rx / REL_SCALE, ry / REL_SCALE, ux / SPEED_SCALE, uy / SPEED_SCALE,
                    nb.r_safe / SPEED_SCALE, wrap_angle(nb.psi - a.psi) / math.pi, nb.pr / PR_SCALE]
        out += [0.0] * (7 * (self.cfg.sense_k - len(nbs)))
        out += list(self.lidar(i) / self.cfg.lidar_range)
        return np.asarray(out)

    def observe_all(self, ids: Sequence[int]) -> np.ndarray:
        if not ids:
            return np.zeros((0, self.cfg.state_dim()))
        return np.stack([self.observe(i) for i in ids])

    # decision
    def decide(self, mode: Mode, rl_actions: dict[int, np.ndarray] | None = None):
        actions: dict[int, tuple[float, float]] = {}
        decisions: dict[int, FusionDecision | None] = {}
        for i in self.alive_ids():
            nb = self.neighbors(i) if mode is not Mode.PURE_DRL else []
            act = rl_actions[i] if rl_actions is not None and i in rl_actions else None
            actions[i], decisions[i] = step_policy(mode, self.agents[i], nb, self.obstacles, self.orca, act)
        return actions, decisions

    @property
    def done(self) -> bool:
        return not self.alive_ids() or self.tick >= self.scenario.tick_limit

    def step(self, actions: dict[int, tuple[float, float]], decisions=None, curiosity=None) -> StepResult:
        """Integrate every alive agent simultaneously, then detect collisions, arrivals, stalls."""
        ids = self.alive_ids()
        missing = set(ids) - set(actions)
        if missing:
            raise ValueError(f"no action for agents {sorted(missing)}")
        prev = {i: self.agents[i].p for i in ids}
        applied: dict[int, tuple[float, float]] = {}
        for i in ids:
            a = self.agents[i]
            nxt = integrate(a.kinematic(), actions[i], self.dt, a.bounds)
            a.p, a.psi, a.speed, a.omega = nxt.position, nxt.heading, nxt.v, nxt.w
            a.v = Vec2(nxt.v * math.cos(nxt.heading), nxt.v * math.sin(nxt.heading))
            applied[i] = (nxt.v, nxt.w)
        self.tick += 1

        hit_robot = {i: False for i in ids}
        for x, i in enumerate(ids):
            for j in ids[x + 1 :]:
                ai, aj = self.agents[i], self.agents[j]
                if math.hypot(ai.p.x - aj.p.x, ai.p.y - aj.p.y) <= ai.r_safe + aj.r_safe:
                    hit_robot[i] = hit_robot[j] = True
        hit_obst = {i: any(point_to_polygon_distance(self.agents[i].p, o) <= self.agents[i].r_safe for o in self.obstacles) for i in ids}
        norm = norm_penalties(
            [Pose(self.agents[i].p.x, self.agents[i].p.y, self.agents[i].psi) for i in ids],
            [self._norm_poly] * len(ids), self.cfg.norm_mode, -1.0,
        )

        rewards: dict[int, RewardBreakdown] = {}
        terminal: dict[int, bool] = {}
        for x, i in enumerate(ids):
            a = self.agents[i]
            reached = a.goal_distance() <= self.rewards.q_goal and not (hit_robot[i] or hit_obst[i])
            if hit_robot[i]:
                a.failed = Failure.COL_ROBOT
            elif hit_obst[i]:
                a.failed = Failure.COL_OBST
            self._hist[i].append((a.p, abs(a.omega)))
            if reached:
                self.arrival_tick.setdefault(i, self.tick)
                if self.scenario.cyclic:
                    self.laps[i] += 1
                    self._respawn(i)
                else:
                    a.arrived = True
            elif a.alive and self._rotating_in_place(i):
                a.failed = Failure.ROTATE_IN_PLACE
            disp = (a.p.x - prev[i].x, a.p.y - prev[i].y) if not (reached and self.scenario.cyclic) else (0.0, 0.0)
            ctx = TickContext(
                p_prev=tuple(prev[i]), p_now=tuple(a.p) if not (reached and self.scenario.cyclic) else tuple(prev[i]),
                d_g=tuple(a.d_g), v_cmd=(disp[0] / self.dt, disp[1] / self.dt),
                hit_obstacle=hit_obst[i], hit_robot=hit_robot[i], reached_goal=reached,
                norm_hit=norm[x] != 0.0, curiosity=(curiosity or {}).get(i, 0.0),
            )
            rewards[i] = reward_step(ctx, self.rewards)
            terminal[i] = not a.alive

        if self.tick >= self.scenario.tick_limit:
            for i, a in enumerate(self.agents):
                if a.alive:
                    if self.laps[i] > 0:
                        a.arrived = True
                    else:
                        a.failed = Failure.TIMEOUT
                    if i in terminal:
                        terminal[i] = True
        return StepResult(rewards, decisions or {}, applied, terminal)

    def _rotating_in_place(self, i: int) -> bool:
        h = self._hist[i]
        if len(h) <= self.cfg.rip_window:
            return False
        w_ok = all(w > self.cfg.rip_omega for _, w in list(h)[1:])
        p0, p1 = h[0][0], h[-1][0]
        return w_ok and math.hypot(p1.x - p0.x, p1.y - p0.y) < self.cfg.rip_displacement

    def _respawn(self, i: int) -> None:
        a = self.agents[i]
        a.p = a.start
        a.psi = math.atan2(a.d_g.y - a.p.y, a.d_g.x - a.p.x)
        a.v = Vec2(0.0, 0.0)
        a.speed = a.omega = 0.0
        self._hist[i].clear()
        self._hist[i].append((a.p, 0.0))


# --- episodes ----------------------------------------------------------------------

LOG_HEADER = ("tick", "agent", "px", "py", "psi", "v", "w", "case", "r_ex", "r_c", "outcome")


@dataclass
class EpisodeLog:
    scenario: str
    mode: str
    seed: int
    n_agents: int
    dt: float
    rows: list[tuple] = field(default_factory=list)
    outcomes: list[str] = field(default_factory=list)
    arrival_tick: dict[int, int] = field(default_factory=dict)
    tags: list[str] = field(default_factory=list)
    v_max: list[float] = field(default_factory=list)
    ticks: int = 0

    def trajectory(self, agent: int) -> np.ndarray:
        """Positions at tick 0..ticks (row for tick t holds the pose after t ticks)."""
        return np.array([(r[2], r[3]) for r in self.rows if r[1] == agent])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(LOG_HEADER)
        for r in self.rows:
            w.writerow([r[0], r[1], f"{r[2]:.6f}", f"{r[3]:.6f}", f"{r[4]:.6f}", f"{r[5]:.6f}", f"{r[6]:.6f}",
                        r[7], f"{r[8]:.6f}", f"{r[9]:.6f}", r[10]])
        return buf.getvalue()

    def cases(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for r in self.rows:
            if r[0] > 0 and r[7] != Case.NONE.value:
                out[r[7]] = out.get(r[7], 0) + 1
        return out


def _policy_actions(model, world: World, ids: list[int], rng, deterministic: bool):
    obs = world.observe_all(ids)
    _, a, _ = sample_action(model.policy, obs, rng, deterministic)
    return obs, {i: a[k] for k, i in enumerate(ids)}


def run_episode(
    scenario: Scenario | int | str,
    mode: Mode | str,
    seed: int = 0,
    model=None,
    cfg: SimConfig = SimConfig(),
    rewards: RewardConfig = RewardConfig(),
    record: bool = True,
    deterministic: bool = True,
) -> EpisodeLog:
    """Run until every agent is terminal or the tick limit hits.

    ``model`` is a trained ``neural.Agent``; required for the two network modes.
    """
    mode = Mode(mode)
    if mode.uses_network and model is None:
        raise ValueError(f"mode {mode.value} needs a checkpoint")
    scn = scenario if isinstance(scenario, Scenario) else build_scenario(scenario, seed)
    world = World(scn, cfg, rewards)
    rng = np.random.default_rng(seed)
    log = EpisodeLog(scn.name, mode.value, seed, len(world.agents), world.dt,
                     tags=[s.tag for s in scn.agents], v_max=[s.v_max for s in scn.agents])

    def emit(res: StepResult | None):
        if not record:
            return
        for i, a in enumerate(world.agents):
            if res is not None and i in res.rewards:
                v, w = res.actions[i]
                dec = res.decisions.get(i)
                rb = res.rewards[i]
                row = (world.tick, i, a.p.x, a.p.y, a.psi, v, w, dec.case.value if dec else Case.NONE.value,
                       rb.total_ex, rb.curiosity, a.outcome)
            else:
                row = (world.tick, i, a.p.x, a.p.y, a.psi, 0.0, 0.0, Case.NONE.value, 0.0, 0.0, a.outcome)
            log.rows.append(row)

    emit(None)
    while not world.done:
        ids = world.alive_ids()
        rl, obs = None, None
        if mode.uses_network:
            obs, rl = _policy_actions(model, world, ids, rng, deterministic)
        actions, decisions = world.decide(mode, rl)
        res = world.step(actions, decisions)
        if record and mode.uses_network:
            rc = curiosity_reward(model.forward, model.encoder, obs, np.asarray([rl[i] for i in ids]),
                                  world.observe_all(ids), model.meta.get("delta", 0.01))
            for k, i in enumerate(ids):
                res.rewards[i] = replace(res.rewards[i], curiosity=float(rc[k]))
        emit(res)
    log.outcomes = [a.outcome for a in world.agents]
    log.arrival_tick = dict(world.arrival_tick)
    log.ticks = world.tick
    return log


# --- metrics -----------------------------------------------------------------------

TABLE_COLUMNS = ("Success", "SR-success", "Col-robots", "Col-obstacles", "Timeout", "Rotate-in-place", "Average time")


def _travel_dir(traj: np.ndarray) -> np.ndarray:
    d = traj[-1] - traj[0]
    n = np.hypot(*d)
    return d / n if n > 1e-9 else np.zeros(2)


def social_compliance(log: EpisodeLog, agent: int, radius: float = 1.0) -> tuple[bool, list[tuple[str, Side]]]:
    """Whether ``agent`` kept right when meeting head-on and passed on the left when overtaking.

    Pairs are classified from overall travel directions: roughly opposite means a
    passing encounter, roughly parallel with ``agent`` the faster one means an
    overtake; crossing encounters are not judged.
    """
    trajs = {i: log.trajectory(i) for i in range(log.n_agents)}
    me = trajs[agent]
    d_me = _travel_dir(me)
    events: list[tuple[str, Side]] = []
    ok = True
    for j, other in trajs.items():
        if j == agent:
            continue
        n = min(len(me), len(other))
        if n < 2:
            continue
        cos = float(np.dot(d_me, _travel_dir(other)))
        if cos < -0.7:
            side = classify_pass_side(me[:n], other[:n], radius)
            if side is not Side.NONE:
                events.append(("pass", side))
                ok &= side is Side.RIGHT
        elif cos > 0.7 and log.v_max[agent] > log.v_max[j]:
            side = classify_overtake_side(me[:n], other[:n], radius)
            if side is not Side.NONE:
                events.append(("overtake", side))
                ok &= side is Side.LEFT
    return ok, events


@dataclass
class MetricsReport:
    scenario: str
    mode: str
    episodes: int
    samples: int
    success: float
    sr_success: float
    col_robots: float
    col_obstacles: float
    timeout: float
    rotate_in_place: float
    average_time: float | None
    cases: dict[str, int]
    pass_sides: dict[str, int]
    overtake_sides: dict[str, int]

    def row(self) -> dict[str, str]:
        avg = "fail" if self.average_time is None else f"{self.average_time:.2f}"
        vals = (self.success, self.sr_success, self.col_robots, self.col_obstacles, self.timeout, self.rotate_in_place)
        out = {c: f"{v:.1f}" for c, v in zip(TABLE_COLUMNS, vals)}
        out["Average time"] = avg
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("scenario", "mode", "episodes") + TABLE_COLUMNS)
        r = self.row()
        w.writerow((self.scenario, self.mode, self.episodes) + tuple(r[c] for c in TABLE_COLUMNS))
        return buf.getvalue()

    def to_text(self) -> str:
        r = self.row()
        widths = [max(len(c), len(r[c])) for c in TABLE_COLUMNS]
        head = " | ".join(c.ljust(w) for c, w in zip(TABLE_COLUMNS, widths))
        line = " | ".join(r[c].ljust(w) for c, w in zip(TABLE_COLUMNS, widths))
        cases = ", ".join(f"case{k}={v}" for k, v in sorted(self.cases.items()))
        return (
            f"scenario {self.scenario}  mode {self.mode}  episodes {self.episodes}  agent-episodes {self.samples}\n"
            f"{head}\n{'-' * len(head)}\n{line}\n"
            f"fusion cases: {cases or 'n/a'}\n"
            f"pass sides: {self.pass_sides}  overtake sides: {self.overtake_sides}\n"
        )


def metrics_from_logs(logs: Sequence[EpisodeLog], fail_threshold: float = 60.0) -> MetricsReport:
    if not logs:
        raise ValueError("need at least one episode")
    counts = {k: 0 for k in ("success", "sr", "col_robot", "col_obst", "timeout", "rotate_in_place")}
    times: list[float] = []
    cases: dict[str, int] = {}
    passes = {"left": 0, "right": 0}
    overtakes = {"left": 0, "right": 0}
    n = 0
    for log in logs:
        for k, v in log.cases().items():
            cases[k] = cases.get(k, 0) + v
        for i, out in enumerate(log.outcomes):
            n += 1
            ok, events = social_compliance(log, i) if log.rows else (True, [])
            for kind, side in events:
                (passes if kind == "pass" else overtakes)[side.value] += 1
            if out == "success":
                counts["success"] += 1
                counts["sr"] += ok
                times.append(log.arrival_tick[i] * log.dt)
            elif out in counts:
                counts[out] += 1
            else:
                raise ValueError(f"non-terminal outcome {out!r} in a finished log")
    pct = lambda c: 100.0 * c / n  # noqa: E731
    success = pct(counts["success"])
    sr = 100.0 * counts["sr"] / counts["success"] if counts["success"] else 0.0
    avg = float(np.mean(times)) if times and success >= fail_threshold else None
    return MetricsReport(
        logs[0].scenario, logs[0].mode, len(logs), n, success, sr,
        pct(counts["col_robot"]), pct(counts["col_obst"]), pct(counts["timeout"]), pct(counts["rotate_in_place"]),
        avg, cases, passes, overtakes,
    )


def _episode_job(args):
    scenario, mode, seed, model_dict, cfg, rewards = args
    model = None
    if model_dict is not None:
        from .neural import Agent

        model = Agent.from_dict(model_dict)
    return run_episode(scenario, mode, seed, model, cfg, rewards)


def run_batch(
    scenario: int | str,
    mode: Mode | str,
    episodes: int,
    seed: int = 0,
    model=None,
    cfg: SimConfig = SimConfig(),
    rewards: RewardConfig = RewardConfig(),
    workers: int = 1,
) -> list[EpisodeLog]:
    """Episode k uses seed ``seed + k``; results come back in episode order for any worker count."""
    if episodes < 1:
        raise ValueError("episodes must be >= 1")
    mode = Mode(mode)
    if workers <= 1:
        return [run_episode(scenario, mode, seed + k, model, cfg, rewards) for k in range(episodes)]
    from multiprocessing import get_context

    md = model.to_dict() if model is not None else None
    jobs = [(scenario, mode, seed + k, md, cfg, rewards) for k in range(episodes)]
    with get_context("fork").Pool(workers) as pool:
        return pool.map(_episode_job, jobs, chunksize=max(1, episodes // (4 * workers)))


def evaluate(scenario, mode, episodes: int, seed: int = 0, model=None, cfg: SimConfig = SimConfig(),
             rewards: RewardConfig = RewardConfig(), workers: int = 1) -> MetricsReport:
    return metrics_from_logs(run_batch(scenario, mode, episodes, seed, model, cfg, rewards, workers))


def validate_log(log: EpisodeLog, obstacles: Sequence[Polygon], r_safe: float = 0.105, tol: float = 1e-9) -> list[str]:
    """Independent post-hoc check of speed caps and clearances for successful agents."""
    problems = []
    by_tick: dict[int, dict[int, tuple]] = {}
    for r in log.rows:
        by_tick.setdefault(r[0], {})[r[1]] = r
    ok_agents = {i for i, o in enumerate(log.outcomes) if o == "success"}
    for t in sorted(by_tick):
        if t == 0:
            continue
        rows, before = by_tick[t], by_tick.get(t - 1, {})
        moving = {j for j, q in before.items() if q[10] == "running"}
        for i in ok_agents & moving:
            r = rows[i]
            if r[5] > log.v_max[i] + tol:
                problems.append(f"tick {t} agent {i}: speed {r[5]:.4f} over cap")
            for o in obstacles:
                if point_to_polygon_distance((r[2], r[3]), o) <= r_safe:
                    problems.append(f"tick {t} agent {i}: obstacle clearance")
            for j in moving - {i}:
                q = rows[j]
                if math.hypot(r[2] - q[2], r[3] - q[3]) <= 2 * r_safe:
                    problems.append(f"tick {t} agents {i},{j}: robot clearance")
    return problems
