"""Centralized PPO training over all agents' pooled experience with shared networks."""
from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .fusion import Mode
from .neural import Agent, Hyper, Optimizers, Rollout, compute_gae, curiosity_reward, ppo_update, sample_action
from .rewards import RewardConfig
from .sim import SimConfig, World, load_scenario

log = logging.getLogger(__name__)


class TrainingDiverged(RuntimeError):
    def __init__(self, msg: str, checkpoint: Path | None):
        super().__init__(msg)
        self.checkpoint = checkpoint


@dataclass(frozen=True)
class TrainConfig:
    scenario: str = "crossroad4"  # comma-separated ids are cycled episode by episode
    variant: int = 1  # 1: raw policy rollouts, 2: fusion-filtered rollouts
    episodes: int = 2000
    seed: int = 0
    hyper: Hyper = Hyper()
    rewards: RewardConfig = RewardConfig()
    sim: SimConfig = SimConfig()
    tick_limit: int | None = None

    def __post_init__(self):
        if self.variant not in (1, 2):
            raise ValueError("variant must be 1 or 2")
        if self.episodes < 1:
            raise ValueError("episodes must be >= 1")


@dataclass
class CurvePoint:
    iteration: int
    mean_ex_reward: float
    mean_curiosity: float
    episodes: int
    success_rate: float
    l_clip: float = math.nan
    l_v: float = math.nan


@dataclass
class TrainResult:
    agent: Agent
    curve: list[CurvePoint] = field(default_factory=list)
    episodes: int = 0

    def curve_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("iteration", "mean_ex_reward", "mean_curiosity", "episodes", "success_rate"))
        for c in self.curve:
            w.writerow((c.iteration, f"{c.mean_ex_reward:.6f}", f"{c.mean_curiosity:.6f}", c.episodes, f"{c.success_rate:.4f}"))
        return buf.getvalue()

    def final_success(self, window: int = 200) -> float:
        """Success rate over roughly the last ``window`` finished episodes."""
        got, ok = 0, 0.0
        for c in reversed(self.curve):
            if got >= window:
                break
            n = c.episodes
            got += n
            ok += c.success_rate * n
        return ok / got if got else 0.0


class _Episode:
    """One running episode plus per-agent trajectory buffers."""

    def __init__(self, cfg: TrainConfig, index: int):
        seed = cfg.seed * 1_000_003 + index
        names = cfg.scenario.split(",")
        name = names[index % len(names)]
        scn = load_scenario(name, seed) if cfg.tick_limit is None else load_scenario(name, seed, tick_limit=cfg.tick_limit)
        self.world = World(scn, cfg.sim, cfg.rewards)
        self.returns = [0.0] * len(self.world.agents)


def train(
    cfg: TrainConfig,
    agent: Agent | None = None,
    checkpoint_dir: Path | None = None,
    progress=None,
) -> TrainResult:
    """Collect shared-horizon rollouts, add curiosity, run PPO; stop after ``cfg.episodes`` episodes.

    Deterministic for a fixed seed. A non-finite update halts with the last
    finite networks written to ``checkpoint_dir`` (if given).
    """
    h = cfg.hyper
    rng = np.random.default_rng(cfg.seed)
    ep_index = 0
    ep = _Episode(cfg, ep_index)
    if agent is None:
        agent = Agent.create(cfg.sim.state_dim(), cfg.seed, h)
    agent.meta.update({"delta": h.delta, "scenario": cfg.scenario, "variant": cfg.variant})
    opt = Optimizers(agent, h.lr)
    mode = Mode.PURE_DRL if cfg.variant == 1 else Mode.ORCA_DRL
    result = TrainResult(agent)
    finished = 0
    iteration = 0
    while finished < cfg.episodes:
        iteration += 1
        # per-agent chains: lists of transition dicts, keyed by (episode, agent)
        chains: dict[tuple[int, int], list] = {}
        ep_returns, ep_success = [], []
        ticks = 0
        while ticks < h.horizon and finished < cfg.episodes:
            w = ep.world
            ids = w.alive_ids()
            obs = w.observe_all(ids)
            u, a, logp = sample_action(agent.policy, obs, rng)
            rl = {i: a[k] for k, i in enumerate(ids)}
            actions, decisions = w.decide(mode, rl)
            res = w.step(actions, decisions)
            nxt = w.observe_all(ids)
            for k, i in enumerate(ids):
                rb = res.rewards[i]
                ep.returns[i] += rb.total_ex
                chains.setdefault((ep_index, i), []).append(
                    (obs[k], u[k], a[k], logp[k], rb.total_ex, nxt[k], bool(res.terminal.get(i, False)))
                )
            ticks += 1
            if w.done:
                finished += 1
                ep_returns.append(float(np.mean(ep.returns)))
                ep_success.append(float(np.mean([ag.arrived for ag in w.agents])))
                ep_index += 1
                if finished < cfg.episodes:
                    ep = _Episode(cfg, ep_index)
        rollout, mean_c = _assemble(agent, chains, h)
        if len(rollout) == 0:
            continue
        stats = ppo_update(agent, rollout, h, opt, rng)
        if stats["aborted"]:
            path = None
            if checkpoint_dir is not None:
                path = Path(checkpoint_dir) / "last_finite.json"
                agent.save(path)
            raise TrainingDiverged(f"non-finite update at iteration {iteration}", path)
        pt = CurvePoint(
            iteration,
            float(np.mean(ep_returns)) if ep_returns else math.nan,
            mean_c,
            len(ep_returns),
            float(np.mean(ep_success)) if ep_success else math.nan,
            stats.get("l_clip", math.nan),
            stats.get("l_v", math.nan),
        )
        result.curve.append(pt)
        if progress is not None:
            progress(pt)
    result.episodes = finished
    return result


def _assemble(agent: Agent, chains: dict, h: Hyper) -> tuple[Rollout, float]:
    keys = sorted(chains)
    if not keys:
        return Rollout(*(np.zeros((0,)) for _ in range(7))), 0.0
    flat = [t for k in keys for t in chains[k]]
    s = np.stack([t[0] for t in flat])
    u = np.stack([t[1] for t in flat])
    a = np.stack([t[2] for t in flat])
    logp = np.array([t[3] for t in flat])
    r_ex = np.array([t[4] for t in flat])
    s2 = np.stack([t[5] for t in flat])
    done = np.array([t[6] for t in flat], dtype=float)
    r_c = curiosity_reward(agent.forward, agent.encoder, s, a, s2, h.delta) if h.delta > 0 else np.zeros(len(flat))
    r = r_ex + r_c
    v = agent.value_of(s)
    v2 = agent.value_of(s2)
    adv = np.zeros(len(flat))
    ret = np.zeros(len(flat))
    start = 0
    for k in keys:
        n = len(chains[k])
        sl = slice(start, start + n)
        seg_end = np.zeros(n)
        seg_end[-1] = 1.0
        adv[sl], ret[sl] = compute_gae(r[sl], v[sl], v2[sl], done[sl], seg_end, h.gamma, h.gae_lambda)
        start += n
    return Rollout(s, u, a, logp, adv, ret, s2), float(np.mean(r_c))
