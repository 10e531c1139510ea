"""External reward: navigation terms plus the social-norm term, per agent per tick."""
from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, fields
from typing import Sequence

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class RewardConfig:
    b_mf: float = 3.0
    c_dir: float = 1.0
    d_col_s: float = -40.0
    e_col_d: float = -15.0
    g_tim: float = -0.25
    m_goal: float = 80.0
    n_norm: float = -2.0
    q_goal: float = 0.12

    def __post_init__(self):
        if self.q_goal <= 0:
            raise ValueError("q_goal must be positive")
        if self.d_col_s > 0 or self.e_col_d > 0 or self.g_tim > 0 or self.n_norm > 0:
            raise ValueError("penalty terms must be <= 0")
        if self.m_goal <= 0:
            raise ValueError("goal reward must be positive")

    def with_overrides(self, **kw) -> "RewardConfig":
        known = {f.name for f in fields(self)}
        bad = set(kw) - known
        if bad:
            raise KeyError(f"unknown reward keys: {sorted(bad)}")
        return RewardConfig(**{**asdict(self), **{k: float(v) for k, v in kw.items()}})

    @classmethod
    def sparse(cls) -> "RewardConfig":
        """Moving-forward and direction terms switched off."""
        return cls(b_mf=0.0, c_dir=0.0)


@dataclass(frozen=True)
class RewardBreakdown:
    mf: float = 0.0
    dir: float = 0.0
    col_s: float = 0.0
    col_d: float = 0.0
    tim: float = 0.0
    goal: float = 0.0
    norm: float = 0.0
    curiosity: float = 0.0

    @property
    def total_ex(self) -> float:
        return self.mf + self.dir + self.col_s + self.col_d + self.tim + self.goal + self.norm

    @property
    def total(self) -> float:
        return self.total_ex + self.curiosity


def reward_mf(p_start: Sequence[float], p_now: Sequence[float], d_g: Sequence[float], coef: float = 3.0) -> float:
    before = math.hypot(d_g[0] - p_start[0], d_g[1] - p_start[1])
    after = math.hypot(d_g[0] - p_now[0], d_g[1] - p_now[1])
    return coef * (before - after)


def reward_dir(v: Sequence[float], goal_vec: Sequence[float], coef: float = 1.0) -> float:
    nv = math.hypot(v[0], v[1])
    ng = math.hypot(goal_vec[0], goal_vec[1])
    if nv <= 1e-12 or ng <= 1e-12:
        log.debug("reward_dir: degenerate input v=%s goal=%s", v, goal_vec)
        return 0.0
    c = (v[0] * goal_vec[0] + v[1] * goal_vec[1]) / (nv * ng)
    c = min(1.0, max(-1.0, c))
    return coef * (math.pi - 2.0 * abs(math.acos(c)))


@dataclass(frozen=True)
class TickContext:
    """Everything one agent's reward needs from the committed tick."""

    p_prev: tuple[float, float]
    p_now: tuple[float, float]
    d_g: tuple[float, float]
    v_cmd: tuple[float, float]
    hit_obstacle: bool = False
    hit_robot: bool = False
    reached_goal: bool = False
    norm_hit: bool = False
    curiosity: float = 0.0


def reward_step(ctx: TickContext, cfg: RewardConfig = RewardConfig()) -> RewardBreakdown:
    goal_vec = (ctx.d_g[0] - ctx.p_now[0], ctx.d_g[1] - ctx.p_now[1])
    return RewardBreakdown(
        mf=reward_mf(ctx.p_prev, ctx.p_now, ctx.d_g, cfg.b_mf) if cfg.b_mf else 0.0,
        dir=reward_dir(ctx.v_cmd, goal_vec, cfg.c_dir) if cfg.c_dir else 0.0,
        col_s=cfg.d_col_s if ctx.hit_obstacle else 0.0,
        col_d=cfg.e_col_d if ctx.hit_robot else 0.0,
        tim=cfg.g_tim,
        goal=cfg.m_goal if ctx.reached_goal else 0.0,
        norm=cfg.n_norm if ctx.norm_hit else 0.0,
        curiosity=ctx.curiosity,
    )
