"""Numpy MLPs with hand-written backprop, the curiosity module, and PPO-clip with GAE.

Everything runs in float64 so analytic gradients can be checked against central
finite differences.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

ACTION_LOW = np.array([0.01, -2.5])
ACTION_HIGH = np.array([0.20, 2.5])
FEATURE_DIM = 32
CHECKPOINT_FORMAT = "socnav-checkpoint"
CHECKPOINT_VERSION = 1


# --- MLP ---------------------------------------------------------------------------


@dataclass
class NetworkParams:
    """Weights/biases of one MLP; ReLU on hidden layers, linear output."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def __post_init__(self):
        if len(self.weights) != len(self.biases):
            raise ValueError("weights and biases must pair up")
        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.ndim != 2 or b.shape != (w.shape[1],):
                raise ValueError(f"layer {k}: bad shapes {w.shape}, {b.shape}")
            if k and self.weights[k - 1].shape[1] != w.shape[0]:
                raise ValueError(f"layer {k}: input {w.shape[0]} does not match previous output")

    @classmethod
    def init(cls, sizes: Sequence[int], rng: np.random.Generator, out_scale: float = 1.0) -> "NetworkParams":
        ws, bs = [], []
        for k in range(len(sizes) - 1):
            fan_in = sizes[k]
            w = rng.normal(0.0, math.sqrt(2.0 / fan_in), size=(sizes[k], sizes[k + 1]))
            if k == len(sizes) - 2:
                w *= out_scale
            ws.append(w)
            bs.append(np.zeros(sizes[k + 1]))
        return cls(ws, bs)

    @property
    def sizes(self) -> list[int]:
        return [self.weights[0].shape[0]] + [w.shape[1] for w in self.weights]

    def arrays(self) -> list[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out += [w, b]
        return out

    def copy(self) -> "NetworkParams":
        return NetworkParams([w.copy() for w in self.weights], [b.copy() for b in self.biases])

    def to_dict(self) -> dict:
        return {
            "layers": [
                {"shape": list(w.shape), "weight": w.ravel().tolist(), "bias": b.tolist()}
                for w, b in zip(self.weights, self.biases)
            ]
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NetworkParams":
        ws = [np.asarray(L["weight"], dtype=float).reshape(L["shape"]) for L in d["layers"]]
        bs = [np.asarray(L["bias"], dtype=float) for L in d["layers"]]
        return cls(ws, bs)


def mlp_forward(net: NetworkParams, x: np.ndarray) -> tuple[np.ndarray, list]:
    cache = []
    h = x
    last = len(net.weights) - 1
    for k, (w, b) in enumerate(zip(net.weights, net.biases)):
        z = h @ w + b
        cache.append((h, z))
        h = z if k == last else np.maximum(z, 0.0)
    return h, cache


def mlp_backward(net: NetworkParams, cache: list, dout: np.ndarray) -> tuple[list[np.ndarray], np.ndarray]:
    """Gradients in ``arrays()`` order, plus the gradient w.r.t. the input."""
    grads: list[np.ndarray] = [None] * (2 * len(net.weights))  # type: ignore[list-item]
    g = dout
    last = len(net.weights) - 1
    for k in range(last, -1, -1):
        h, z = cache[k]
        if k != last:
            g = g * (z > 0.0)
        grads[2 * k] = h.T @ g
        grads[2 * k + 1] = g.sum(axis=0)
        g = g @ net.weights[k].T
    return grads, g


# --- policy ------------------------------------------------------------------------


@dataclass
class PolicyParams:
    """Gaussian policy: MLP mean plus a state-independent log std."""

    net: NetworkParams
    log_std: np.ndarray

    def arrays(self) -> list[np.ndarray]:
        return self.net.arrays() + [self.log_std]

    def copy(self) -> "PolicyParams":
        return PolicyParams(self.net.copy(), self.log_std.copy())


def squash(u: np.ndarray) -> np.ndarray:
    """Affine map of tanh onto the open action box."""
    return ACTION_LOW + (ACTION_HIGH - ACTION_LOW) * 0.5 * (np.tanh(u) + 1.0)


def unsquash(a: np.ndarray) -> np.ndarray:
    y = 2.0 * (np.asarray(a) - ACTION_LOW) / (ACTION_HIGH - ACTION_LOW) - 1.0
    return np.arctanh(np.clip(y, -1 + 1e-12, 1 - 1e-12))


def forward_policy(params: PolicyParams, state: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    s = np.atleast_2d(state)
    if s.shape[1] != params.net.sizes[0]:
        raise ValueError(f"state dim {s.shape[1]} != policy input {params.net.sizes[0]}")
    mean, _ = mlp_forward(params.net, s)
    log_std = np.broadcast_to(params.log_std, mean.shape)
    if np.ndim(state) == 1:
        return mean[0], log_std[0]
    return mean, log_std


def gaussian_logprob(u: np.ndarray, mean: np.ndarray, log_std: np.ndarray) -> np.ndarray:
    z = (u - mean) * np.exp(-log_std)
    return np.sum(-0.5 * z * z - log_std - 0.5 * math.log(2 * math.pi), axis=-1)


def squashed_logprob(a: np.ndarray, mean: np.ndarray, log_std: np.ndarray) -> np.ndarray:
    """Log density of the squashed action ``a`` (change of variables through tanh)."""
    u = unsquash(a)
    jac = np.log(0.5 * (ACTION_HIGH - ACTION_LOW) * (1.0 - np.tanh(u) ** 2))
    return gaussian_logprob(u, mean, log_std) - jac.sum(axis=-1)


def sample_action(
    params: PolicyParams, states: np.ndarray, rng: np.random.Generator | None, deterministic: bool = False
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Returns (pre-squash u, squashed action, log-prob of u)."""
    mean, log_std = forward_policy(params, np.atleast_2d(states))
    if deterministic or rng is None:
        u = mean.copy()
    else:
        u = mean + np.exp(log_std) * rng.standard_normal(mean.shape)
    return u, squash(u), gaussian_logprob(u, mean, log_std)


# --- curiosity ---------------------------------------------------------------------


@dataclass
class FeatureEncoder:
    """Fixed random linear projection of the state to ``FEATURE_DIM`` features."""

    matrix: np.ndarray

    @classmethod
    def create(cls, state_dim: int, seed: int = 0, dim: int = FEATURE_DIM) -> "FeatureEncoder":
        rng = np.random.default_rng(seed)
        return cls(rng.normal(0.0, 1.0 / math.sqrt(state_dim), size=(state_dim, dim)))

    def __call__(self, s: np.ndarray) -> np.ndarray:
        return np.asarray(s) @ self.matrix


def normalized_action(a: np.ndarray) -> np.ndarray:
    return 2.0 * (np.asarray(a) - ACTION_LOW) / (ACTION_HIGH - ACTION_LOW) - 1.0


def inverse_predict(theta_a: NetworkParams, enc: FeatureEncoder, s: np.ndarray, s_next: np.ndarray):
    x = np.hstack([enc(s), enc(s_next)])
    return mlp_forward(theta_a, x)


def forward_predict(theta_s: NetworkParams, enc: FeatureEncoder, s: np.ndarray, a: np.ndarray):
    x = np.hstack([enc(s), normalized_action(a)])
    return mlp_forward(theta_s, x)


def curiosity_reward(theta_s: NetworkParams, enc: FeatureEncoder, s, a, s_next, delta: float = 0.01) -> np.ndarray:
    """``delta/2 * ||predicted next features - actual next features||^2`` per sample."""
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    s2, a2, n2 = np.atleast_2d(s), np.atleast_2d(a), np.atleast_2d(s_next)
    pred, _ = forward_predict(theta_s, enc, s2, a2)
    r = 0.5 * delta * np.sum((pred - enc(n2)) ** 2, axis=1)
    return r[0] if np.ndim(s) == 1 else r


def inverse_loss(theta_a: NetworkParams, enc: FeatureEncoder, s, a, s_next, grad: bool = False):
    pred, cache = inverse_predict(theta_a, enc, s, s_next)
    diff = pred - normalized_action(a)
    loss = float(np.mean(diff**2))
    if not grad:
        return loss
    g, _ = mlp_backward(theta_a, cache, 2.0 * diff / diff.size)
    return loss, g


def forward_loss(theta_s: NetworkParams, enc: FeatureEncoder, s, a, s_next, grad: bool = False):
    pred, cache = forward_predict(theta_s, enc, s, a)
    diff = pred - enc(s_next)
    loss = float(np.mean(diff**2))
    if not grad:
        return loss
    g, _ = mlp_backward(theta_s, cache, 2.0 * diff / diff.size)
    return loss, g


def value_loss(theta_v: NetworkParams, s, returns, grad: bool = False):
    pred, cache = mlp_forward(theta_v, s)
    diff = pred[:, 0] - returns
    loss = float(np.mean(diff**2))
    if not grad:
        return loss
    g, _ = mlp_backward(theta_v, cache, (2.0 * diff / diff.size)[:, None])
    return loss, g


def clip_objective(
    params: PolicyParams, s, u, logp_old, adv, clip_eps: float = 0.2, grad: bool = False
):
    """PPO-clip surrogate ``E[min(r A, clip(r) A)]`` (to be maximized)."""
    mean, cache = mlp_forward(params.net, s)
    log_std = params.log_std
    logp = gaussian_logprob(u, mean, log_std)
    ratio = np.exp(logp - logp_old)
    clipped = np.clip(ratio, 1.0 - clip_eps, 1.0 + clip_eps)
    obj = float(np.mean(np.minimum(ratio * adv, clipped * adv)))
    if not grad:
        return obj
    active = np.where(adv >= 0, ratio <= 1.0 + clip_eps, ratio >= 1.0 - clip_eps)
    dlogp = np.where(active, ratio * adv, 0.0) / len(adv)
    inv_var = np.exp(-2.0 * log_std)
    dmean = dlogp[:, None] * (u - mean) * inv_var
    dlogstd = np.sum(dlogp[:, None] * ((u - mean) ** 2 * inv_var - 1.0), axis=0)
    g, _ = mlp_backward(params.net, cache, dmean)
    return obj, g + [dlogstd]


# --- GAE / optimizer -----------------------------------------------------------------


def compute_gae(
    rewards: np.ndarray,
    values: np.ndarray,
    next_values: np.ndarray,
    dones: np.ndarray,
    seg_ends: np.ndarray,
    gamma: float = 0.99,
    lam: float = 0.95,
) -> tuple[np.ndarray, np.ndarray]:
    """GAE over one agent's chronologically ordered transitions.

    ``dones`` marks terminal transitions (no bootstrap); ``seg_ends`` marks the last
    transition of a contiguous chain (rollout cut or time limit), where the
    recursion restarts but the value is still bootstrapped.
    """
    n = len(rewards)
    adv = np.zeros(n)
    last = 0.0
    for t in range(n - 1, -1, -1):
        nonterm = 1.0 - dones[t]
        if seg_ends[t] or dones[t]:
            last = 0.0
        delta = rewards[t] + gamma * nonterm * next_values[t] - values[t]
        last = delta + gamma * lam * nonterm * last
        adv[t] = last
    return adv, adv + values


class Adam:
    def __init__(self, arrays: list[np.ndarray], lr: float = 3e-4, b1: float = 0.9, b2: float = 0.999, eps: float = 1e-8):
        self.lr, self.b1, self.b2, self.eps = lr, b1, b2, eps
        self.m = [np.zeros_like(a) for a in arrays]
        self.v = [np.zeros_like(a) for a in arrays]
        self.t = 0

    def step(self, arrays: list[np.ndarray], grads: list[np.ndarray]) -> None:
        """In-place descent step."""
        self.t += 1
        c1 = 1.0 - self.b1**self.t
        c2 = 1.0 - self.b2**self.t
        for a, g, m, v in zip(arrays, grads, self.m, self.v):
            m *= self.b1
            m += (1 - self.b1) * g
            v *= self.b2
            v += (1 - self.b2) * g * g
            a -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)

    def state(self) -> tuple:
        return self.t, [m.copy() for m in self.m], [v.copy() for v in self.v]

    def restore(self, st: tuple) -> None:
        self.t, self.m, self.v = st[0], [m.copy() for m in st[1]], [v.copy() for v in st[2]]


def _clip_grads(grads: list[np.ndarray], max_norm: float) -> list[np.ndarray]:
    total = math.sqrt(sum(float(np.sum(g * g)) for g in grads))
    if max_norm > 0 and total > max_norm:
        return [g * (max_norm / total) for g in grads]
    return grads


# --- PPO update ----------------------------------------------------------------------


@dataclass(frozen=True)
class Hyper:
    alpha: float = 1.0
    beta: float = 0.2
    clip_eps: float = 0.2
    gae_lambda: float = 0.95
    gamma: float = 0.99
    lr: float = 3e-4
    epochs: int = 4
    minibatch: int = 256
    horizon: int = 512
    delta: float = 0.01
    max_grad_norm: float = 0.5
    init_log_std: float = -0.5


@dataclass
class Agent:
    """The four networks plus the fixed feature encoder."""

    policy: PolicyParams
    value: NetworkParams
    inverse: NetworkParams
    forward: NetworkParams
    encoder: FeatureEncoder
    meta: dict = field(default_factory=dict)

    @classmethod
    def create(cls, state_dim: int, seed: int = 0, hyper: Hyper = Hyper()) -> "Agent":
        rng = np.random.default_rng(seed)
        policy = PolicyParams(
            NetworkParams.init([state_dim, 128, 128, 2], rng, out_scale=0.01),
            np.full(2, hyper.init_log_std),
        )
        value = NetworkParams.init([state_dim, 128, 128, 1], rng, out_scale=0.1)
        inverse = NetworkParams.init([2 * FEATURE_DIM, 64, 64, 2], rng)
        forward = NetworkParams.init([FEATURE_DIM + 2, 64, 64, FEATURE_DIM], rng)
        return cls(policy, value, inverse, forward, FeatureEncoder.create(state_dim, seed + 7919), {"state_dim": state_dim})

    @property
    def state_dim(self) -> int:
        return self.policy.net.sizes[0]

    def copy(self) -> "Agent":
        return Agent(
            self.policy.copy(), self.value.copy(), self.inverse.copy(), self.forward.copy(),
            FeatureEncoder(self.encoder.matrix.copy()), dict(self.meta),
        )

    def all_finite(self) -> bool:
        arrays = self.policy.arrays() + self.value.arrays() + self.inverse.arrays() + self.forward.arrays()
        return all(np.all(np.isfinite(a)) for a in arrays)

    def value_of(self, states: np.ndarray) -> np.ndarray:
        out, _ = mlp_forward(self.value, np.atleast_2d(states))
        return out[:, 0]

    # checkpoint I/O: JSON with layer shapes and row-major weights
    def to_dict(self) -> dict:
        return {
            "format": CHECKPOINT_FORMAT,
            "version": CHECKPOINT_VERSION,
            "policy": {**self.policy.net.to_dict(), "log_std": self.policy.log_std.tolist()},
            "value": self.value.to_dict(),
            "inverse": self.inverse.to_dict(),
            "forward": self.forward.to_dict(),
            "encoder": {"shape": list(self.encoder.matrix.shape), "matrix": self.encoder.matrix.ravel().tolist()},
            "meta": self.meta,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Agent":
        if d.get("format") != CHECKPOINT_FORMAT or d.get("version") != CHECKPOINT_VERSION:
            raise ValueError("not a supported checkpoint")
        pol = PolicyParams(NetworkParams.from_dict(d["policy"]), np.asarray(d["policy"]["log_std"], dtype=float))
        enc = FeatureEncoder(np.asarray(d["encoder"]["matrix"], dtype=float).reshape(d["encoder"]["shape"]))
        return cls(
            pol, NetworkParams.from_dict(d["value"]), NetworkParams.from_dict(d["inverse"]),
            NetworkParams.from_dict(d["forward"]), enc, dict(d.get("meta", {})),
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()))

    @classmethod
    def load(cls, path: str | Path) -> "Agent":
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass
class Rollout:
    states: np.ndarray
    u: np.ndarray
    actions: np.ndarray
    logp: np.ndarray
    advantages: np.ndarray
    returns: np.ndarray
    next_states: np.ndarray

    def __len__(self) -> int:
        return len(self.states)


class Optimizers:
    def __init__(self, agent: Agent, lr: float):
        self.policy = Adam(agent.policy.arrays(), lr)
        self.value = Adam(agent.value.arrays(), lr)
        self.inverse = Adam(agent.inverse.arrays(), lr)
        self.forward = Adam(agent.forward.arrays(), lr)

    def all(self) -> list[Adam]:
        return [self.policy, self.value, self.inverse, self.forward]


def joint_objective(agent: Agent, batch: Rollout, hyper: Hyper) -> float:
    """``-alpha * L_clip + (1 - beta) * L_A + beta * L_S``."""
    l_clip = clip_objective(agent.policy, batch.states, batch.u, batch.logp, batch.advantages, hyper.clip_eps)
    l_a = inverse_loss(agent.inverse, agent.encoder, batch.states, batch.actions, batch.next_states)
    l_s = forward_loss(agent.forward, agent.encoder, batch.states, batch.actions, batch.next_states)
    return -hyper.alpha * l_clip + (1 - hyper.beta) * l_a + hyper.beta * l_s


def ppo_update(
    agent: Agent,
    rollout: Rollout,
    hyper: Hyper,
    opt: Optimizers,
    rng: np.random.Generator,
    normalize_adv: bool = True,
) -> dict:
    """Joint update of policy/inverse/forward nets, then value regression, over minibatch epochs.

    A non-finite loss or parameter restores the pre-update state and reports ``aborted``.
    """
    backup = agent.copy()
    opt_backup = [o.state() for o in opt.all()]
    adv = rollout.advantages
    if normalize_adv and len(adv) > 1 and adv.std() > 1e-8:
        adv = (adv - adv.mean()) / (adv.std() + 1e-8)
    stats = {"l_clip": [], "l_a": [], "l_s": [], "l_v": [], "aborted": False}
    n = len(rollout)
    for _ in range(hyper.epochs):
        order = rng.permutation(n)
        for start in range(0, n, hyper.minibatch):
            idx = order[start : start + hyper.minibatch]
            s, u, a, lp, ad, ret, s2 = (
                rollout.states[idx], rollout.u[idx], rollout.actions[idx], rollout.logp[idx],
                adv[idx], rollout.returns[idx], rollout.next_states[idx],
            )
            l_clip, g_p = clip_objective(agent.policy, s, u, lp, ad, hyper.clip_eps, grad=True)
            l_a, g_a = inverse_loss(agent.inverse, agent.encoder, s, a, s2, grad=True)
            l_s, g_s = forward_loss(agent.forward, agent.encoder, s, a, s2, grad=True)
            l_v, g_v = value_loss(agent.value, s, ret, grad=True)
            losses = (l_clip, l_a, l_s, l_v)
            if not all(math.isfinite(x) for x in losses):
                return _abort(agent, backup, opt, opt_backup, stats)
            if hyper.alpha:
                opt.policy.step(agent.policy.arrays(), _clip_grads([-hyper.alpha * g for g in g_p], hyper.max_grad_norm))
            if hyper.beta < 1:
                opt.inverse.step(agent.inverse.arrays(), _clip_grads([(1 - hyper.beta) * g for g in g_a], hyper.max_grad_norm))
            if hyper.beta > 0:
                opt.forward.step(agent.forward.arrays(), _clip_grads([hyper.beta * g for g in g_s], hyper.max_grad_norm))
            opt.value.step(agent.value.arrays(), _clip_grads(g_v, hyper.max_grad_norm))
            for key, val in zip(("l_clip", "l_a", "l_s", "l_v"), losses):
                stats[key].append(val)
    if not agent.all_finite():
        return _abort(agent, backup, opt, opt_backup, stats)
    return {k: (float(np.mean(v)) if isinstance(v, list) and v else v) for k, v in stats.items()}


def _abort(agent: Agent, backup: Agent, opt: Optimizers, opt_backup: list, stats: dict) -> dict:
    agent.policy, agent.value, agent.inverse, agent.forward = backup.policy, backup.value, backup.inverse, backup.forward
    for o, st in zip(opt.all(), opt_backup):
        o.restore(st)
    stats["aborted"] = True
    return {k: (float(np.mean(v)) if isinstance(v, list) and v else v) for k, v in stats.items()}
