"""Brute-force reference computations used to check the fast solvers.

Each oracle is written independently of the code it checks: grid search for the
LPs, a closed-form ray-disc test for velocity obstacles, and central finite
differences for network gradients.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .geometry import HalfPlane, Vec2


def _grid(radius: float, n: int) -> tuple[np.ndarray, float]:
    xs = np.linspace(-radius, radius, n)
    gx, gy = np.meshgrid(xs, xs, indexing="ij")
    pts = np.stack([gx.ravel(), gy.ravel()], axis=1)
    pts = pts[np.hypot(pts[:, 0], pts[:, 1]) <= radius]
    return pts, xs[1] - xs[0]


def _signed(pts: np.ndarray, halfplanes: Sequence[HalfPlane]) -> np.ndarray:
    if not halfplanes:
        return np.zeros((len(pts), 0))
    P = np.array([[h.point.x, h.point.y] for h in halfplanes])
    N = np.array([[h.normal.x, h.normal.y] for h in halfplanes])
    return pts @ N.T - np.sum(P * N, axis=1)


def grid_lp2(halfplanes: Sequence[HalfPlane], radius: float, target: Sequence[float], n: int = 400):
    """Closest feasible grid point to ``target``; ``None`` when no grid point is feasible."""
    pts, res = _grid(radius, n)
    ok = np.all(_signed(pts, halfplanes) >= 0.0, axis=1)
    if not ok.any():
        return None, res
    cand = pts[ok]
    k = int(np.argmin(np.hypot(cand[:, 0] - target[0], cand[:, 1] - target[1])))
    return Vec2(*cand[k]), res


def grid_lp3(halfplanes: Sequence[HalfPlane], radius: float, n: int = 400) -> tuple[Vec2, float, float]:
    """Grid point minimizing the largest violation; returns (point, violation, resolution)."""
    pts, res = _grid(radius, n)
    viol = np.maximum(0.0, -_signed(pts, halfplanes)).max(axis=1)
    k = int(np.argmin(viol))
    return Vec2(*pts[k]), float(viol[k]), res


def vo_hit(rel_p: Sequence[float], rel_v: Sequence[float], radius: float, tau: float) -> bool:
    """Does the relative motion ``rel_v * t`` enter the disc (``rel_p``, ``radius``) for some t in (0, tau]?"""
    px, py = rel_p
    vx, vy = rel_v
    a = vx * vx + vy * vy
    b = -2.0 * (px * vx + py * vy)
    c = px * px + py * py - radius * radius
    if c < 0:
        return True
    if a <= 1e-18:
        return False
    disc = b * b - 4 * a * c
    if disc <= 0:
        return False
    t0 = (-b - math.sqrt(disc)) / (2 * a)
    return 0.0 < t0 < tau


def vo_hit_many(rel_p: Sequence[float], vs: np.ndarray, radius: float, tau: float) -> np.ndarray:
    """Vectorized ``vo_hit`` over rows of ``vs``."""
    px, py = rel_p
    a = vs[:, 0] ** 2 + vs[:, 1] ** 2
    b = -2.0 * (px * vs[:, 0] + py * vs[:, 1])
    c = px * px + py * py - radius * radius
    if c < 0:
        return np.ones(len(vs), dtype=bool)
    disc = b * b - 4 * a * c
    ok = (disc > 0) & (a > 1e-18)
    safe_a = np.where(ok, a, 1.0)
    t0 = (-b - np.sqrt(np.where(ok, disc, 0.0))) / (2 * safe_a)
    return ok & (t0 > 0.0) & (t0 < tau)


def vo_escape_distance(rel_p, rel_v, radius: float, tau: float, samples: int = 720, span: float = 3.0, steps: int = 1200) -> float:
    """Distance from ``rel_v`` to the VO boundary.

    Marches outward along many directions to the first change of membership,
    then bisects inside that bracket.
    """
    inside = vo_hit(rel_p, rel_v, radius, tau)
    ang = np.linspace(0, 2 * math.pi, samples, endpoint=False)
    dirs = np.stack([np.cos(ang), np.sin(ang)], axis=1)
    ts = np.linspace(0.0, span, steps + 1)[1:]
    pts = np.asarray(rel_v)[None, None, :] + ts[None, :, None] * dirs[:, None, :]
    hit = vo_hit_many(rel_p, pts.reshape(-1, 2), radius, tau).reshape(samples, steps)
    changed = hit != inside
    best = math.inf
    for k in np.flatnonzero(changed.any(axis=1)):
        j = int(np.argmax(changed[k]))
        lo, hi = (ts[j - 1] if j else 0.0), ts[j]
        if lo >= best:
            continue
        d = dirs[k]
        for _ in range(40):
            mid = 0.5 * (lo + hi)
            if vo_hit(rel_p, (rel_v[0] + mid * d[0], rel_v[1] + mid * d[1]), radius, tau) == inside:
                lo = mid
            else:
                hi = mid
        best = min(best, hi)
    return best


def finite_difference(f: Callable[[], float], arrays: Sequence[np.ndarray], step: float = 1e-5) -> list[np.ndarray]:
    """Central differences of ``f`` w.r.t. every entry of ``arrays`` (mutated in place, then restored)."""
    out = []
    for a in arrays:
        g = np.zeros_like(a)
        it = np.nditer(a, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            orig = a[idx]
            a[idx] = orig + step
            fp = f()
            a[idx] = orig - step
            fm = f()
            a[idx] = orig
            g[idx] = (fp - fm) / (2 * step)
        out.append(g)
    return out


def relative_error(analytic: Sequence[np.ndarray], numeric: Sequence[np.ndarray], floor: float = 1e-8) -> float:
    """``max |a - n| / max(|a| + |n|, floor)`` over every entry, scaled per array."""
    worst = 0.0
    for a, n in zip(analytic, numeric):
        scale = max(float(np.max(np.abs(a) + np.abs(n))), floor)
        worst = max(worst, float(np.max(np.abs(a - n))) / scale)
    return worst


@dataclass
class OracleReport:
    suite: str
    instances: int
    worst: float
    tolerance: float
    failures: int
    skipped: int = 0

    @property
    def passed(self) -> bool:
        return self.failures == 0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.suite}: instances={self.instances} worst={self.worst:.3g} tol={self.tolerance:.3g} failures={self.failures} skipped={self.skipped}"


def random_halfplanes(rng: np.random.Generator, max_count: int = 8, radius: float = 0.2) -> list[HalfPlane]:
    out = []
    for _ in range(int(rng.integers(1, max_count + 1))):
        ang = rng.uniform(0, 2 * math.pi)
        n = Vec2(math.cos(ang), math.sin(ang))
        off = rng.uniform(-1.2 * radius, 0.8 * radius)
        out.append(HalfPlane(Vec2(n.x * off, n.y * off), n))
    return out


def run_lp2_suite(instances: int = 1000, seed: int = 0, n: int = 400, radius: float = 0.2) -> OracleReport:
    """Compare lp2 with the grid optimum by objective value (distance to the target).

    The exact solver must never be worse than a feasible grid point, and may be
    better by at most twice the grid resolution. Instances whose feasible region
    near the exact optimum is thinner than the grid (no feasible grid point within
    that tolerance) cannot be resolved by the oracle and are counted as skipped.
    """
    from .orca import OrcaConstraintSet, lp2

    rng = np.random.default_rng(seed)
    pts, res = _grid(radius, n)
    tol = 2 * res
    worst, fails, skipped = 0.0, 0, 0
    for _ in range(instances):
        hps = random_halfplanes(rng, radius=radius)
        target = Vec2(*rng.uniform(-radius, radius, 2))
        cons = OrcaConstraintSet(tuple(hps), radius)
        got = lp2(cons, target)
        feasible = np.all(_signed(pts, hps) >= 0.0, axis=1)
        if got is None:
            fails += bool(feasible.any())
            continue
        if not cons.satisfied_by(got, tol=1e-7):
            fails += 1
            continue
        near = feasible & (np.hypot(pts[:, 0] - got.x, pts[:, 1] - got.y) <= tol)
        if not near.any():
            skipped += 1
            continue
        cand = pts[feasible]
        ref = float(np.min(np.hypot(cand[:, 0] - target.x, cand[:, 1] - target.y)))
        gap = ref - math.hypot(got.x - target.x, got.y - target.y)
        worst = max(worst, abs(gap))
        if gap < -1e-9 or gap > tol:
            fails += 1
    return OracleReport("lp2", instances, worst, tol, fails, skipped)


def run_lp3_suite(instances: int = 1000, seed: int = 1, n: int = 400, radius: float = 0.2) -> OracleReport:
    from .orca import OrcaConstraintSet, lp3, max_violation

    rng = np.random.default_rng(seed)
    pts, res = _grid(radius, n)
    worst, fails = 0.0, 0
    for _ in range(instances):
        hps = random_halfplanes(rng, radius=radius)
        cons = OrcaConstraintSet(tuple(hps), radius)
        got = lp3(cons)
        ref_v = float(np.maximum(0.0, -_signed(pts, hps)).max(axis=1).min())
        excess = max_violation(cons, got) - ref_v
        worst = max(worst, excess)
        if excess > 2 * res or math.hypot(*got) > radius + 1e-9:
            fails += 1
    return OracleReport("lp3", instances, worst, 2 * res, fails)


def run_vo_suite(instances: int = 200, seed: int = 2) -> OracleReport:
    from .orca import VOQuery, compute_u_and_n, vo_contains

    rng = np.random.default_rng(seed)
    worst, fails = 0.0, 0
    for _ in range(instances):
        R = rng.uniform(0.2, 0.4)
        ang, dist = rng.uniform(0, 2 * math.pi), rng.uniform(R * 1.1, 3.0)
        p = (dist * math.cos(ang), dist * math.sin(ang))
        v = tuple(rng.uniform(-0.4, 0.4, 2))
        q = VOQuery(Vec2(*p), Vec2(*v), R, 4.0)
        if vo_contains(q, v) != vo_hit(p, v, R, 4.0):
            fails += 1
            continue
        u, _ = compute_u_and_n(q)
        ref = vo_escape_distance(p, v, R, 4.0)
        err = abs(math.hypot(*u) - ref)
        worst = max(worst, err)
        if err > 2e-3:
            fails += 1
    return OracleReport("vo", instances, worst, 2e-3, fails)


def run_gradient_suite(instances: int = 100, seed: int = 3, tol: float = 1e-4) -> OracleReport:
    from . import neural as nn

    rng = np.random.default_rng(seed)
    worst, fails = 0.0, 0
    for _ in range(instances):
        errs = gradient_errors(rng)
        w = max(errs.values())
        worst = max(worst, w)
        fails += w > tol
    return OracleReport("gradients", instances, worst, tol, fails)


def gradient_errors(rng: np.random.Generator, state_dim: int = 5, batch: int = 6) -> dict[str, float]:
    """Relative error of each analytic loss gradient against central differences on a random tiny net."""
    from . import neural as nn

    hidden = int(rng.integers(3, 7))
    policy = nn.PolicyParams(nn.NetworkParams.init([state_dim, hidden, 2], rng), rng.normal(-0.5, 0.2, 2))
    value = nn.NetworkParams.init([state_dim, hidden, 1], rng)
    enc = nn.FeatureEncoder.create(state_dim, int(rng.integers(1 << 30)), dim=4)
    inv = nn.NetworkParams.init([8, hidden, 2], rng)
    fwd = nn.NetworkParams.init([4 + 2, hidden, 4], rng)
    s = rng.normal(size=(batch, state_dim))
    s2 = rng.normal(size=(batch, state_dim))
    u = rng.normal(size=(batch, 2))
    a = nn.squash(u)
    adv = rng.normal(size=batch)
    mean, _ = nn.mlp_forward(policy.net, s)
    # old log-probs spread ratios across the clip boundary without sitting on it
    logp_old = nn.gaussian_logprob(u, mean, policy.log_std) + rng.choice([-0.5, -0.05, 0.05, 0.5], size=batch)
    ret = rng.normal(size=batch)

    out = {}
    _, g = nn.clip_objective(policy, s, u, logp_old, adv, 0.2, grad=True)
    num = finite_difference(lambda: nn.clip_objective(policy, s, u, logp_old, adv, 0.2), policy.arrays())
    out["l_clip"] = relative_error(g, num)
    _, g = nn.inverse_loss(inv, enc, s, a, s2, grad=True)
    out["l_a"] = relative_error(g, finite_difference(lambda: nn.inverse_loss(inv, enc, s, a, s2), inv.arrays()))
    _, g = nn.forward_loss(fwd, enc, s, a, s2, grad=True)
    out["l_s"] = relative_error(g, finite_difference(lambda: nn.forward_loss(fwd, enc, s, a, s2), fwd.arrays()))
    _, g = nn.value_loss(value, s, ret, grad=True)
    out["l_v"] = relative_error(g, finite_difference(lambda: nn.value_loss(value, s, ret), value.arrays()))
    return out
