"""Command line: train, eval, run, oracle.

Every command writes under ``<out>/<command>-<tag>-<hash>/`` where ``hash`` is a
digest of the resolved configuration, so identical invocations land in the same
directory with byte-identical files.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

from .fusion import Mode
from .neural import Agent, Hyper
from .rewards import RewardConfig
from .sim import SCENARIO_FILES, SimConfig, build_scenario, evaluate, load_scenario, run_episode

EXIT_OK, EXIT_CONFIG, EXIT_ORACLE, EXIT_DIVERGED = 0, 2, 3, 4
DEFAULT_SEED = 0
OUT_ENV = "SOCNAV_OUT"
DEMO_CHECKPOINT = Path(__file__).parent / "checkpoints" / "demo.json"

log = logging.getLogger("socnav")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    scenario: str = "3"
    mode: str = Mode.ORCA_DRL.value
    variant: int = 1
    seed: int = DEFAULT_SEED
    episodes: int = 1
    checkpoint: str | None = None
    out: str = "runs"
    workers: int = 1
    suite: str = "all"
    instances: int | None = None
    rewards: dict = field(default_factory=dict)
    hyper: dict = field(default_factory=dict)

    def digest(self) -> str:
        d = asdict(self)
        d.pop("out")
        d.pop("workers")  # worker count never changes results
        if self.checkpoint:
            d["checkpoint"] = hashlib.sha256(Path(self.checkpoint).read_bytes()).hexdigest()
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()[:10]

    def out_dir(self, tag: str) -> Path:
        p = Path(self.out) / f"{self.command}-{tag}-{self.digest()}"
        p.mkdir(parents=True, exist_ok=True)
        return p

    def reward_config(self) -> RewardConfig:
        return RewardConfig().with_overrides(**self.rewards)

    def hyper_config(self) -> Hyper:
        return replace(Hyper(), **self.hyper)


def _parse_sets(items: list[str]) -> tuple[dict, dict]:
    rw_keys = {f.name for f in fields(RewardConfig)}
    hy_keys = {f.name: f.type for f in fields(Hyper)}
    rewards, hyper = {}, {}
    for item in items:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        try:
            if k in rw_keys:
                rewards[k] = float(v)
            elif k in hy_keys:
                hyper[k] = int(v) if hy_keys[k] in (int, "int") else float(v)
            else:
                raise ConfigError(f"unknown override key {k!r}")
        except ValueError as e:
            raise ConfigError(f"bad value for {k}: {v!r}") from e
    return rewards, hyper


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="socnav", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, mode=True):
        p.add_argument("--scenario", default="3", help=f"scenario id ({', '.join(SCENARIO_FILES)}) or JSON path; train accepts a comma-separated list")
        if mode:
            p.add_argument("--mode", default=Mode.ORCA_DRL.value, choices=[m.value for m in Mode])
        p.add_argument("--seed", type=int, default=DEFAULT_SEED)
        p.add_argument("--checkpoint", default=None)
        p.add_argument("--out", default=os.environ.get(OUT_ENV, "runs"))
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="reward or hyperparameter override")

    p = sub.add_parser("train", help="train the shared policy")
    common(p, mode=False)
    p.add_argument("--variant", type=int, default=1, choices=(1, 2), help="1: raw rollouts, 2: fusion-filtered rollouts")
    p.add_argument("--episodes", type=int, default=1000)
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("eval", help="evaluate a mode over many seeded episodes")
    common(p)
    p.add_argument("--episodes", type=int, default=50)
    p.add_argument("--workers", type=int, default=os.cpu_count() or 1)

    p = sub.add_parser("run", help="run one episode and plot it")
    common(p)
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("oracle", help="check solvers against brute-force references")
    p.add_argument("--suite", default="all", choices=("all", "lp2", "lp3", "vo", "gradients"))
    p.add_argument("--instances", type=int, default=None)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--out", default=os.environ.get(OUT_ENV, "runs"))
    return ap


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    rewards, hyper = _parse_sets(getattr(ns, "set", []))
    cfg = RunConfig(
        command=ns.command,
        scenario=str(getattr(ns, "scenario", "3")),
        mode=getattr(ns, "mode", Mode.ORCA_DRL.value),
        variant=getattr(ns, "variant", 1),
        seed=ns.seed,
        episodes=getattr(ns, "episodes", 1),
        checkpoint=getattr(ns, "checkpoint", None),
        out=ns.out,
        workers=max(1, getattr(ns, "workers", 1)),
        suite=getattr(ns, "suite", "all"),
        instances=getattr(ns, "instances", None),
        rewards=rewards,
        hyper=hyper,
    )
    if cfg.command != "oracle":
        names = cfg.scenario.split(",") if cfg.command == "train" else [cfg.scenario]
        for name in names:
            if name not in SCENARIO_FILES and not Path(name).exists():
                raise ConfigError(f"no such scenario {name!r}")
        if cfg.episodes < 1:
            raise ConfigError("--episodes must be >= 1")
    if cfg.checkpoint is not None and not Path(cfg.checkpoint).exists():
        raise ConfigError(f"checkpoint {cfg.checkpoint!r} does not exist")
    if cfg.command in ("eval", "run") and Mode(cfg.mode).uses_network and cfg.checkpoint is None:
        if not DEMO_CHECKPOINT.exists():
            raise ConfigError(f"mode {cfg.mode} needs --checkpoint")
        cfg.checkpoint = str(DEMO_CHECKPOINT)
    try:
        cfg.reward_config()
        cfg.hyper_config()
    except (KeyError, ValueError, TypeError) as e:
        raise ConfigError(str(e)) from e
    return cfg


def _scenario(cfg: RunConfig, seed: int):
    return build_scenario(cfg.scenario, seed) if cfg.scenario in SCENARIO_FILES else load_scenario(cfg.scenario, seed)


def _tag(cfg: RunConfig) -> str:
    return f"s{Path(cfg.scenario).stem if cfg.scenario not in SCENARIO_FILES else cfg.scenario}-{cfg.mode}"


def cmd_train(cfg: RunConfig) -> int:
    from .plots import curves_svg
    from .training import TrainConfig, TrainingDiverged, train

    out = cfg.out_dir(f"s{cfg.scenario.replace(',', '+')}-v{cfg.variant}")
    tc = TrainConfig(cfg.scenario, cfg.variant, cfg.episodes, cfg.seed, cfg.hyper_config(), cfg.reward_config())
    start = Agent.load(cfg.checkpoint) if cfg.checkpoint else None
    try:
        res = train(tc, start, out, progress=lambda p: log.info(
            "iter %d  episodes %d  ex %.2f  curiosity %.4f  success %.2f",
            p.iteration, p.episodes, p.mean_ex_reward, p.mean_curiosity, p.success_rate))
    except TrainingDiverged as e:
        print(f"training diverged: {e}; last finite checkpoint: {e.checkpoint}", file=sys.stderr)
        return EXIT_DIVERGED
    res.agent.meta["rewards"] = asdict(tc.rewards)
    res.agent.save(out / "checkpoint.json")
    (out / "curves.csv").write_text(res.curve_csv())
    it = [c.iteration for c in res.curve]
    (out / "curves.svg").write_text(curves_svg(it, [c.mean_ex_reward for c in res.curve], [c.mean_curiosity for c in res.curve]))
    print(out)
    return EXIT_OK


def _model(cfg: RunConfig):
    return Agent.load(cfg.checkpoint) if Mode(cfg.mode).uses_network else None


def cmd_eval(cfg: RunConfig) -> int:
    out = cfg.out_dir(_tag(cfg))
    rewards = cfg.reward_config()
    if cfg.scenario in SCENARIO_FILES:
        rep = evaluate(cfg.scenario, cfg.mode, cfg.episodes, cfg.seed, _model(cfg), SimConfig(), rewards, cfg.workers)
    else:
        from .sim import metrics_from_logs

        model = _model(cfg)
        rep = metrics_from_logs([run_episode(_scenario(cfg, cfg.seed + k), cfg.mode, cfg.seed + k, model, rewards=rewards)
                                 for k in range(cfg.episodes)])
    (out / "metrics.csv").write_text(rep.to_csv())
    (out / "metrics.txt").write_text(rep.to_text())
    print(rep.to_text(), end="")
    print(out)
    return EXIT_OK


def cmd_run(cfg: RunConfig) -> int:
    from .plots import trajectory_svg

    out = cfg.out_dir(_tag(cfg))
    scn = _scenario(cfg, cfg.seed)
    ep = run_episode(scn, cfg.mode, cfg.seed, _model(cfg), rewards=cfg.reward_config())
    (out / "episode.csv").write_text(ep.to_csv())
    (out / "trajectory.svg").write_text(trajectory_svg(ep, scn))
    print(f"outcomes: {ep.outcomes}  ticks: {ep.ticks}")
    print(out)
    return EXIT_OK


def cmd_oracle(cfg: RunConfig) -> int:
    from . import oracles

    suites = {
        "lp2": (oracles.run_lp2_suite, 1000),
        "lp3": (oracles.run_lp3_suite, 1000),
        "vo": (oracles.run_vo_suite, 200),
        "gradients": (oracles.run_gradient_suite, 100),
    }
    names = list(suites) if cfg.suite == "all" else [cfg.suite]
    reports = []
    for k, name in enumerate(names):
        fn, default_n = suites[name]
        reports.append(fn(instances=cfg.instances or default_n, seed=cfg.seed + k))
    text = "\n".join(r.line() for r in reports) + "\n"
    out = cfg.out_dir(cfg.suite)
    (out / "report.txt").write_text(text)
    print(text, end="")
    return EXIT_OK if all(r.passed for r in reports) else EXIT_ORACLE


COMMANDS = {"train": cmd_train, "eval": cmd_eval, "run": cmd_run, "oracle": cmd_oracle}


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    try:
        ns = ap.parse_args(argv)
    except SystemExit as e:
        return EXIT_CONFIG if e.code not in (0, None) else EXIT_OK
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg = config_from_args(ns)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    return COMMANDS[cfg.command](cfg)


if __name__ == "__main__":
    sys.exit(main())
