"""Train the shipped demo checkpoint (about 5 minutes on one core).

Fusion-filtered rollouts (variant 2) cycled over the Scenario-1 corridor, the
Scenario-2 overtaking corridor and the 4-agent crossroad, with a damped
direction term; see README for why the direction weight is lowered.
"""
import argparse
import shutil
import sys
from pathlib import Path

from socnav.cli import DEMO_CHECKPOINT, main

SCENARIOS = "1,2,crossroad4"


def run() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--episodes", type=int, default=1500)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="runs")
    ap.add_argument("--install", action="store_true", help="copy the result over the packaged demo checkpoint")
    ns = ap.parse_args()
    argv = ["-v", "train", "--scenario", SCENARIOS, "--variant", "2", "--episodes", str(ns.episodes),
            "--seed", str(ns.seed), "--set", "c_dir=0.05", "--out", ns.out]
    code = main(argv)
    if code or not ns.install:
        return code
    tag = SCENARIOS.replace(",", "+")
    runs = sorted(Path(ns.out).glob(f"train-s{tag}-v2-*/checkpoint.json"), key=lambda p: p.stat().st_mtime)
    DEMO_CHECKPOINT.parent.mkdir(parents=True, exist_ok=True)
    shutil.copyfile(runs[-1], DEMO_CHECKPOINT)
    print(f"installed {runs[-1]} -> {DEMO_CHECKPOINT}")
    return 0


if __name__ == "__main__":
    sys.exit(run())
