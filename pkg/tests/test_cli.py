import pytest

from socnav import cli, training
from socnav.cli import EXIT_CONFIG, EXIT_DIVERGED, EXIT_OK, main


def only_dir(root, prefix):
    dirs = [p for p in root.iterdir() if p.name.startswith(prefix)]
    assert len(dirs) == 1
    return dirs[0]


@pytest.mark.parametrize(
    "argv",
    [
        ["eval", "--scenario", "nope"],
        ["eval", "--set", "bogus=1"],
        ["eval", "--set", "c_dir=abc"],
        ["eval", "--episodes", "0"],
        ["run", "--checkpoint", "/no/such/file.json"],
        ["frobnicate"],
    ],
)
def test_config_errors(argv, tmp_path):
    assert main(argv + ["--out", str(tmp_path)] if argv[0] != "frobnicate" else argv) == EXIT_CONFIG


def test_eval_is_byte_identical(tmp_path):
    argv = ["eval", "--scenario", "headon", "--mode", "pure-orca", "--episodes", "3", "--seed", "7", "--workers", "1"]
    assert main(argv + ["--out", str(tmp_path / "a")]) == EXIT_OK
    assert main(argv + ["--out", str(tmp_path / "b")]) == EXIT_OK
    da, db = only_dir(tmp_path / "a", "eval-"), only_dir(tmp_path / "b", "eval-")
    assert da.name == db.name
    assert (da / "metrics.csv").read_bytes() == (db / "metrics.csv").read_bytes()


def test_run_writes_log_and_svg(tmp_path):
    assert main(["run", "--scenario", "headon", "--mode", "pure-orca", "--out", str(tmp_path)]) == EXIT_OK
    d = only_dir(tmp_path, "run-")
    assert (d / "episode.csv").read_text().startswith("tick,agent,px,py,psi,v,w,case,r_ex,r_c,outcome")
    assert (d / "trajectory.svg").read_text().startswith("<svg")


def test_oracle_command(tmp_path):
    assert main(["oracle", "--suite", "vo", "--instances", "5", "--out", str(tmp_path)]) == EXIT_OK
    assert "PASS" in (only_dir(tmp_path, "oracle-") / "report.txt").read_text()


def test_train_small(tmp_path):
    argv = ["train", "--scenario", "headon", "--episodes", "2", "--set", "horizon=64", "--set", "minibatch=32",
            "--set", "c_dir=0.05", "--out", str(tmp_path)]
    assert main(argv) == EXIT_OK
    d = only_dir(tmp_path, "train-")
    for name in ("checkpoint.json", "curves.csv", "curves.svg"):
        assert (d / name).exists()


def test_train_divergence_exit_code(tmp_path, monkeypatch):
    def boom(agent, rollout, hyper, opt, rng):
        return {"aborted": True}

    monkeypatch.setattr(training, "ppo_update", boom)
    argv = ["train", "--scenario", "headon", "--episodes", "1", "--set", "horizon=32", "--out", str(tmp_path)]
    assert main(argv) == EXIT_DIVERGED
    assert (only_dir(tmp_path, "train-") / "last_finite.json").exists()


def test_digest_ignores_workers_and_out():
    a = cli.RunConfig("eval", workers=1, out="x")
    b = cli.RunConfig("eval", workers=8, out="y")
    assert a.digest() == b.digest()
    assert a.digest() != cli.RunConfig("eval", seed=1).digest()
