import json

import pytest

from sgdrf.cli import main

SWEEP = """
[data]
n = 50
D = 3
n_test = 20
noise_sd = 0.1

[features]
kind = "relu"
M = 8

[sgd]
b = 2
gamma = 0.1
passes = 2

[sweep]
"sgd.gamma" = [0.05, 0.1]

[run]
replications = 2
"""

SINGLE = """
[data]
source = "csv"
path = "synth/data.csv"
target_column = 0
has_header = true

[features]
M = 20

[sgd]
b = 1
gamma = 0.3
passes = 3
"""


def test_synth_train_eval_round_trip(tmp_path, capsys, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert main(["synth", "--n", "40", "--D", "3", "--noise-sd", "0.1", "--out-dir", "synth"]) == 0
    (tmp_path / "one.toml").write_text(SINGLE)
    capsys.readouterr()
    assert main(["train", "--config", "one.toml", "--out-dir", "model", "--seed", "3"]) == 0
    trained = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
    assert (tmp_path / "model" / "model.npz").exists()
    assert main(["eval", "--model", "model/model.npz", "--config", "one.toml", "--seed", "3"]) == 0
    evaluated = json.loads(capsys.readouterr().out)
    assert evaluated["mse"] == pytest.approx(trained["holdout_mse"])


def test_sweep_command_and_determinism(tmp_path):
    (tmp_path / "s.toml").write_text(SWEEP)
    for out in ("a", "b"):
        assert main(["sweep", "--config", str(tmp_path / "s.toml"), "--out-dir", str(tmp_path / out)]) == 0
    assert (tmp_path / "a" / "metrics.csv").read_bytes() == (tmp_path / "b" / "metrics.csv").read_bytes()


def test_sweep_seed_flag_shifts_seeds(tmp_path):
    (tmp_path / "s.toml").write_text(SWEEP)
    main(["sweep", "--config", str(tmp_path / "s.toml"), "--out-dir", str(tmp_path / "o"), "--seed", "7"])
    text = (tmp_path / "o" / "metrics.csv").read_text().splitlines()
    assert text[1].split(",")[3] == "7"


def test_config_error_exit_code(tmp_path, capsys):
    (tmp_path / "bad.toml").write_text(SWEEP + "\n[extra]\nx = 1\n")
    assert main(["sweep", "--config", str(tmp_path / "bad.toml"), "--out-dir", str(tmp_path)]) == 1
    assert "unknown section" in capsys.readouterr().err


def test_failed_subruns_exit_two(tmp_path):
    (tmp_path / "d.toml").write_text(SWEEP.replace("[0.05, 0.1]", "[0.05, 500.0]").replace("passes = 2", "T = 2000"))
    assert main(["sweep", "--config", str(tmp_path / "d.toml"), "--out-dir", str(tmp_path / "o")]) == 2
    assert (tmp_path / "o" / "metrics.csv").exists()


def test_plan_command(capsys):
    assert main(["plan", "--tag", "c1.3", "--n", "10000"]) == 0
    out = capsys.readouterr().out
    assert "b = 100" in out and "T = 100" in out


def test_kernel_check_command(tmp_path, capsys):
    args = ["kernel-check", "--kind", "linear-sketch", "--Ms", "16", "64", "--n-seeds", "10", "--out-dir", str(tmp_path)]
    assert main(args) == 0
    assert "log-log slope" in capsys.readouterr().out
    assert (tmp_path / "kernel_check.csv").read_text().count("\n") == 3


def test_spectrum_command(tmp_path, capsys):
    (tmp_path / "s.toml").write_text(SWEEP.split("[sweep]")[0].replace("D = 3", "D = 40"))
    args = ["spectrum", "--config", str(tmp_path / "s.toml"), "--kernel", "linear-sketch", "--out-dir", str(tmp_path)]
    assert main(args) == 0
    result = json.loads(capsys.readouterr().out)
    assert 0 <= result["alpha_hat"] <= 1
    assert (tmp_path / "spectrum.csv").exists()
