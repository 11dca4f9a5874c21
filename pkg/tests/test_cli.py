import csv
import math
import os
import subprocess
import sys

import numpy as np
import pytest

from levydp import cli, verify
from levydp.accountant import NoiseSpec
from levydp.config import read_config_file, read_config_text
from levydp.divergence_lab import VerificationRow
from levydp.errors import ConfigError
from levydp.simulator import Dataset, InitSpec, NeighborPair, QuadraticLoss, run_pair

ACCOUNT = [
    "account", "--mode", "multifractal", "--setting", "continuous", "--beta", "2", "--n", "10",
    "--sg", "1", "--sigma2", "1", "--gamma", "1", "--t", "100", "--delta", "0.01",
]


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_account_example(tmp_path, capsys):
    assert cli.main(ACCOUNT + ["--out", str(tmp_path)]) == 0
    (row,) = _rows(tmp_path / "account.csv")
    assert float(row["kappa"]) == pytest.approx(0.0202027073175194, rel=1e-12)
    assert row["regime"] == "TimeUniform"
    assert float(row["epsilon_at_delta"]) == pytest.approx(float(row["kappa"]) + math.log(100))
    assert float(row["zero_delta"]) == pytest.approx(math.sqrt(float(row["kappa"]) / 2))
    assert "TimeUniform" in capsys.readouterr().out


def test_account_zero_sensitivity(tmp_path):
    args = ACCOUNT + ["--out", str(tmp_path)]
    args[args.index("--sg") + 1] = "0"
    assert cli.main(args) == 0
    (row,) = _rows(tmp_path / "account.csv")
    assert float(row["kappa"]) == 0.0
    assert float(row["epsilon_at_delta"]) == pytest.approx(math.log(100))


def test_account_pure_jump_discrete_and_grid(tmp_path, capsys):
    args = [
        "account", "--mode", "pure-jump", "--setting", "discrete", "--n", "100", "--d", "2", "--sg", "1",
        "--sigma-alpha", "1", "--alpha", "1.5", "--k", "10", "--eta", "0.1", "--beta-grid", "2,4,8", "--out", str(tmp_path),
    ]
    assert cli.main(args) == 0
    out = capsys.readouterr().out
    assert "conditional on R = 1" in out and "R^-0.5" in out and "best beta" in out
    rows = _rows(tmp_path / "account.csv")
    assert [float(r["beta"]) for r in rows] == [2.0, 4.0, 8.0]
    assert float(rows[0]["kappa"]) == pytest.approx(3.7193e-4, rel=1e-4)


def test_missing_flag_exit_2(tmp_path, capsys):
    args = [a for a in ACCOUNT if a not in ("--t", "100")] + ["--out", str(tmp_path)]
    assert cli.main(args) == 2
    assert "--t" in capsys.readouterr().err


@pytest.mark.parametrize(
    "extra",
    [["--sigma2", "0"], ["--delta", "2"], ["--n", "0"], ["--beta", "1.5"], ["--mode", "mixed"], ["--n", "ten"]],
)
def test_config_errors_exit_2(tmp_path, extra):
    assert cli.main(ACCOUNT + extra + ["--out", str(tmp_path)]) == 2


def test_domain_error_exit_3(tmp_path, capsys):
    args = [
        "account", "--mode", "multifractal", "--setting", "continuous", "--n", "1", "--sg", "1e200",
        "--sigma2", "1e-200", "--t", "1", "--out", str(tmp_path),
    ]
    assert cli.main(args) == 3
    assert "overflows" in capsys.readouterr().err


def test_unknown_suite_and_key(tmp_path):
    assert cli.main(["verify", "--suite", "nope", "--out", str(tmp_path)]) == 2
    cfg = tmp_path / "bad.ini"
    cfg.write_text("[noise]\nalpha = 1.5\nbogus = 3\n")
    assert cli.main(["account", "--config", str(cfg), "--out", str(tmp_path)]) == 2
    with pytest.raises(ConfigError, match="noise.bogus"):
        read_config_file(str(cfg))
    with pytest.raises(ConfigError):
        read_config_file(str(tmp_path / "missing.ini"))


def test_config_precedence(tmp_path):
    cfg = tmp_path / "run.ini"
    cfg.write_text(
        "[accounting]\nmode = multifractal\nsetting = continuous\nt = 100\ndelta = 0.01\n"
        "[problem]\nn = 20\nsg = 1\n[noise]\nsigma2 = 1\n"
    )
    out = tmp_path / "o"
    assert cli.main(["account", "--config", str(cfg), "--n", "10", "--out", str(out)]) == 0
    (row,) = _rows(out / "account.csv")
    assert float(row["kappa"]) == pytest.approx(0.0202027073175194, rel=1e-12)
    resolved = read_config_file(str(out / "resolved.ini"))
    assert resolved["problem.n"] == 10 and resolved["accounting.R"] == 1.0
    out2 = tmp_path / "o2"
    assert cli.main(["account", "--config", str(out / "resolved.ini"), "--out", str(out2)]) == 0
    assert (out / "account.csv").read_bytes() == (out2 / "account.csv").read_bytes()


def _simulate_args(out, *extra):
    return [
        "simulate", "--n", "6", "--d", "2", "--steps", "25", "--eta", "0.1", "--seed", "11",
        "--alpha", "1.5", "--sigma-alpha", "0.5", "--sigma2", "0.2", "--trajectories", "4",
        "--checkpoints", "0,10,25", "--out", str(out), *extra,
    ]


def test_simulate_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert cli.main(_simulate_args(a)) == 0
    assert cli.main(_simulate_args(b)) == 0
    assert (a / "checkpoints.csv").read_bytes() == (b / "checkpoints.csv").read_bytes()
    manifest = (a / "manifest.txt").read_text()
    assert "simulate.seed = 11" in manifest and "run.truncated_trajectories = 0" in manifest
    c = tmp_path / "c"
    assert cli.main(["simulate", "--config", str(a / "resolved.ini"), "--out", str(c)]) == 0
    assert (a / "checkpoints.csv").read_bytes() == (c / "checkpoints.csv").read_bytes()


def test_simulate_one_trajectory_equals_run_pair(tmp_path):
    data = tmp_path / "data.csv"
    z = np.array([[0.1, -0.2], [0.3, 0.4], [-0.5, 0.0]])
    np.savetxt(data, z, delimiter=",")
    out = tmp_path / "o"
    args = [
        "simulate", "--data", str(data), "--steps", "12", "--eta", "0.2", "--seed", "3", "--sigma-alpha", "0.7",
        "--sigma2", "0.1", "--replacement", "0.2,0.2", "--out", str(out),
    ]
    assert cli.main(args) == 0
    pair = NeighborPair.replace_point(Dataset(z, 1.0), 0, [0.2, 0.2])
    tr = run_pair(pair, QuadraticLoss(), NoiseSpec(1.5, 0.7, 0.1), 0.2, 12, seed=3)
    rows = _rows(out / "checkpoints.csv")
    assert len(rows) == 2 * 13
    for r in rows:
        w = tr.w if r["which"] == "S" else tr.w_prime
        k = int(r["step"])
        assert [float(r["w_1"]), float(r["w_2"])] == list(w[k])


def test_simulate_noiseless_closed_form(tmp_path):
    data = tmp_path / "data.csv"
    np.savetxt(data, np.array([[0.2], [0.6], [-0.4]]), delimiter=",")
    out = tmp_path / "o"
    args = [
        "simulate", "--data", str(data), "--steps", "40", "--eta", "0.25", "--seed", "0", "--sigma-alpha", "0",
        "--sigma2", "0", "--w0", "1.5", "--out", str(out),
    ]
    assert cli.main(args) == 0
    mean_s, mean_p = np.mean([0.2, 0.6, -0.4]), np.mean([-0.2, 0.6, -0.4])
    for r in _rows(out / "checkpoints.csv"):
        m = mean_s if r["which"] == "S" else mean_p
        k = int(r["step"])
        assert abs(float(r["w_1"]) - (m + 0.75**k * (1.5 - m))) <= 1e-10


def test_simulate_truncation_exit_3(tmp_path, capsys):
    out = tmp_path / "o"
    args = [
        "simulate", "--n", "2", "--d", "1", "--steps", "1200", "--eta", "3", "--seed", "0",
        "--sigma-alpha", "0", "--w0", "1", "--checkpoints", "1200", "--out", str(out),
    ]
    assert cli.main(args) == 3
    manifest = (out / "manifest.txt").read_text()
    assert "run.truncated_trajectories = 1" in manifest
    step = int(manifest.split("run.first_truncation_step = ")[1].split()[0])
    assert 1000 < step <= 1200
    assert "overflowed" in capsys.readouterr().err


def test_simulate_config_errors(tmp_path):
    assert cli.main(_simulate_args(tmp_path, "--batch", "99")) == 2
    assert cli.main(_simulate_args(tmp_path, "--checkpoints", "99")) == 2
    assert cli.main(_simulate_args(tmp_path, "--differing-index", "6")) == 2
    assert cli.main(_simulate_args(tmp_path, "--w0", "1,2,3")) == 2
    assert cli.main(_simulate_args(tmp_path, "--data", str(tmp_path / "nope.csv"))) == 2
    assert cli.main(["simulate", "--n", "3", "--eta", "0.1", "--seed", "1", "--out", str(tmp_path)]) == 2


def test_simulate_logistic(tmp_path):
    out = tmp_path / "o"
    args = _simulate_args(out, "--loss", "logistic", "--feature-bound", "2")
    assert cli.main(args) == 0
    assert "run.gradient_sensitivity = 4.0" in (out / "manifest.txt").read_text()


def test_verify_bregman_seed_7(tmp_path):
    assert cli.main(["verify", "--suite", "bregman", "--seed", "7", "--out", str(tmp_path)]) == 0
    rows = _rows(tmp_path / "verify.csv")
    assert len(rows) == 4 and all(r["pass"] == "true" for r in rows)
    assert list(rows[0]) == list(VerificationRow.HEADER)


def test_verify_failure_exit_1(tmp_path, monkeypatch):
    monkeypatch.setitem(verify.SUITES, "bregman", lambda seed: [VerificationRow("forced", {}, 1.0, 0.0, -1.0, 0.0, False)])
    assert cli.main(["verify", "--suite", "bregman", "--out", str(tmp_path)]) == 1


def test_verify_all_row_count(monkeypatch, tmp_path):
    sizes = {name: i + 1 for i, name in enumerate(verify.SUITES)}
    for name, m in sizes.items():
        monkeypatch.setitem(verify.SUITES, name, lambda seed, m=m, name=name: [VerificationRow(name, {}, 0.0, 1.0, 1.0, 0.0, True)] * m)
    assert cli.main(["verify", "--suite", "all", "--out", str(tmp_path)]) == 0
    assert len(_rows(tmp_path / "verify.csv")) == sum(sizes.values())


def test_sweep_single_value_equals_account(tmp_path):
    sw, ac = tmp_path / "sw", tmp_path / "ac"
    base = ACCOUNT[1:]
    assert cli.main(["sweep", *base, "--axis", "n", "--values", "10", "--out", str(sw)]) == 0
    assert cli.main(ACCOUNT + ["--out", str(ac)]) == 0
    (srow,) = _rows(sw / "sweep.csv")
    (arow,) = _rows(ac / "account.csv")
    for key in ("kappa", "regime", "epsilon_at_delta", "zero_delta"):
        assert srow[key] == arow[key]
    long = _rows(sw / "sweep_long.csv")
    assert {r["metric"] for r in long} == {"beta", "K_n", "a", "kappa", "epsilon_at_delta", "zero_delta"}


def test_sweep_d_slope_and_n_monotone(tmp_path):
    args = [
        "sweep", "--mode", "pure-jump", "--setting", "continuous", "--n", "1000", "--sg", "1", "--alpha", "1.5",
        "--t", "1", "--axis", "d", "--values", "8,16,32,64", "--out", str(tmp_path / "d"),
    ]
    assert cli.main(args) == 0
    rows = _rows(tmp_path / "d" / "sweep.csv")
    slope = np.polyfit(np.log([8, 16, 32, 64]), np.log([float(r["zero_delta"]) for r in rows]), 1)[0]
    assert abs(slope - 0.125) <= 0.15 * 0.125
    args[args.index("--axis") + 1] = "n"
    args[args.index("--values") + 1] = "1,10,100,1000"
    args[-1] = str(tmp_path / "n")
    assert cli.main(args) == 0
    ks = [float(r["kappa"]) for r in _rows(tmp_path / "n" / "sweep.csv")]
    assert all(x >= y for x, y in zip(ks, ks[1:]))


def test_sweep_invalid_rows_kept(tmp_path, capsys):
    args = [
        "sweep", "--mode", "pure-jump", "--setting", "continuous", "--n", "10", "--sg", "1", "--t", "1",
        "--axis", "alpha", "--values", "0.5,1.5", "--out", str(tmp_path),
    ]
    assert cli.main(args) == 0
    rows = _rows(tmp_path / "sweep.csv")
    assert rows[0]["error"] and not rows[1]["error"]
    assert "invalid" in capsys.readouterr().out


def test_config_roundtrip_text():
    text = "[accounting]\nR = 2.5\nbeta_grid = 2, 4\n"
    vals = read_config_text(text)
    assert vals == {"accounting.R": 2.5, "accounting.beta_grid": (2.0, 4.0)}


def test_module_entry_point(tmp_path):
    env = dict(os.environ, PYTHONPATH=os.pathsep.join(sys.path))
    proc = subprocess.run(
        [sys.executable, "-m", "levydp", *ACCOUNT, "--out", str(tmp_path)],
        capture_output=True, text=True, env=env,
    )
    assert proc.returncode == 0 and "kappa = 0.0202027" in proc.stdout
    proc = subprocess.run([sys.executable, "-m", "levydp", "--version"], capture_output=True, text=True, env=env)
    assert proc.returncode == 0 and "levydp" in proc.stdout
