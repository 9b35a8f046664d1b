import csv
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from llgbubble import harness
from llgbubble.cli import main
from llgbubble.config import ExperimentConfig

SMALL = """params.alpha = 0
init.kind = gamma_family
init.gamma = 0.3
mesh.n_nodes = 81
stop.grad_inf = 1e4
sample.every_steps = 5
"""


@pytest.fixture
def small_cfg(tmp_path):
    path = tmp_path / "small.cfg"
    path.write_text(SMALL)
    return path


def test_constant_state_is_an_equilibrium(tmp_path):
    cfg = ExperimentConfig.from_text("init.kind = constant\nmesh.n_nodes = 21\n")
    rec = harness.run(cfg, tmp_path / "run")
    assert rec.status == "ok" and rec.reason == "equilibrium"
    traj = harness.read_trajectory(tmp_path / "run" / "trajectory.csv")
    assert np.all(np.abs(traj["E"]) < 1e-12)


def test_run_writes_trajectory_and_summary(tmp_path, small_cfg):
    out = tmp_path / "run"
    assert main(["run", "--config", str(small_cfg), "--out", str(out)]) == 0
    with open(out / "trajectory.csv") as fh:
        header = next(csv.reader(fh))
    assert header == ["step", "t", "dt", "grad_inf", "E", "R_fit", "C_fit"]
    summary = json.loads((out / "summary.json").read_text())
    assert summary["status"] == "ok" and summary["outcome"] == "DecayPlus"
    assert ExperimentConfig.from_text(summary["config"]).values == ExperimentConfig.load(small_cfg).values


def test_runs_are_byte_identical(tmp_path, small_cfg):
    for name in ("a", "b"):
        assert main(["run", "--config", str(small_cfg), "--out", str(tmp_path / name)]) == 0
    for f in ("trajectory.csv", "summary.json"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_single_gamma_sweep(tmp_path, small_cfg):
    out = tmp_path / "sweep"
    assert main(["sweep", "--config", str(small_cfg), "--gamma", "0.7", "--out", str(out)]) == 0
    rows = list(csv.DictReader(open(out / "sweep.csv")))
    assert len(rows) == 1 and rows[0]["outcome"] == "DecayMinus"
    assert float(rows[0]["rotation"]) < 0


def test_sweep_rejects_out_of_range_gamma(tmp_path, small_cfg):
    assert main(["sweep", "--config", str(small_cfg), "--gamma", "1.5", "--out", str(tmp_path)]) == 2


def test_bisect_symmetric_bracket(tmp_path, small_cfg):
    res = harness.bisect(ExperimentConfig.load(small_cfg), 0.3, 0.7, 1e-3, tmp_path / "bis")
    assert res.gamma_star == 0.5 and res.final.outcome == "Blowup"


def test_bisect_same_sign_bracket_exits_2(tmp_path, small_cfg):
    code = main(["bisect", "--config", str(small_cfg), "--lo", "0.2", "--hi", "0.3", "--tol", "1e-3",
                 "--out", str(tmp_path)])
    assert code == 2


@pytest.mark.parametrize("text", ["params.alpha = x\n", "bogus.key = 1\n"])
def test_bad_config_exits_2(tmp_path, text):
    path = tmp_path / "bad.cfg"
    path.write_text(text)
    assert main(["run", "--config", str(path), "--out", str(tmp_path / "r")]) == 2


def test_missing_config_exits_2(tmp_path):
    assert main(["run", "--config", str(tmp_path / "none.cfg")]) == 2


def test_solver_failure_exits_3(tmp_path):
    path = tmp_path / "stiff.cfg"
    # a tolerance no step can meet
    path.write_text("init.kind = theta_linear\nmesh.n_nodes = 41\ninteg.tol = 1e-300\n")
    assert main(["run", "--config", str(path), "--out", str(tmp_path / "r")]) == 3
    rec = harness.RunRecord.load(tmp_path / "r")
    assert rec.status == "solver-failure" and "StiffnessFailure" in rec.error


def test_asymptotics_files(tmp_path, small_cfg):
    run_dir = tmp_path / "run"
    assert main(["run", "--config", str(small_cfg), "--out", str(run_dir)]) == 0
    out = tmp_path / "asy"
    assert main(["asymptotics", "--n-max", "3", "--attach", str(run_dir), "--out", str(out)]) == 0
    for name in ("En.csv", "separatrix.csv", "higher_n.csv", "comparison.csv"):
        assert (out / name).is_file()
    rows = list(csv.DictReader(open(out / "En.csv")))
    assert [int(r["n"]) for r in rows] == [2, 3]
    assert all(float(r["abs_diff"]) <= 1e-10 for r in rows)
    comp = {r["quantity"]: r for r in csv.DictReader(open(out / "comparison.csv"))}
    assert math.isclose(float(comp["rotation"]["predicted"]), math.pi)


def test_asymptotics_preconditions(tmp_path):
    assert main(["asymptotics", "--n-max", "1", "--out", str(tmp_path)]) == 2
    assert main(["asymptotics", "--n-max", "2", "--attach", str(tmp_path / "nothing"), "--out", str(tmp_path)]) == 2


def test_console_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "llgbubble.cli", "asymptotics", "--n-max", "2", "--out",
                           str(tmp_path)], capture_output=True, text=True)
    assert proc.returncode == 0 and "En" in proc.stdout
