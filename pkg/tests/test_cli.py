import csv
import subprocess
import sys

import pytest

from qauth import classifier as clf
from qauth.cli import main


def read(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def small_cfg(tmp_path, body):
    path = tmp_path / "run.cfg"
    path.write_text(body)
    return str(path)


def test_simulate_noiseless(tmp_path):
    out = tmp_path / "sim.csv"
    assert main(["simulate", "--preset", "noiseless", "--lambda", "50", "--replicates", "2",
                 "--distance-km", "0,2", "--wait-us", "0,1.5", "--out", str(out)]) == 0
    rows = read(out)
    assert len(rows) == 4 * 2 + 4
    assert {r["r01"] for r in rows} == {"1"}
    assert {r["wait_time_us"] for r in rows} == {"0", "1.5"}


def test_byte_identical_output(tmp_path):
    args = ["simulate", "--lambda", "80", "--replicates", "3", "--seed", "99",
            "--distance-km", "1,6"]
    main(args + ["--out", str(tmp_path / "a.csv")])
    main(args + ["--out", str(tmp_path / "b.csv")])
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    main(["simulate", "--lambda", "80", "--replicates", "3", "--seed", "100",
          "--distance-km", "1,6", "--out", str(tmp_path / "c.csv")])
    assert (tmp_path / "a.csv").read_bytes() != (tmp_path / "c.csv").read_bytes()


def test_attacker_flag(tmp_path):
    out = tmp_path / "att.csv"
    assert main(["simulate", "--preset", "noiseless", "--attacker", "--lambda", "2000",
                 "--replicates", "2", "--out", str(out)]) == 0
    agg = [r for r in read(out) if r["replicate"] == "mean"][0]
    assert abs(float(agg["r01"]) - 0.5) < 0.05 and agg["verdict"] == "reject"


def test_scheme_flag(tmp_path):
    out = tmp_path / "sym.csv"
    assert main(["simulate", "--preset", "noiseless", "--scheme", "symmetric", "--lambda", "20",
                 "--replicates", "1", "--out", str(out)]) == 0
    assert {r["party"] for r in read(out)} == {"alice", "bob"}


def test_sweep_writes_plot_data(tmp_path):
    out = tmp_path / "sweep.csv"
    assert main(["sweep", "--lambda", "30", "--replicates", "2", "--distance-km", "0,1",
                 "--wait-us", "0,5", "--out", str(out)]) == 0
    series = read(tmp_path / "sweep_r01_vs_storage_time.csv")
    assert len(series) == 4 and "r01_std" in series[0]
    assert (tmp_path / "sweep_r01_vs_distance.csv").exists()


def test_train_classifier_artifacts_and_determinism(tmp_path):
    cfg = small_cfg(tmp_path, "run.n_users = 300\nrun.n_attackers = 300\nrun.epochs = 60\n")
    args = ["train-classifier", "--preset", "noiseless", "--config", cfg, "--lambda", "100"]
    assert main(args + ["--out", str(tmp_path / "a.csv")]) == 0
    assert main(args + ["--out", str(tmp_path / "b.csv")]) == 0
    wa = (tmp_path / "a.weights").read_bytes()
    assert wa == (tmp_path / "b.weights").read_bytes()
    model = clf.loads_weights(wa.decode())
    assert model.sizes == clf.DEFAULT_SIZES
    summary = read(tmp_path / "a.csv")[0]
    assert float(summary["val_accuracy"]) == 1.0
    curve = read(tmp_path / "a_learning_curve.csv")
    assert len(curve) == 60 and curve[0]["epoch"] == "1"
    roc = read(tmp_path / "a_roc.csv")
    assert roc[0] == {"false_positive_rate": "0", "true_positive_rate": "0"}


def test_compare_methods_noiseless(tmp_path):
    cfg = small_cfg(tmp_path, "run.n_users = 300\nrun.n_attackers = 300\nrun.epochs = 60\n")
    out = tmp_path / "cmp.csv"
    assert main(["compare-methods", "--preset", "noiseless", "--config", cfg, "--lambda", "100",
                 "--out", str(out)]) == 0
    rows = {r["method"]: r for r in read(out)}
    assert float(rows["static"]["accuracy"]) == 1.0
    assert float(rows["dnn"]["accuracy"]) == 1.0
    sweep = read(tmp_path / "cmp_static_sweep.csv")
    assert len(sweep) == 51
    assert sweep[0]["vacuous_bound"] == "1" and sweep[-1]["vacuous_bound"] == "0"


@pytest.mark.parametrize("args", [
    ["simulate", "--lambda", "0"],
    ["simulate", "--replicates", "0"],
    ["simulate", "--preset", "nope"],
    ["simulate", "--scheme", "ring"],
    ["simulate", "--distance-km", "one"],
    ["simulate", "--config", "/nonexistent/run.cfg"],
    ["train-classifier", "--lambda", "95"],
    ["frobnicate"],
    [],
])
def test_config_errors_exit_2(args, tmp_path, capsys):
    assert main(args + ["--out", str(tmp_path / "x.csv")] if args and args[0] != "frobnicate"
                else args) == 2
    assert "config error" in capsys.readouterr().err


def test_bad_config_key_exit_2(tmp_path):
    cfg = small_cfg(tmp_path, "run.speed = 3\n")
    assert main(["simulate", "--config", cfg]) == 2


def test_unwritable_output_exit_3(tmp_path):
    assert main(["simulate", "--lambda", "10", "--replicates", "1",
                 "--out", str(tmp_path / "missing" / "x.csv")]) == 3


def test_console_entry_point(tmp_path):
    out = tmp_path / "e.csv"
    res = subprocess.run([sys.executable, "-m", "qauth.cli", "simulate", "--lambda", "10",
                          "--replicates", "1", "--out", str(out)], capture_output=True, text=True)
    assert res.returncode == 0 and out.exists()
    assert str(out) in res.stdout
