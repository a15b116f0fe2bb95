from __future__ import annotations

import hashlib
import json
import subprocess
import sys

import numpy as np
import pytest

from panelprobit.cli import run_cli
from panelprobit.panel import PanelData, panel_to_csv_text
from panelprobit.priors import Normal
from panelprobit.simulation import SimulationScenario, simulate_panel


def call(capsys, *argv):
    code = run_cli(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def write_panel(tmp_path, panel, name="panel.csv"):
    path = tmp_path / name
    path.write_text(panel_to_csv_text(panel))
    return path


def estimate(payload, name):
    return next(p for p in payload["parameters"] if p["name"] == name)


def test_analyze_runs_counts(capsys):
    code, out, _ = call(capsys, "analyze-runs", "--counts", "87,5,5,4,8,10,1,78")
    assert code == 0
    payload = json.loads(out)
    assert payload["schema_version"] == 1
    assert payload["method"] == "runs_t3"
    assert estimate(payload, "gamma")["estimate"] == pytest.approx(0.62, abs=0.03)
    digest = "sha256:" + hashlib.sha256(b"87,5,5,4,8,10,1,78").hexdigest()
    assert payload["provenance"]["input_digest"] == digest


def test_analyze_runs_counts_csv(tmp_path, capsys):
    path = tmp_path / "counts.csv"
    rows = zip(["000", "001", "010", "100", "110", "011", "101", "111"], [87, 5, 5, 4, 8, 10, 1, 78])
    path.write_text("pattern,count\n" + "".join(f"{p},{c}\n" for p, c in rows))
    code, out, _ = call(capsys, "analyze-runs", "--input", str(path))
    assert code == 0
    assert estimate(json.loads(out), "gamma")["estimate"] == pytest.approx(0.618, abs=1e-3)
    assert json.loads(out)["provenance"]["input_digest"] == "sha256:" + hashlib.sha256(path.read_bytes()).hexdigest()


def test_analyze_runs_bad_counts_csv(tmp_path, capsys):
    path = tmp_path / "counts.csv"
    path.write_text("pattern,count\n0012,5\n")
    code, out, err = call(capsys, "analyze-runs", "--input", str(path))
    assert code == 1
    assert "SchemaError" in err and "Traceback" not in err


def test_analyze_runs_degenerate(capsys):
    code, out, _ = call(capsys, "analyze-runs", "--counts", "5,0,0,0,1,2,3,5")
    assert code == 2
    assert json.loads(out)["error"] == "DegenerateCounts"


def test_estimate_gamma(tmp_path, capsys):
    panel = PanelData(np.array([[0, 1]] * 100 + [[1, 0]] * 100 + [[1, 1]] * 30))
    code, out, _ = call(capsys, "estimate-gamma", "--input", str(write_panel(tmp_path, panel)))
    assert code == 0
    payload = json.loads(out)
    g = estimate(payload, "gamma")
    assert g["estimate"] == 0.0
    assert g["se"] == pytest.approx(0.1596, abs=1e-4)
    assert payload["diagnostics"]["counts"] == {"n00": 0, "n01": 100, "n10": 100, "n11": 30}


def test_estimate_gamma_degenerate(tmp_path, capsys):
    panel = PanelData(np.array([[1, 0], [1, 1], [0, 0]]))
    code, out, err = call(capsys, "estimate-gamma", "--input", str(write_panel(tmp_path, panel)))
    assert code == 2
    payload = json.loads(out)
    assert payload["error"] == "DegenerateCounts"
    assert payload["counts"] == {"n10": 1, "n01": 0}
    assert "Traceback" not in err


@pytest.mark.parametrize("text, error", [
    ("id,t,d\na,1,0\na,2,2\n", "NonBinaryOutcome"),
    ("id,t,d\na,1,0\na,3,1\n", "RaggedPanel"),
    ("id,t\n", "SchemaError"),
])
def test_bad_panels_exit_1(tmp_path, capsys, text, error):
    path = tmp_path / "bad.csv"
    path.write_text(text)
    code, out, err = call(capsys, "estimate-gamma", "--input", str(path))
    assert code == 1
    assert error in err
    assert out == ""


def test_missing_file(capsys, tmp_path):
    code, _, err = call(capsys, "estimate-gamma", "--input", str(tmp_path / "nope.csv"))
    assert code == 1
    assert "cannot read" in err


def test_bad_flags_exit_1(capsys):
    with pytest.raises(SystemExit) as info:
        run_cli(["analyze-runs"])
    assert info.value.code == 1
    with pytest.raises(SystemExit) as info:
        run_cli(["estimate-heckman", "--counts", "1,2,3,4,5,6,7,8", "--nodes", "0"])
    assert info.value.code == 1


def test_help_lists_flags(capsys):
    with pytest.raises(SystemExit) as info:
        run_cli(["estimate-heckman", "--help"])
    assert info.value.code == 0
    out = capsys.readouterr().out
    for flag in ("--input", "--counts", "--estimate-mean", "--nodes", "--seed", "--output"):
        assert flag in out


def test_estimate_glm(tmp_path, capsys):
    s = SimulationScenario(n=1000, horizon=2, gamma_true=0.5, tau=Normal(0, 2), replications=1, seed=3,
                           estimators=("glm_dynamic",), beta_true=(0.5,), covariate_law="differenced_normal")
    path = write_panel(tmp_path, simulate_panel(s, 0))
    code, out, _ = call(capsys, "estimate-glm", "--input", str(path), "--dynamic")
    assert code == 0
    payload = json.loads(out)
    assert payload["method"] == "glm_dynamic"
    assert [p["name"] for p in payload["parameters"]] == ["gamma", "beta1"]
    assert payload["diagnostics"]["identifiability"]["verdict"] == "pass"
    assert payload["diagnostics"]["converged"]
    assert payload["provenance"]["config"]["dynamic"] is True


def test_estimate_glm_needs_covariates(tmp_path, capsys):
    panel = PanelData(np.array([[0, 1], [1, 0]]))
    code, _, err = call(capsys, "estimate-glm", "--input", str(write_panel(tmp_path, panel)))
    assert code == 1


def test_estimate_heckman_counts(capsys, tmp_path):
    out_path = tmp_path / "h.json"
    code, out, _ = call(capsys, "estimate-heckman", "--counts", "126,16,4,12,24,20,5,125",
                        "--output", str(out_path))
    assert code == 0 and out == ""
    payload = json.loads(out_path.read_text())
    assert estimate(payload, "gamma")["estimate"] == pytest.approx(0.47, abs=0.05)
    assert estimate(payload, "sigma")["estimate"] == pytest.approx(2.15, abs=0.15)


def test_estimate_heckman_boundary(tmp_path, capsys):
    panel = PanelData(np.zeros((40, 2), dtype=int))
    code, out, _ = call(capsys, "estimate-heckman", "--input", str(write_panel(tmp_path, panel)))
    assert code == 2
    assert json.loads(out)["error"] == "BoundarySigma"


CONFIG = {"n": 300, "horizon": 2, "gamma_true": 0.5, "replications": 5, "seed": 1,
          "tau": {"family": "normal", "mean": 0, "var": 4}, "estimators": ["ratio"]}


def test_simulate_is_byte_identical(tmp_path, capsys):
    cfg = tmp_path / "scenario.json"
    cfg.write_text(json.dumps(CONFIG))
    outputs = []
    for run in range(2):
        out, csv_path = tmp_path / f"out{run}.json", tmp_path / f"rows{run}.csv"
        assert run_cli(["simulate", "--config", str(cfg), "--seed", "7",
                        "--output", str(out), "--csv", str(csv_path)]) == 0
        outputs.append((out.read_bytes(), csv_path.read_bytes()))
    assert outputs[0] == outputs[1]
    payload = json.loads(outputs[0][0])
    assert payload["provenance"]["config"]["effective_scenario"]["seed"] == 7
    assert payload["rows"][0]["estimator"] == "ratio"
    assert outputs[0][1].startswith(b"estimator,parameter,truth")


def test_simulate_seed_changes_output(tmp_path):
    cfg = tmp_path / "scenario.json"
    cfg.write_text(json.dumps(CONFIG))
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    run_cli(["simulate", "--config", str(cfg), "--seed", "1", "--output", str(a)])
    run_cli(["simulate", "--config", str(cfg), "--seed", "2", "--output", str(b)])
    assert a.read_bytes() != b.read_bytes()


@pytest.mark.parametrize("config", [{**CONFIG, "replicatons": 4}, "[1, 2]"])
def test_simulate_bad_config(tmp_path, capsys, config):
    cfg = tmp_path / "scenario.json"
    cfg.write_text(config if isinstance(config, str) else json.dumps(config))
    code, _, err = call(capsys, "simulate", "--config", str(cfg))
    assert code == 1
    assert "Traceback" not in err


def test_simulate_invalid_json(tmp_path, capsys):
    cfg = tmp_path / "scenario.json"
    cfg.write_text("{not json")
    code, _, err = call(capsys, "simulate", "--config", str(cfg))
    assert code == 1
    assert "invalid JSON" in err


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "panelprobit", "analyze-runs", "--counts",
                           "133,13,5,16,8,19,8,130"], capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert estimate(json.loads(proc.stdout), "gamma")["estimate"] == pytest.approx(0.51, abs=0.03)
