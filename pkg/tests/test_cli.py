import json
import os
import subprocess
import sys

import pytest

from hyperbubble.cli import main


def _files(d):
    return {f: open(os.path.join(d, f), "rb").read() for f in sorted(os.listdir(d))}


def test_missing_lambda_exits_2(tmp_path, caplog):
    code = main(["--output-dir", str(tmp_path), "ground-state", "--n", "3", "--p", "3"])
    assert code == 2
    assert "lambda" in caplog.text
    assert os.listdir(tmp_path) == []


def test_inadmissible_params_exit_2(tmp_path):
    assert main(["--output-dir", str(tmp_path), "ground-state", "--n", "3", "--p", "3", "--lambda", "5"]) == 2


def test_unknown_subcommand_exits_2(tmp_path):
    assert main(["--output-dir", str(tmp_path), "frobnicate"]) == 2


def test_ground_state_outputs_and_metadata(tmp_path):
    code = main(["--output-dir", str(tmp_path), "--format", "both", "--seed", "4", "--plot-data",
                 "ground-state", "--n", "3", "--p", "3", "--lambda", "0.5", "--profile-csv"])
    assert code == 0
    files = os.listdir(tmp_path)
    assert any(f.endswith(".csv") for f in files)
    assert any(f.endswith(".dat") for f in files)
    assert not any(f.startswith(".tmp-") for f in files)
    js = [f for f in files if f.endswith(".json")][0]
    meta = json.load(open(tmp_path / js))["metadata"]
    assert meta["version"] and meta["seed"] == 4 and meta["params"]["lambda"] == 0.5
    header = open(tmp_path / [f for f in files if f.endswith(".csv")][0]).readline()
    assert header.startswith("# ") and '"seed": 4' in header


def test_same_config_same_bytes(tmp_path):
    cfg = {"params": {"n": 3, "p": 3, "lambda": 0.5}, "family": {"positions": [0.0, 3.0]},
           "perturbation": {"kind": "random", "epsilons": [0.01, 0.1]}}
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    outs = []
    for k in range(2):
        d = tmp_path / f"run{k}"
        assert main(["--output-dir", str(d), "--seed", "9", "--workers", "1", "stability", "--config", str(path)]) in (0, 1)
        outs.append(_files(d))
    assert outs[0] == outs[1]
    assert any(name.endswith(".csv") for name in outs[0])


@pytest.mark.parametrize("bad", [
    {"params": {"n": 3, "p": 3, "lambda": 0.5}, "family": {"positions": [0.0]}, "bogus": 1},
    {"params": {"n": 3, "p": 3}, "family": {"positions": [0.0]}},
    {"params": {"n": 3, "p": 3, "lambda": 0.5}, "family": {"positions": [0.0]}, "grid": {"n_theta": 2}},
])
def test_schema_rejection(tmp_path, bad):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(bad))
    assert main(["--output-dir", str(tmp_path / "o"), "spectral-gap", "--config", str(path)]) == 2


def test_unreadable_config(tmp_path):
    assert main(["--output-dir", str(tmp_path), "spectral-gap", "--config", str(tmp_path / "nope.json")]) == 2


def test_spectral_gap_command(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"params": {"n": 3, "p": 3, "lambda": 0.5}, "family": {"positions": [0.0]}}))
    out = tmp_path / "o"
    assert main(["--output-dir", str(out), "--format", "json", "spectral-gap", "--config", str(path)]) == 0
    body = json.load(open(out / [f for f in os.listdir(out) if f.endswith(".json")][0]))
    assert 0 < body["c_tilde"] < 1
    assert body["metadata"]["grid_meta"]["n_theta"] >= 64


def test_spectrum_and_interact(tmp_path):
    assert main(["--output-dir", str(tmp_path), "--format", "json", "spectrum", "--n", "3", "--p", "3",
                 "--lambda", "0.5", "--mode", "1", "--count", "2"]) == 0
    assert main(["--output-dir", str(tmp_path), "interact", "two", "--n", "3", "--p", "3", "--lambda", "0.5",
                 "--alpha", "3", "--beta", "1", "--s-min", "4", "--s-max", "9", "--steps", "6"]) == 0
    assert main(["--output-dir", str(tmp_path), "interact", "deriv", "--n", "3", "--p", "3", "--lambda", "0.5",
                 "--s", "5"]) == 0


def test_geometry_check(tmp_path):
    assert main(["--output-dir", str(tmp_path), "--seed", "1", "geometry", "check", "--samples", "500"]) == 0


def test_workers_env_validation(tmp_path, monkeypatch):
    monkeypatch.setenv("HYPERBUBBLE_WORKERS", "many")
    assert main(["--output-dir", str(tmp_path), "sweep-lambda", "--n", "3", "--p", "3", "--lambda-min", "0.5",
                 "--lambda-max", "0.5", "--steps", "1"]) == 2


def test_module_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "hyperbubble", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.strip()
