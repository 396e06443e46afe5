"""Experiment harness: schemas, determinism, outputs, CLI exit codes."""

import json
import os
import subprocess
import sys

import numpy as np
import pytest

from framelab import harness
from framelab.errors import SchemaError


def test_unknown_experiment_rejected():
    with pytest.raises(SchemaError):
        harness.validate_config({"experiment": "nope"})


def test_unknown_keys_rejected():
    with pytest.raises(SchemaError):
        harness.validate_config({"experiment": "commutant", "algebra": "spinor",
                                 "n": 5, "bogus": 1})


def test_commutant_run_payload():
    rec = harness.run({"experiment": "commutant", "algebra": "spinor", "n": 5})
    assert rec.payload["dimension"] == 2
    assert set(rec.payload["basis_labels"]) >= {"P+", "P-"}
    rec = harness.run({"experiment": "commutant", "algebra": "forms", "n": 5,
                       "p": 2, "restrict": "P"})
    assert rec.payload["dimension"] == 2


def test_frameflow_csv_determinism(tmp_path):
    cfg = {"experiment": "frameflow", "model": {"tag": "flat-torus", "n": 2},
           "k": 2, "T": 5.0, "h": 0.05, "ensemble": 3, "seed": 11}
    outs = []
    for name in ("a.csv", "b.csv"):
        c = dict(cfg)
        c["out"] = str(tmp_path / name)
        harness.run(c)
        outs.append(open(c["out"], "rb").read())
    assert outs[0] == outs[1]
    text = outs[0].decode()
    assert text.splitlines()[0] == "observable,trajectory,T,time_avg,space_avg,deviation"
    meta = json.loads(open(str(tmp_path / "a.csv") + ".meta.json").read())
    assert meta["config"]["seed"] == 11


def test_result_record_includes_config_echo():
    rec = harness.run({"experiment": "commutant", "algebra": "spinor", "n": 3})
    assert rec.config["n"] == 3
    body = json.loads(rec.to_json())
    assert body["config"]["experiment"] == "commutant"
    assert np.isfinite(body["wall_clock_s"])


def _cli(*args):
    return subprocess.run([sys.executable, "-m", "framelab.cli", *args],
                          capture_output=True, text=True)


def test_cli_commutant_json():
    res = _cli("commutant", "--algebra", "spinor", "--n", "4")
    assert res.returncode == 0
    body = json.loads(res.stdout)
    assert body["metrics"]["dimension"] == 4


def test_cli_malformed_config_exit_code(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"algebra": "spinor", "n": 3, "oops": True}))
    res = _cli("commutant", "--config", str(bad))
    assert res.returncode == 3
    assert "config error" in res.stderr


def test_cli_capability_exit_code(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"algebra": "forms", "n": 4, "p": 2,
                               "restrict": "Pplus"}))
    res = _cli("commutant", "--config", str(cfg))
    assert res.returncode == 5  # P+/- need 2p = n-1


def test_cli_writes_output_atomically(tmp_path):
    out = tmp_path / "res.json"
    res = _cli("commutant", "--algebra", "spinor", "--n", "3",
               "--out", str(out))
    assert res.returncode == 0
    assert json.loads(out.read_text())["dimension"] == 2
    assert not [p for p in os.listdir(tmp_path) if p.endswith(".tmp")]


def test_egorov_cli_schema_roundtrip(tmp_path):
    cfg = {
        "bundle": {"n": 2, "r": 1, "K": 16, "shift": 0.25,
                    "A": [[{"m": [0, 1], "matrix": [[[0.2, 0.0]]]},
                           {"m": [0, -1], "matrix": [[[0.2, 0.0]]]}], []]},
        "t": 0.5, "shells": [5],
        "symbol": {"modes": [{"m": [1, 0], "matrix": [[[0.5, 0.0]]]},
                              {"m": [-1, 0], "matrix": [[[0.5, 0.0]]]}]},
    }
    f = tmp_path / "eg.json"
    f.write_text(json.dumps(cfg))
    out = tmp_path / "eg.csv"
    res = _cli("egorov", "--config", str(f), "--out", str(out))
    assert res.returncode == 0, res.stderr
    lines = out.read_text().splitlines()
    assert lines[0] == "shell,max_rel_err,mean_rel_err"
    assert len(lines) == 2


def test_states_experiment_passes_invariance():
    rec = harness.run({"experiment": "states", "connection": "genus2-spinor",
                       "samples": 400, "t_values": [0.5], "seed": 2, "h": 0.01})
    assert rec.passed is True


def test_weyl_experiment_free_small():
    rec = harness.run({"experiment": "weyl",
                       "bundle": {"n": 2, "r": 1, "K": 12, "shift": 0.25},
                       "max_deviation": 0.05})
    assert rec.passed is True
    assert abs(rec.metrics["counting_exponent"] - 1.0) <= 0.05


def test_variance_experiment_free_small():
    rec = harness.run({"experiment": "variance",
                       "bundle": {"n": 2, "r": 1, "K": 12, "shift": 0.25}})
    assert rec.metrics["ratio"] >= 0.5
