"""
End-to-end tests of the command-line front end through main.run().
"""
import json
from pathlib import Path

import pytest

import locus_g1
import theta_engine
from main import run
from results import read_csv, render_csv
from siegel_core import load_period_matrix

DATA = Path(__file__).parent / "data"
THETA_AT_I = 1.08643481121331


@pytest.fixture(autouse=True)
def isolated(tmp_path, monkeypatch):
    # no stray .env or THETA_BIDIFF_THREADS from the developer's shell
    monkeypatch.chdir(tmp_path)
    monkeypatch.delenv("THETA_BIDIFF_THREADS", raising=False)
    yield
    theta_engine.configure(lattice_cap=theta_engine.DEFAULT_LATTICE_CAP)


def test_theta_eval_json(capsys):
    assert run(["theta", "eval", "--tau", str(DATA / "tau_i.json"), "--z", "0,0"]) == 0
    payload = json.loads(capsys.readouterr().out)
    value = payload["result"]["value"]
    assert abs(value[0] - THETA_AT_I) < 1e-13
    assert value[1] == 0.0
    assert payload["meta"]["eps"] == 1e-13
    assert payload["meta"]["lattice_cap"] == 200
    assert "seed" in payload["meta"]


def test_theta_eval_odd_jet(tmp_path):
    out = tmp_path / "jet.json"
    assert run(["theta", "eval", "--tau", str(DATA / "tau_i.json"), "--z", "0,0",
                "--char", "1/2,1/2", "--jet", "--out", str(out)]) == 0
    payload = json.loads(out.read_text(encoding="utf-8"))
    assert payload["meta"]["characteristic"]["parity"] == "odd"
    assert abs(complex(*payload["result"]["value"])) < 1e-12


def test_negative_comma_values(capsys):
    assert run(["theta", "eval", "--tau", str(DATA / "tau_i.json"), "--z", "-0.1,0.2"]) == 0
    value = json.loads(capsys.readouterr().out)["result"]["value"]
    expected = theta_engine.theta_value([complex(-0.1, 0.2)], load_period_matrix(DATA / "tau_i.json"))
    assert abs(complex(*value) - expected) < 1e-13

    assert run(["locus", "refine", "--seed", "-0.03,1.04"]) == 0
    result = json.loads(capsys.readouterr().out)["result"]
    assert abs(result["x"]) < 1e-8
    assert abs(result["y"] - 1.0) < 1e-8


def test_characteristic_from_json_file(tmp_path, capsys):
    assert run(["theta", "eval", "--tau", str(DATA / "tau_i.json"), "--z", "0,0",
                "--char", str(DATA / "char_odd_g1.json")]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["meta"]["characteristic"]["parity"] == "odd"
    assert abs(complex(*payload["result"]["value"])) < 1e-12

    assert run(["theta", "eval", "--tau", str(DATA / "tau_i.json"), "--z", "0,0",
                "--char", str(tmp_path / "absent.json")]) == 2


def test_input_errors_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"g": 1, "re": [[0.0]], "im": [[-1.0]]}), encoding="utf-8")
    assert run(["theta", "eval", "--tau", str(bad), "--z", "0,0"]) == 2
    assert "error: NotPositiveDefinite:" in capsys.readouterr().err

    assert run(["theta", "eval", "--tau", str(tmp_path / "absent.json"), "--z", "0,0"]) == 2
    assert run(["theta", "eval", "--tau", str(DATA / "tau_g2.json"), "--z", "0,0"]) == 2
    assert run(["--eps", "1e-2", "theta", "eval", "--tau", str(DATA / "tau_i.json"), "--z", "0,0"]) == 2
    assert run(["theta"]) == 2
    assert run(["--bogus", "verify"]) == 2


def test_numerical_error_exits_1(tmp_path, capsys):
    tiny = tmp_path / "tiny.json"
    tiny.write_text(json.dumps({"g": 1, "re": [[0.0]], "im": [[1e-4]]}), encoding="utf-8")
    config = tmp_path / "run.json"
    config.write_text(json.dumps({"lattice_cap": 8}), encoding="utf-8")
    assert run(["--config", str(config), "theta", "eval", "--tau", str(tiny), "--z", "0,0"]) == 1
    assert "error: EpsilonTooSmall:" in capsys.readouterr().err


def test_bidiff_diff_vanishes_at_i(capsys):
    assert run(["bidiff", "diff", "--tau", str(DATA / "tau_i.json")]) == 0
    result = json.loads(capsys.readouterr().out)["result"]
    assert result["kind"] == "difference"
    assert result["max_norm"] < 1e-8


def test_bidiff_gunning_csv(tmp_path):
    out = tmp_path / "gunning.csv"
    assert run(["bidiff", "gunning", "--tau", str(DATA / "tau_g2.json"), "--out", str(out)]) == 0
    meta, rows = read_csv(out)
    assert {"eps", "lattice_cap", "seed"} <= set(meta)
    assert len(rows) == 6
    assert list(rows[0]) == ["a", "b", "parity", "residual"]
    assert max(float(r["residual"]) for r in rows) < 1e-9


def test_locus_refine(capsys):
    assert run(["locus", "refine", "--seed", "0.05,0.95"]) == 0
    result = json.loads(capsys.readouterr().out)["result"]
    assert abs(result["x"]) < 1e-8
    assert abs(result["y"] - 1.0) < 1e-8


def test_locus_scan_resume(tmp_path, monkeypatch):
    out = tmp_path / "scan.csv"
    args = ["locus", "scan", "--window", "-0.5,0.5,0.8,1.2", "--grid", "3,3", "--out", str(out)]
    assert run(args) == 0
    meta, rows = read_csv(out)
    assert len(rows) == 9
    full = out.read_text(encoding="utf-8")

    # leave a checkpoint holding only the first row
    out.write_text(render_csv(meta, locus_g1.SCAN_COLUMNS,
                              [[r[c] for c in locus_g1.SCAN_COLUMNS] for r in rows[:3]]),
                   encoding="utf-8")
    calls = []
    original = locus_g1.residuals

    def counting(x, y, eps, M=None):
        calls.append((x, y))
        return original(x, y, eps, M)

    monkeypatch.setattr(locus_g1, "residuals", counting)
    assert run(args + ["--resume"]) == 0
    assert len(calls) == 6
    assert out.read_text(encoding="utf-8") == full


def test_locus_resume_rejects_other_window(tmp_path):
    out = tmp_path / "scan.csv"
    assert run(["locus", "scan", "--window", "-0.5,0.5,0.8,1.2", "--grid", "3,2", "--out", str(out)]) == 0
    assert run(["locus", "scan", "--window", "-0.5,0.5,0.9,1.2", "--grid", "3,2",
                "--out", str(out), "--resume"]) == 2


def test_verify_is_deterministic(tmp_path):
    first, second = tmp_path / "a.json", tmp_path / "b.json"
    only = "siegel_core,sign,coincidence"
    assert run(["--seed", "99", "verify", "--only", only, "--out", str(first)]) == 0
    assert run(["--seed", "99", "verify", "--only", only, "--out", str(second)]) == 0
    assert first.read_bytes() == second.read_bytes()
    report = json.loads(first.read_text(encoding="utf-8"))
    assert report["meta"]["seed"] == 99
    assert report["result"]["all_passed"] is True
    assert {c["group"] for c in report["result"]["checks"]} == set(only.split(","))


def test_verify_unknown_check():
    assert run(["verify", "--only", "nope", "--out", "-"]) == 2
