"""
Tests for JSON/CSV emission.
"""
import json
from fractions import Fraction

import numpy as np

from results import (atomic_write_text, emit_table, read_csv, render_csv,
                     render_json)


def test_json_envelope():
    text = render_json({"seed": 1, "eps": 1e-13},
                       {"value": 1 + 2j, "matrix": np.eye(2), "q": Fraction(1, 2)})
    payload = json.loads(text)
    assert list(payload) == ["meta", "result"]
    assert list(payload["meta"]) == ["eps", "seed"]
    assert payload["result"]["value"] == [1.0, 2.0]
    assert payload["result"]["matrix"] == [[1.0, 0.0], [0.0, 1.0]]
    assert payload["result"]["q"] == "1/2"


def test_csv_metadata_and_exact_floats(tmp_path):
    x = 0.1 + 0.2
    path = tmp_path / "scan.csv"
    atomic_write_text(path, render_csv({"seed": 3, "eps": "1e-13"}, ["x", "err"], [[x, ""]]))
    assert not (tmp_path / "scan.csv.tmp").exists()
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[:3] == ["# eps=1e-13", "# seed=3", "x,err"]
    meta, rows = read_csv(path)
    assert meta == {"eps": "1e-13", "seed": "3"}
    assert float(rows[0]["x"]) == x
    assert rows[0]["err"] == ""


def test_table_as_csv(tmp_path):
    path = tmp_path / "roots.csv"
    emit_table({"seed": 1}, ["x", "seeds", "error"],
               [{"x": 0.5, "seeds": [[0.45, 0.9]]}, {"error": "NoConvergence"}], path, "csv")
    _, rows = read_csv(path)
    assert rows[0]["x"] == "0.5"
    assert json.loads(rows[0]["seeds"]) == [[0.45, 0.9]]
    assert rows[1]["error"] == "NoConvergence"
    assert rows[1]["x"] == ""
