"""
Result emission shared by every subcommand: JSON/CSV encoding and atomic writes.

JSON payloads are {"meta": {...}, "result": ...} with sorted keys; complex
numbers become [re, im]. CSV files open with "# key=value" metadata lines
followed by a header row. Floats are always written with repr() so they
round-trip exactly.
"""
import csv
import io
import json
import os
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np


def to_jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, Path):
        return str(obj)
    return obj


def render_json(meta: dict, result) -> str:
    return json.dumps({"meta": to_jsonable(meta), "result": to_jsonable(result)},
                      sort_keys=True, indent=2) + "\n"


def atomic_write_text(path: Path, text: str):
    """Write `<path>.tmp` next to the target, then rename over it."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", encoding="utf-8", newline="") as f:
        f.write(text)
        f.flush()
        os.fsync(f.fileno())
    os.replace(tmp, path)


def emit(text: str, out: Path | None):
    if out is None:
        sys.stdout.write(text)
        sys.stdout.flush()
    else:
        atomic_write_text(Path(out), text)


def emit_json(meta: dict, result, out: Path | None = None):
    emit(render_json(meta, result), out)


def format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def render_csv(meta: dict, header: list[str], rows) -> str:
    buf = io.StringIO()
    for key in sorted(meta):
        buf.write(f"# {key}={format_cell(to_jsonable(meta[key]))}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_cell(v) for v in row])
    return buf.getvalue()


def emit_csv(meta: dict, header: list[str], rows, out: Path | None = None):
    emit(render_csv(meta, header, rows), out)


def read_csv(path: Path) -> tuple[dict, list[dict]]:
    """Inverse of render_csv: returns (meta, rows) with every cell as a string."""
    meta, body = {}, []
    with open(path, encoding="utf-8", newline="") as f:
        for line in f:
            if line.startswith("# ") and "=" in line:
                key, _, value = line[2:].rstrip("\n").partition("=")
                meta[key] = value
            else:
                body.append(line)
    rows = list(csv.DictReader(body))
    return meta, rows


def emit_table(meta: dict, header: list[str], rows: list[dict], out: Path | None = None,
               fmt: str = "json"):
    """Row-shaped results: CSV with `header` columns, or a JSON list of the row dicts."""
    if fmt != "csv":
        emit_json(meta, rows, out)
        return
    cells = []
    for r in rows:
        # complex and nested values are written in their JSON form
        cells.append([v if isinstance(v, (str, int, float)) or v is None else json.dumps(to_jsonable(v))
                      for v in (r.get(k) for k in header)])
    emit_csv(meta, header, cells, out)
