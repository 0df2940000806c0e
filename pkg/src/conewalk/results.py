"""CSV and JSON writers.

Coordinates inside a CSV field are space-separated; floats use ``repr`` so
files are byte-stable across runs and platforms.
"""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

import numpy as np

BATCH_HEADER = ["run_id", "seed", "kernel", "dim", "x0", "outcome", "stop_time",
                "final_coords", "final_norm", "final_direction"]
TRAJECTORY_HEADER = ["run_id", "t", "coords"]


def fmt_float(v) -> str:
    v = float(v)
    if math.isnan(v):
        return "nan"
    return repr(v)


def fmt_coords(xs) -> str:
    out = []
    for v in xs:
        if isinstance(v, (int, np.integer)):
            out.append(str(int(v)))
        else:
            out.append(fmt_float(v))
    return " ".join(out)


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow(r)
    return buf.getvalue()


def batch_csv(result) -> str:
    rows = []
    d = len(result.experiment.x0)
    for i, (rec, seed) in enumerate(zip(result.records, result.seeds)):
        direction = rec.final_direction
        rows.append([i, seed, result.kernel_id, d, fmt_coords(result.experiment.x0), rec.outcome,
                     rec.time, fmt_coords(rec.final_state), fmt_float(rec.final_norm),
                     "" if direction is None else fmt_coords(direction.tolist())])
    return _csv_text(BATCH_HEADER, rows)


def trajectory_csv(records) -> str:
    """Thinned trajectories of ``(run_id, record)`` pairs."""
    rows = []
    for run_id, rec in records:
        if rec.trajectory is None:
            continue
        for j, x in enumerate(rec.trajectory):
            rows.append([run_id, j * rec.stride, fmt_coords(x)])
    return _csv_text(TRAJECTORY_HEADER, rows)


def trace_csv(trace, run_id: int = 0) -> str:
    """One row per skeleton time: state, V, zeta, Y, Z (V and zeta are blank at t = 0)."""
    d = trace.states.shape[1]
    head = ["run_id", "t"] + [f"state_{i + 1}" for i in range(d)] + [f"v_{i + 1}" for i in range(d)] \
        + [f"zeta_{i + 1}" for i in range(d)] + [f"y_{i + 1}" for i in range(d)] \
        + [f"z_{i + 1}" for i in range(d)]
    y, z = trace.y, trace.z
    rows = []
    blank = [""] * d
    for t in range(trace.states.shape[0]):
        v = blank if t == 0 else [int(c) for c in trace.v[t - 1]]
        ze = blank if t == 0 else [int(c) for c in trace.zeta[t - 1]]
        rows.append([run_id, t] + [int(c) for c in trace.states[t]] + v + ze
                    + [int(c) for c in y[t]] + [int(c) for c in z[t]])
    return _csv_text(head, rows)


def table_csv(header, rows) -> str:
    conv = [[fmt_float(v) if isinstance(v, (float, np.floating)) else v for v in r] for r in rows]
    return _csv_text(header, conv)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def json_text(payload: dict) -> str:
    return json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n"


def write_text(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
