"""CSV and JSON serialization with deterministic float formatting."""

from __future__ import annotations

import csv
import io as _io
import json
import math
from pathlib import Path

import numpy as np

from .flow import FlowTrace

TRACE_SCHEMA = "surgeflow.trace/1"


def fmt(v: float) -> str:
    """17 significant digits, enough to round-trip any double."""
    return f"{float(v):.17g}"


def jsonable(obj):
    """Convert numpy and complex values to plain JSON types; non-finite floats
    become strings so the output stays strict JSON."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": jsonable(obj.real), "im": jsonable(obj.imag)}
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    return obj


def dumps(obj) -> str:
    return json.dumps(jsonable(obj), indent=2, sort_keys=True) + "\n"


def write_json(obj, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(obj), encoding="utf-8")
    return path


def trace_csv(trace: FlowTrace) -> str:
    dim = trace.x.shape[1] if trace.x.ndim == 2 else 1
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", *[f"x{i}" for i in range(dim)], "f", "gradnorm", "event"])
    for i in range(len(trace)):
        w.writerow([fmt(trace.t[i]), *[fmt(v) for v in trace.x[i]], fmt(trace.f[i]), fmt(trace.gradnorm[i]), trace.event[i]])
    return buf.getvalue()


def write_trace_csv(trace: FlowTrace, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(trace_csv(trace), encoding="utf-8")
    return path


def read_trace_csv(path: str | Path) -> dict[str, np.ndarray]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    cols = rows[0].keys() if rows else []
    out = {}
    for c in cols:
        if c == "event":
            out[c] = np.array([r[c] for r in rows])
        else:
            out[c] = np.array([float(r[c]) for r in rows])
    return out


def trace_to_dict(trace: FlowTrace) -> dict:
    return {
        "schema": TRACE_SCHEMA,
        "model": trace.model,
        "eps": trace.eps,
        "status": trace.status,
        "samples": {
            "t": trace.t,
            "x": trace.x,
            "f": trace.f,
            "gradnorm": trace.gradnorm,
            "event": trace.event,
        },
        "surgeries": [
            {
                "time": s.time,
                "g_index": s.g_index,
                "point": s.point,
                "detect_point": s.detect_point,
                "f_before": s.f_before,
                "f_after": s.f_after,
                "restart_path": s.path,
            }
            for s in trace.surgeries
        ],
    }


def trace_from_dict(d: dict) -> FlowTrace:
    from .flow import Surgery

    s = d["samples"]
    surgeries = [
        Surgery(
            e["time"],
            e["g_index"],
            np.array(e["point"]),
            np.array(e["detect_point"]),
            e["f_before"],
            e["f_after"],
            np.array(e["restart_path"]),
        )
        for e in d["surgeries"]
    ]
    return FlowTrace(
        np.array(s["t"], dtype=float),
        np.array(s["x"], dtype=float),
        np.array(s["f"], dtype=float),
        np.array(s["gradnorm"], dtype=float),
        list(s["event"]),
        surgeries,
        d["status"],
        d["eps"],
        d["model"],
    )
