"""CSV and JSON writers for run outputs (schema 1).

Floats are written with ``repr`` so identical runs produce identical bytes.
Wall-clock timings only go to ``summary.json``.
"""

import csv
import json
import math
import os

SCHEMA = 1

REPORT_COLUMNS = (
    "schema", "row", "index", "a", "b", "freeze_time", "iterations", "observed_ratio",
    "converged", "final_update", "residual", "planned_ratio", "z_main", "z_shift",
    "lq_X", "lq_D", "h11", "trace", "z_norm", "c_est", "error", "factorizations",
)
SOLUTION_COLUMNS = ("k", "t", "i", "x", "u")
COMPAT_COLUMNS = (
    "schema", "side", "kind", "order", "k", "regime", "pointwise_defect", "integral_value", "growth", "passed",
)
SECTOR_COLUMNS = ("schema", "row", "tau", "bound", "theta0", "q", "label")
MODULI_COLUMNS = ("schema", "component", "delta", "value", "scaled")
MAXREG_COLUMNS = ("schema", "gamma", "forcing", "ratio")
STUDY_COLUMNS = ("schema", "kind", "level", "n_cells", "n_steps", "h", "dt", "error", "windows", "iterations", "order")
BENCH_COLUMNS = (
    "schema", "windows", "total_iterations", "factorizations_contraction", "factorizations_direct",
    "walltime_ratio", "max_abs_diff",
)


def fmt(value):
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value) if math.isfinite(value) else str(value)
    if hasattr(value, "item"):
        return fmt(value.item())
    return str(value)


def write_csv(path, columns, rows):
    """Write ``rows`` (dicts) with a fixed header; missing keys become empty fields."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            extra = set(row) - set(columns)
            if extra:
                raise KeyError(f"unknown columns {sorted(extra)}")
            writer.writerow([fmt(row.get(c)) for c in columns])


def write_json(path, payload):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump({"schema": SCHEMA, **payload}, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _json_default(value):
    if hasattr(value, "item"):
        return value.item()
    if isinstance(value, complex):
        return [value.real, value.imag]
    return str(value)


def ensure_dir(path):
    os.makedirs(path, exist_ok=True)
    return path


def report_rows(report, error=None):
    """One row per window plus a summary row."""
    rows = []
    for i, (w, s) in enumerate(zip(report.windows, report.stats)):
        rows.append({
            "schema": SCHEMA,
            "row": "window",
            "index": i,
            "a": float(w.a),
            "b": float(w.b),
            "freeze_time": float(s.freeze_time),
            "iterations": s.iterations,
            "observed_ratio": float(s.observed_ratio),
            "converged": s.converged,
            "final_update": float(s.update_norms[-1]) if s.update_norms else 0.0,
            "residual": float(s.residual),
            "planned_ratio": float(report.planned_ratio[i]),
            "z_main": float(s.z_main),
            "z_shift": float(s.z_shift),
        })
    n = report.norms
    rows.append({
        "schema": SCHEMA,
        "row": "summary",
        "index": len(report.windows),
        "a": float(report.windows[0].a) if report.windows else None,
        "b": float(report.windows[-1].b) if report.windows else None,
        "iterations": report.total_iterations,
        "observed_ratio": max((float(s.observed_ratio) for s in report.stats), default=0.0),
        "converged": all(s.converged for s in report.stats),
        "residual": max((float(r) for r in report.residuals), default=0.0),
        "lq_X": n.lq_X,
        "lq_D": n.lq_D,
        "h11": n.h11,
        "trace": n.trace,
        "z_norm": n.z_norm,
        "c_est": float(report.c_est),
        "error": error,
        "factorizations": report.factorizations,
    })
    return rows


def solution_rows(u):
    times = u.time_grid.times
    nodes = u.grid.nodes
    for k, frame in enumerate(u.frames):
        t = float(times[k])
        for i, value in enumerate(frame):
            yield {"k": k, "t": t, "i": i, "x": float(nodes[i]), "u": float(value)}


def compat_rows(report):
    return [
        {
            "schema": SCHEMA,
            "side": e.side,
            "kind": e.kind,
            "order": e.order,
            "k": e.k,
            "regime": e.regime,
            "pointwise_defect": e.pointwise_defect,
            "integral_value": e.integral_value,
            "growth": e.growth,
            "passed": e.passed,
        }
        for e in report.entries
    ]


def sector_rows(report):
    rows = [
        {"schema": SCHEMA, "row": "tau", "tau": t, "bound": b, "theta0": report.theta0, "q": report.q, "label": report.label}
        for t, b in report.per_tau
    ]
    rows.append({
        "schema": SCHEMA, "row": "global", "tau": report.worst[0] if report.worst else None,
        "bound": report.bound, "theta0": report.theta0, "q": report.q, "label": report.label,
    })
    return rows


def moduli_rows(tables):
    rows = []
    for table in tables:
        for d, v, s in zip(table.deltas, table.values, table.scaled):
            rows.append({"schema": SCHEMA, "component": table.component, "delta": d, "value": v, "scaled": s})
    return rows


def maxreg_rows(table):
    rows = []
    for i, gamma in enumerate(table.gammas):
        for j, label in enumerate(table.labels):
            rows.append({"schema": SCHEMA, "gamma": gamma, "forcing": label, "ratio": float(table.ratios[i, j])})
    return rows


def study_rows(result):
    order = result.order
    return [
        {
            "schema": SCHEMA,
            "kind": result.kind,
            "level": r.level,
            "n_cells": r.n_cells,
            "n_steps": r.n_steps,
            "h": r.h,
            "dt": r.dt,
            "error": r.error,
            "windows": r.windows,
            "iterations": r.iterations,
            "order": order,
        }
        for r in result.rows
    ]
