"""Aggregation of trace files into median / 20-80% band summaries."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

__all__ = ["nearest_rank_quantile", "summarize_rows", "emit_tables", "read_trace", "write_csv", "GROUP_KEYS"]

GROUP_KEYS = ("experiment", "method", "N", "M")
BAND = (0.2, 0.8)


def nearest_rank_quantile(x, q: float) -> float:
    """Smallest sample value with at least a fraction ``q`` of the data at or below it."""
    x = np.sort(np.asarray(x, dtype=float))
    if x.size == 0:
        raise ValueError("empty sample")
    if not 0 <= q <= 1:
        raise ValueError("q must lie in [0, 1]")
    k = max(1, math.ceil(q * x.size))
    return float(x[k - 1])


def write_csv(path, rows: list, columns: list | None = None):
    if columns is None:
        columns = []
        for r in rows:
            columns.extend(k for k in r if k not in columns)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=columns, extrasaction="ignore")
        w.writeheader()
        for r in rows:
            w.writerow({k: "" if r.get(k) is None else r.get(k) for k in columns})
    return path


def _num(v):
    if v is None or v == "":
        return None
    try:
        f = float(v)
    except (TypeError, ValueError):
        return v
    return f


def read_trace(path) -> list:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        return [{k: _num(v) for k, v in r.items()} for r in csv.DictReader(fh)]


def summarize_rows(rows: list, value_keys=None) -> list:
    """Median and nearest-rank 20% / 80% quantiles per (experiment, method, N, M).

    Null cells are skipped; ``count`` gives the number of non-null seeds
    for the first value column.
    """
    if not rows:
        raise ValueError("no rows to summarise")
    if value_keys is None:
        skip = set(GROUP_KEYS) | {"seed", "config_hash", "error"}
        value_keys = [
            k for k in rows[0]
            if k not in skip and any(isinstance(r.get(k), float) for r in rows)
        ]
    groups: dict = {}
    for r in rows:
        key = tuple(r.get(k) for k in GROUP_KEYS)
        groups.setdefault(key, []).append(r)
    out = []
    for key in sorted(groups, key=lambda k: tuple(str(x) for x in k)):
        rs = groups[key]
        row = dict(zip(GROUP_KEYS, key))
        row["count"] = len(rs)
        for k in value_keys:
            vals = [r[k] for r in rs if isinstance(r.get(k), float) and math.isfinite(r[k])]
            if vals:
                row[f"{k}_median"] = float(np.median(vals))
                row[f"{k}_q20"] = nearest_rank_quantile(vals, BAND[0])
                row[f"{k}_q80"] = nearest_rank_quantile(vals, BAND[1])
            else:
                row[f"{k}_median"] = row[f"{k}_q20"] = row[f"{k}_q80"] = None
        out.append(row)
    return out


def emit_tables(trace_files, out_dir) -> dict:
    """Write ``summary.csv`` and ``summary.json`` for one or more trace files."""
    rows = []
    for p in [trace_files] if isinstance(trace_files, (str, Path)) else trace_files:
        rows.extend(read_trace(p))
    summary = summarize_rows(rows)
    out_dir = Path(out_dir)
    csv_path = write_csv(out_dir / "summary.csv", summary)
    json_path = out_dir / "summary.json"
    json_path.write_text(json.dumps(summary, indent=2), encoding="utf-8")
    return {"csv": str(csv_path), "json": str(json_path), "groups": len(summary)}
