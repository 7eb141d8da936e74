"""Aggregate result rows into query-complexity tables."""

from __future__ import annotations

import csv
import io
from typing import Iterable, Sequence

import numpy as np

from ..probbounds import wilson_interval
from .config import ResultRow

AGG_COLUMNS = ("runs", "mean_queries", "max_queries", "mean_samples", "rejections",
               "rejection_rate", "ci_low", "ci_high")


def _as_dict(r) -> dict:
    return r.csv_fields() if isinstance(r, ResultRow) else dict(r)


def scaling_table(rows: Iterable, keys: Sequence[str] = ("family", "tester", "m", "eps"),
                  only_far: bool = False) -> list[dict]:
    """Group rows by ``keys``; error rows are skipped.

    With ``only_far`` the rejection statistics use only oracle-verified far rows.
    """
    rows = [_as_dict(r) for r in rows]
    if not rows:
        raise ValueError("no rows to aggregate")
    groups: dict[tuple, list[dict]] = {}
    for r in rows:
        if r.get("error") or not r.get("verdict"):
            continue
        if only_far and r.get("farness") != "far":
            continue
        groups.setdefault(tuple(r[k] for k in keys), []).append(r)
    out = []
    for key, rs in groups.items():
        q = np.array([int(r["queries_used"]) for r in rs], dtype=float)
        s = np.array([int(r["samples_used"]) for r in rs], dtype=float)
        rej = sum(r["verdict"] == "reject" for r in rs)
        lo, hi = wilson_interval(rej, len(rs))
        out.append(dict(zip(keys, key), runs=len(rs), mean_queries=float(q.mean()), max_queries=int(q.max()),
                        mean_samples=float(s.mean()), rejections=rej, rejection_rate=rej / len(rs),
                        ci_low=lo, ci_high=hi))
    return out


def table_to_csv(table: list[dict], keys: Sequence[str]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(keys) + list(AGG_COLUMNS), lineterminator="\n")
    w.writeheader()
    for r in table:
        w.writerow({k: (f"{v:.6g}" if isinstance(v, float) else v) for k, v in r.items()})
    return buf.getvalue()
