"""Campaign runner: instances x seeds x testers -> CSV rows."""

from __future__ import annotations

import csv
import io
import time
from concurrent.futures import ProcessPoolExecutor
from typing import IO, Iterable

from ..adversary import generate, verify
from ..oracle import open_session
from ..testers import TESTERS
from ..witness import GraphScaleExceeded, verify_witness
from .config import COLUMNS, ExperimentConfig, GridPoint, ResultRow


class InvariantViolation(AssertionError):
    """A rejection without a verifiable witness, or another broken guarantee."""


def _instance(pt: GridPoint, seed: int):
    inst = generate(pt.family, m=pt.m, eps=pt.eps, n=pt.n, seed=seed, t=pt.t)
    return verify(inst, pt.m, pt.eps)


def run_point(pt: GridPoint, seed: int, testers: Iterable[str], max_queries: int | None = None,
              timing: bool = False) -> list[ResultRow]:
    """All tester rows for one grid point and seed."""
    base = dict(family=pt.family, m=pt.m, eps=str(pt.eps), n=pt.n, t=pt.t, seed=seed)
    try:
        inst = _instance(pt, seed)
    except Exception as exc:  # recorded, the campaign goes on
        return [ResultRow(**base, tester=name, error=f"{type(exc).__name__}: {exc}") for name in testers]
    dist = "" if inst.verified_distance is None else str(inst.verified_distance)
    rows = []
    for name in testers:
        row = ResultRow(**base, tester=name, verified_distance=dist, farness=inst.farness)
        session = open_session(inst.distribution, seed, max_queries=max_queries)
        t0 = time.perf_counter()
        try:
            v = TESTERS[name](session, pt.m, pt.eps)
        except Exception as exc:
            row.error = f"{type(exc).__name__}: {exc}"
            row.queries_used, row.samples_used = session.queries_used, session.samples_used
            rows.append(row)
            continue
        if timing:
            row.wall_time_ms = (time.perf_counter() - t0) * 1000
        row.verdict, row.queries_used, row.samples_used = v.verdict, v.queries, v.samples
        if v.rejected:
            try:
                check = verify_witness(session.log, v.witness.clique, pt.m)
            except GraphScaleExceeded as exc:
                raise InvariantViolation(f"witness too large to check: {exc}") from None
            if not check.valid:
                raise InvariantViolation(f"{name} rejected {base} without a valid witness: {check.as_dict()}")
            row.witness_valid = True
        rows.append(row)
    return rows


def _run_unit(args):
    pt, seed, testers, max_queries, timing = args
    return run_point(pt, seed, testers, max_queries, timing)


def run_campaign(config: ExperimentConfig) -> list[ResultRow]:
    """Rows in (grid point, seed, tester) order, whatever the worker count."""
    units = [(pt, seed, tuple(config.testers), config.max_queries, config.timing)
             for pt in config.grid() for seed in config.seed_list()]
    if config.workers == 1 or len(units) <= 1:
        chunks = map(_run_unit, units)
        return [r for rows in chunks for r in rows]
    with ProcessPoolExecutor(config.workers) as pool:
        return [r for rows in pool.map(_run_unit, units) for r in rows]


def write_rows(rows: Iterable[ResultRow], fh: IO[str]):
    w = csv.DictWriter(fh, fieldnames=COLUMNS, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow(r.csv_fields())


def rows_to_csv(rows: Iterable[ResultRow]) -> str:
    buf = io.StringIO()
    write_rows(rows, buf)
    return buf.getvalue()


def read_rows(fh: IO[str]) -> list[dict]:
    return list(csv.DictReader(fh))
