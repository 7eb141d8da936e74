"""A naive one-sided comparator: query a pool of samples at one common set of
coordinates and reject when m+1 distinct answer patterns show up."""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

from ..oracle import OracleSession, run_nonadaptive
from .common import TesterVerdict, Witness, check_params, finish, uniform_indices
from .nonadaptive import first_occurrences


def baseline_sizes(m: int, eps) -> tuple[int, int]:
    inv = float(1 / Fraction(eps))
    return math.ceil(2 * inv * m) + 1, math.ceil(2 * inv * math.log(3 * (m + 1) ** 2))


def run_baseline_test(session: OracleSession, m: int, eps) -> TesterVerdict:
    eps = check_params(m, eps)
    s, r = baseline_sizes(m, eps)
    J = np.unique(uniform_indices(session.rng, session.n, r))
    handles = np.arange(session.samples_used, session.samples_used + s)
    pairs = np.stack([np.repeat(handles, len(J)), np.tile(J, s)], axis=1)
    answers = run_nonadaptive(session, pairs)
    pats = answers.lookup(pairs[:, 0], pairs[:, 1]).reshape(s, len(J))
    first = first_occurrences(pats)
    if len(first) < m + 1:
        return finish(session, "baseline", None)
    reps = np.sort(first)[: m + 1]
    certs = []
    for a in range(len(reps)):
        for b in range(a + 1, len(reps)):
            j = int(J[np.flatnonzero(pats[reps[a]] != pats[reps[b]])[0]])
            certs.append((int(handles[reps[a]]), int(handles[reps[b]]), j))
    return finish(session, "baseline", Witness(tuple(int(handles[k]) for k in reps), tuple(certs)))
