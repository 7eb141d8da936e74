"""The adaptive tester.

For ``eps >= 1/m^2`` it defers to the non-adaptive tester. Otherwise the first
phase grows a set ``A`` of pairwise-distinguished samples through batches at
distance scales ``2^-a`` (``a = 0..ceil(log2 m)``), each scale driven by a
fishing expedition. The second phase routes fresh samples through a decision
tree over ``A`` and compares each with its leaf on ``m`` random coordinates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from ..fishing import FishingParams, run_fishing
from ..oracle import OracleSession
from .common import Prober, TesterVerdict, ceil_log, check_params, finish, uniform_indices
from .decision_tree import IncrementalDecisionTree, tree_construct, tree_insert, tree_locate
from .nonadaptive import run_nonadaptive_test


@dataclass(frozen=True)
class BatchSuccess:
    y: int
    J: tuple[int, ...]


def batch_sizes(a: int, eps, m: int) -> tuple[int, int]:
    """``(|J|, new samples)`` of a level-``a`` batch."""
    lm = math.log2(m)
    return ceil_log(2 ** (a + 2) * lm), ceil_log(2.0 ** (2 - a) * float(1 / Fraction(eps)) * lm)


def run_batch(prober: Prober, A: list[int], a: int, eps, m: int) -> BatchSuccess | None:
    """One batch; on success the new sample is appended to ``A``."""
    n_idx, n_new = batch_sizes(a, eps, m)
    J = uniform_indices(prober.rng, prober.n, n_idx)
    known = np.stack([prober.bits(x, J) for x in A])
    ys = prober.session.draw_samples(n_new)
    got = prober.fresh(ys, J)
    # a new sample is useful when it disagrees somewhere on J with every member
    apart = (got[:, None, :] != known[None, :, :]).any(axis=2).all(axis=1)
    hit = np.flatnonzero(apart)
    if len(hit) == 0:
        return None
    y = int(ys[hit[0]])
    prober.remember(y, J, got[hit[0]])
    A.append(y)
    return BatchSuccess(y, tuple(int(j) for j in J))


def first_phase_q(m: int) -> float:
    return 1 / (4 * (math.ceil(math.log2(m)) + 1))


def run_first_phase(prober: Prober, A: list[int], eps, m: int) -> bool:
    """Grow ``A`` scale by scale; returns True when it reached m+1 elements."""
    for a in range(math.ceil(math.log2(m)) + 1):
        params = FishingParams(k=m + 1 - len(A), p=1 / 3, q=first_phase_q(m))
        run_fishing(params, lambda: run_batch(prober, A, a, eps, m))
        if len(A) >= m + 1:
            return True
    return False


def run_second_phase_iteration(prober: Prober, y: int, A: list[int], tree: IncrementalDecisionTree, m: int) -> bool:
    """Route ``y``, compare it with its leaf on ``m`` fresh coordinates; True if it was added."""
    J = uniform_indices(prober.rng, prober.n, m)
    x = tree_locate(tree, y, prober)
    bx = prober.bits(x, J)
    by = prober.bits(y, J)
    diff = J[bx != by]
    if len(diff) == 0:
        return False
    tree_insert(tree, y, x, int(diff.min()), prober)
    A.append(y)
    return True


def second_phase_iterations(eps) -> int:
    return math.ceil(48 / Fraction(eps))


def run_adaptive_test(session: OracleSession, m: int, eps) -> TesterVerdict:
    eps = check_params(m, eps)
    if eps >= Fraction(1, m * m):
        v = run_nonadaptive_test(session, m, eps)
        v.tester = "adaptive"
        v.details["phase"] = "delegated"
        return v

    prober = Prober(session)
    A = [session.draw_sample()]
    if run_first_phase(prober, A, eps, m):
        return finish(session, "adaptive", prober.witness(A[: m + 1]), phase="first")
    after_first = len(A)
    tree = tree_construct(A, prober)
    for _ in range(second_phase_iterations(eps)):
        y = session.draw_sample()
        run_second_phase_iteration(prober, y, A, tree, m)
        if len(A) >= m + 1:
            return finish(session, "adaptive", prober.witness(A), phase="second", found_first=after_first)
    return finish(session, "adaptive", None, phase="second", found_first=after_first)
