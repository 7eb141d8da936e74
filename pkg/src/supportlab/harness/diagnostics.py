"""Ground-truth diagnostics for the non-adaptive tester's composition argument.

The harness knows which atom every sample is, so it can enumerate the valid
compositions of a run (sound: each element is far from all earlier ones at
its level's scale; monotone: levels never increase) and check whether one
of size m+1 exists. A tester never sees any of this.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from ..bitdist import DistributionSpec
from ..oracle import atoms_for, open_session
from ..testers.common import check_params
from ..testers.nonadaptive import LevelPlan

DIAG_MAX_ATOMS = 16


class DiagnosticScaleExceeded(ValueError):
    pass


@dataclass(frozen=True)
class CompositionDiagnostic:
    m: int
    L: int
    max_rank: tuple[int, ...]
    max_rank_composition: tuple[tuple[int, int], ...]  # (level, atom index); first entry is u at level L
    longest: int
    has_m_plus_1: bool

    @property
    def max_rank_length(self) -> int:
        return len(self.max_rank_composition)

    def as_dict(self) -> dict:
        return {"m": self.m, "L": self.L, "max_rank": list(self.max_rank),
                "max_rank_length": self.max_rank_length, "longest": self.longest,
                "has_m_plus_1": self.has_m_plus_1}


def is_sound(dist: np.ndarray, comp: tuple[tuple[int, int], ...]) -> bool:
    """d(u_i, u_j) > 2^(-a_j - 1) for all i < j, with ``dist`` the atom distance matrix."""
    for j in range(1, len(comp)):
        a, x = comp[j]
        for i in range(j):
            if not dist[comp[i][1], x] > Fraction(1, 2 ** (a + 1)):
                return False
    return True


def is_monotone(comp: tuple[tuple[int, int], ...]) -> bool:
    levels = [a for a, _ in comp[1:]]
    return all(levels[i] >= levels[i + 1] for i in range(len(levels) - 1))


def _distance_matrix(P: DistributionSpec) -> np.ndarray:
    X = P.matrix.astype(np.int64)
    diff = (X[:, None, :] != X[None, :, :]).sum(axis=2)
    k = len(X)
    return np.array([[Fraction(int(diff[i, j]), P.n) for j in range(k)] for i in range(k)], dtype=object)


def enumerate_valid(dist: np.ndarray, first: int, available: dict[int, frozenset[int]], L: int):
    """Longest valid length and maximum-rank valid composition.

    ``available[a]`` holds the atoms seen among level-``a`` samples. Ranks are
    compared lexicographically with a proper prefix ranking lower.
    """
    thresholds = {a: Fraction(1, 2 ** (a + 1)) for a in range(L + 1)}

    def options(last: int, chosen: frozenset[int]):
        for a in range(last, -1, -1):
            for x in sorted(available.get(a, ())):
                if x not in chosen and all(dist[y, x] > thresholds[a] for y in chosen):
                    yield a, x

    @lru_cache(maxsize=None)
    def best(last: int, chosen: frozenset[int]) -> tuple[int, tuple, tuple]:
        longest, rank, path = 0, (), ()
        for a, x in options(last, chosen):
            sub_long, sub_rank, sub_path = best(a, chosen | {x})
            longest = max(longest, 1 + sub_long)
            cand = (a,) + sub_rank
            if cand > rank:
                rank, path = cand, ((a, x),) + sub_path
        return longest, rank, path

    longest, rank, path = best(L, frozenset([first]))
    return 1 + longest, rank, ((L, first),) + path


def diagnose_plan(P: DistributionSpec, seed: int, plan: LevelPlan, m: int) -> CompositionDiagnostic:
    if P.support_size > DIAG_MAX_ATOMS:
        raise DiagnosticScaleExceeded(f"{P.support_size} atoms exceeds the diagnostic guard {DIAG_MAX_ATOMS}")
    handles, levels = plan.levels_of_samples()
    atoms = atoms_for(P, seed, handles)
    first = int(atoms[0])
    available = {a: frozenset(int(x) for x in np.unique(atoms[1:][levels[1:] == a])) for a in range(plan.L + 1)}
    dist = _distance_matrix(P)
    longest, rank, comp = enumerate_valid(dist, first, available, plan.L)
    assert is_sound(dist, comp) and is_monotone(comp), "reported composition is not valid"
    return CompositionDiagnostic(m, plan.L, rank, comp, longest, longest >= m + 1)


def diagnose_compositions(P: DistributionSpec, seed: int, m: int, eps) -> CompositionDiagnostic:
    """Replay the non-adaptive tester's sampling plan for ``seed`` and inspect it with ground truth."""
    eps = check_params(m, eps)
    session = open_session(P, seed)
    plan = LevelPlan.draw(session.rng, session.n, m, eps, first_handle=0)
    return diagnose_plan(P, seed, plan, m)
