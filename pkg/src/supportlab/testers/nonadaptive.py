"""The non-adaptive composition tester.

All queries are fixed up front: one master list of uniform coordinates whose
prefixes form nested sets ``I_0 ⊆ I_1 ⊆ ... ⊆ I_L``, a first sample ``u`` queried
at ``I_L`` and, for each of ``2m`` blocks and each level ``a``, a run of
``2^(3-a)/eps_hat`` fresh samples queried at ``I_a``. The tester rejects when
``u`` together with ``m`` other samples are pairwise told apart by coordinates
they share.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from ..oracle import AnswerMap, OracleSession, run_nonadaptive
from ..witness import ContradictionGraph, find_clique
from .common import TesterVerdict, Witness, ceil_log, check_params, finish, uniform_indices


def round_epsilon(eps) -> tuple[Fraction, int]:
    """``(eps_hat, L)`` with ``eps_hat = 2^-L`` and ``L = ceil(log2 1/eps)``."""
    e = Fraction(eps) if not isinstance(eps, Fraction) else eps
    L = 0
    while Fraction(1, 2**L) > e:
        L += 1
    return Fraction(1, 2**L), L


def index_count(a: int, m: int) -> int:
    return ceil_log(2 ** (a + 2) * math.log2(m + 1))


@dataclass(frozen=True)
class LevelPlan:
    epsilon_hat: Fraction
    L: int
    m: int
    master: np.ndarray  # 1-based coordinates, with repetitions
    u: int
    blocks: dict  # (a, k) -> array of handles, k in 1..2m

    def I(self, a: int) -> np.ndarray:
        return self.master[: index_count(a, self.m)]

    def block_size(self, a: int) -> int:
        return 2 ** (3 - a + self.L)

    def levels_of_samples(self) -> tuple[np.ndarray, np.ndarray]:
        """All planned handles (u first) and their levels."""
        hs = [np.array([self.u])]
        lv = [np.array([self.L])]
        for (a, _), h in self.blocks.items():
            hs.append(h)
            lv.append(np.full(len(h), a))
        return np.concatenate(hs), np.concatenate(lv)

    def query_pairs(self) -> np.ndarray:
        hs, lv = self.levels_of_samples()
        parts = []
        for a in range(self.L + 1):
            sel = hs[lv == a]
            coords = np.unique(self.I(a))
            parts.append(np.stack([np.repeat(sel, len(coords)), np.tile(coords, len(sel))], axis=1))
        return np.concatenate(parts)

    @property
    def total_samples(self) -> int:
        return 1 + sum(len(h) for h in self.blocks.values())

    @classmethod
    def draw(cls, rng: np.random.Generator, n: int, m: int, eps, first_handle: int = 0) -> "LevelPlan":
        eps_hat, L = round_epsilon(eps)
        master = uniform_indices(rng, n, index_count(L, m))
        nxt = first_handle + 1
        blocks = {}
        for k in range(1, 2 * m + 1):
            for a in range(L + 1):
                size = 2 ** (3 - a + L)
                blocks[(a, k)] = np.arange(nxt, nxt + size, dtype=np.int64)
                nxt += size
        return cls(eps_hat, L, m, master, first_handle, blocks)


@dataclass(frozen=True)
class Composition:
    """Samples with their levels, first sample first; ``a_1 = L``."""

    members: tuple[tuple[int, int], ...]
    certificates: tuple[tuple[int, int, int], ...]

    @property
    def handles(self) -> tuple[int, ...]:
        return tuple(h for h, _ in self.members)

    def witness(self) -> Witness:
        return Witness(self.handles, self.certificates)


def _patterns(plan: LevelPlan, answers: AnswerMap, handles: np.ndarray, a: int) -> np.ndarray:
    I = plan.I(a)
    vals = answers.lookup(np.repeat(handles, len(I)), np.tile(I, len(handles)))
    return vals.reshape(len(handles), len(I))


def first_occurrences(rows: np.ndarray) -> list[int]:
    """Indices of the first occurrence of each distinct row, in order."""
    packed = np.packbits(rows.astype(np.uint8), axis=1)
    seen: dict[bytes, int] = {}
    for r in range(len(packed)):
        seen.setdefault(packed[r].tobytes(), r)
    return sorted(seen.values())


def distinguishability_classes(plan: LevelPlan, answers: AnswerMap):
    """Collapse samples that are interchangeable for the search.

    Two samples at the same level with the same answers have the same
    neighbours and are never adjacent to each other, so one representative
    (the smallest handle) per (level, answers) class suffices. Returns a list
    of ``(handle, level, pattern)`` with ``u`` first.
    """
    hs, lv = plan.levels_of_samples()
    reps = [(plan.u, plan.L, _patterns(plan, answers, np.array([plan.u]), plan.L)[0])]
    for a in range(plan.L, -1, -1):
        sel = np.sort(hs[1:][lv[1:] == a])
        if len(sel) == 0:
            continue
        pats = _patterns(plan, answers, sel, a)
        for f in first_occurrences(pats):
            reps.append((int(sel[f]), a, pats[f]))
    return reps


def find_distinguishable_composition(plan: LevelPlan, answers: AnswerMap, m: int) -> Composition | None:
    """An exhaustive search for m+1 pairwise-distinguishable samples including ``u``."""
    reps = distinguishability_classes(plan, answers)
    R, W = len(reps), len(plan.master)
    pats = np.full((R, W), -1, dtype=np.int8)
    widths = np.empty(R, dtype=np.int64)
    for r, (_, a, p) in enumerate(reps):
        pats[r, : len(p)] = p
        widths[r] = len(p)
    handles = [h for h, _, _ in reps]
    pos = np.arange(W)
    big = np.iinfo(np.int64).max
    cert: dict[tuple[int, int], int] = {}
    edges = []
    for x in range(R - 1):
        # the shared coordinates of two levels are the shorter prefix
        w = np.minimum(widths[x], widths[x + 1:])
        differ = (pats[x + 1:] != pats[x]) & (pos < w[:, None])
        first = np.where(differ, plan.master, big).min(axis=1)
        for y in np.flatnonzero(first != big):
            hx, hy = handles[x], handles[x + 1 + y]
            edges.append((hx, hy))
            cert[(min(hx, hy), max(hx, hy))] = int(first[y])
    G = ContradictionGraph.from_edges([r[0] for r in reps], edges)
    clique = find_clique(G, m + 1, containing=plan.u)
    if clique is None:
        return None
    level = {h: a for h, a, _ in reps}
    rest = sorted((h for h in clique if h != plan.u), key=lambda h: (-level[h], h))
    order = [plan.u] + rest
    certs = tuple((min(p, q), max(p, q), cert[(min(p, q), max(p, q))]) for p, q in itertools.combinations(order, 2))
    return Composition(tuple((h, level[h]) for h in order), certs)


def run_nonadaptive_test(session: OracleSession, m: int, eps) -> TesterVerdict:
    eps = check_params(m, eps)
    plan = LevelPlan.draw(session.rng, session.n, m, eps, first_handle=session.samples_used)
    answers = run_nonadaptive(session, plan.query_pairs())
    comp = find_distinguishable_composition(plan, answers, m)
    return finish(session, "nonadaptive", comp.witness() if comp else None,
                  phase="nonadaptive", L=plan.L)
