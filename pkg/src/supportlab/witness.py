"""Contradiction graphs built from query transcripts.

Two samples are adjacent when some coordinate was queried on both and the
answers differ; such a pair is provably a pair of distinct strings. A graph
that cannot be properly coloured with ``m`` colours therefore certifies that
the hidden distribution has more than ``m`` support elements.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .oracle import QueryLog

COLORING_MAX_VERTICES = 40


class GraphScaleExceeded(ValueError):
    pass


class ContradictionGraph:
    """Undirected graph on sample handles with one certifying coordinate per edge.

    ``groups[j] = (L_j, R_j)`` lists the samples queried at ``j`` that answered
    0 and 1 respectively. Edges are stored as parallel arrays with ``u < v``;
    the certificate is the smallest coordinate separating the pair.
    """

    def __init__(self, vertices: Sequence[int], eu, ev, ej, groups: dict[int, tuple[tuple[int, ...], tuple[int, ...]]]):
        self.vertices = tuple(int(v) for v in vertices)
        self._eu = np.asarray(eu, dtype=np.int64)
        self._ev = np.asarray(ev, dtype=np.int64)
        self._ej = np.asarray(ej, dtype=np.int64)
        self.groups = groups
        self._adj: dict[int, set[int]] | None = None
        self._cert: dict[tuple[int, int], int] | None = None

    @property
    def num_edges(self) -> int:
        return len(self._eu)

    def edges(self) -> list[tuple[int, int, int]]:
        return list(zip(self._eu.tolist(), self._ev.tolist(), self._ej.tolist()))

    @property
    def adjacency(self) -> dict[int, set[int]]:
        if self._adj is None:
            adj: dict[int, set[int]] = {v: set() for v in self.vertices}
            for u, v in zip(self._eu.tolist(), self._ev.tolist()):
                adj[u].add(v)
                adj[v].add(u)
            self._adj = adj
        return self._adj

    def certificate(self, u: int, v: int) -> int | None:
        if self._cert is None:
            self._cert = {(a, b): j for a, b, j in self.edges()}
        return self._cert.get((min(u, v), max(u, v)))

    def has_edge(self, u: int, v: int) -> bool:
        return self.certificate(u, v) is not None

    def to_json(self) -> dict:
        return {
            "vertices": list(self.vertices),
            "edges": [[u, v, j] for u, v, j in self.edges()],
            "groups": {str(j): {"zero": list(L), "one": list(R)} for j, (L, R) in sorted(self.groups.items())},
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json())

    @classmethod
    def from_edges(cls, vertices: Iterable[int], edges: Iterable[tuple[int, int]]) -> "ContradictionGraph":
        """A bare graph without query groups; handy for colouring and clique tests."""
        es = sorted({(min(u, v), max(u, v)) for u, v in edges if u != v})
        eu = [e[0] for e in es]
        ev = [e[1] for e in es]
        return cls(sorted(set(vertices) | set(eu) | set(ev)), eu, ev, [1] * len(es), {})


def _distinct_queries(log: QueryLog, vertices: Iterable[int] | None = None):
    i, j, a = log.queries()
    if vertices is not None:
        keep = np.isin(i, np.fromiter(vertices, dtype=np.int64))
        i, j, a = i[keep], j[keep], a[keep]
    if len(i) == 0:
        return i, j, a
    keys, first = np.unique(j * (1 << 32) + i, return_index=True)
    return keys & 0xFFFFFFFF, keys >> 32, a[first]


def build_contradiction_graph(log: QueryLog, vertices: Iterable[int] | None = None) -> ContradictionGraph:
    """Graph on every sampled handle (or only ``vertices``) from the transcript."""
    if vertices is not None:
        vertices = sorted({int(v) for v in vertices})
        vset = vertices
    else:
        vset = None
        vertices = [e["i"] for e in log.events() if e["ev"] == "sample"]
    qi, qj, qa = _distinct_queries(log, vset)

    groups: dict[int, tuple[tuple[int, ...], tuple[int, ...]]] = {}
    us, vs, js = [], [], []
    if len(qj):
        cuts = np.flatnonzero(np.diff(qj)) + 1
        for lo, hi in zip(np.r_[0, cuts], np.r_[cuts, len(qj)]):
            j = int(qj[lo])
            ii, aa = qi[lo:hi], qa[lo:hi]
            L, R = ii[aa == 0], ii[aa == 1]
            groups[j] = (tuple(L.tolist()), tuple(R.tolist()))
            if len(L) and len(R):
                x = np.repeat(L, len(R))
                y = np.tile(R, len(L))
                us.append(np.minimum(x, y))
                vs.append(np.maximum(x, y))
                js.append(np.full(len(x), j, dtype=np.int64))
    if us:
        u, v, j = np.concatenate(us), np.concatenate(vs), np.concatenate(js)
        # groups were visited in increasing j, so the first occurrence is the smallest certificate
        key, first = np.unique(u * (1 << 32) + v, return_index=True)
        eu, ev, ej = key >> 32, key & 0xFFFFFFFF, j[first]
    else:
        eu = ev = ej = np.zeros(0, dtype=np.int64)
    return ContradictionGraph(vertices, eu, ev, ej, groups)


def edge_cover_capacity(G: ContradictionGraph) -> int:
    return sum(len(L) + len(R) for L, R in G.groups.values())


def _core(adj: dict[int, set[int]], k: int) -> tuple[dict[int, set[int]], list[int]]:
    """Repeatedly peel vertices of degree < k; returns the core and the peel order."""
    adj = {v: set(ns) for v, ns in adj.items()}
    peeled: list[int] = []
    stack = [v for v, ns in adj.items() if len(ns) < k]
    gone = set()
    while stack:
        v = stack.pop()
        if v in gone:
            continue
        gone.add(v)
        peeled.append(v)
        for w in adj[v]:
            adj[w].discard(v)
            if w not in gone and len(adj[w]) < k:
                stack.append(w)
        adj[v] = set()
    return {v: ns for v, ns in adj.items() if v not in gone}, peeled


def is_m_colorable(G: ContradictionGraph, m: int) -> tuple[bool, dict[int, int] | None]:
    """Exact m-colourability. Returns ``(True, colouring)`` or ``(False, None)``.

    Vertices of degree below ``m`` are peeled first (they can always be coloured
    last); the remaining core is searched by backtracking, most-constrained first.
    """
    if m < 1:
        raise ValueError("m must be at least 1")
    adj = G.adjacency
    core, peeled = _core(adj, m)
    if len(core) > COLORING_MAX_VERTICES:
        raise GraphScaleExceeded(f"{len(core)} vertices remain after peeling, guard is {COLORING_MAX_VERTICES}")

    order = sorted(core, key=lambda v: (-len(core[v]), v))
    color: dict[int, int] = {}

    def pick() -> int | None:
        best, key = None, None
        for v in order:
            if v in color:
                continue
            used = {color[w] for w in core[v] if w in color}
            k = (-len(used), -len(core[v]), v)
            if key is None or k < key:
                best, key = v, k
        return best

    def solve() -> bool:
        v = pick()
        if v is None:
            return True
        used = {color[w] for w in core[v] if w in color}
        top = max(color.values(), default=-1)
        # colours above top+1 are symmetric to top+1
        for c in range(min(m, top + 2)):
            if c in used:
                continue
            color[v] = c
            if solve():
                return True
            del color[v]
        return False

    if not solve():
        return False, None
    for v in reversed(peeled):
        used = {color[w] for w in adj[v] if w in color}
        color[v] = next(c for c in range(m) if c not in used)
    for u, v, _ in G.edges():
        assert color[u] != color[v], "colouring is not proper"
    return True, color


def find_clique(G: ContradictionGraph, k: int, containing: int | None = None) -> list[int] | None:
    """An exact search for a ``k``-clique, optionally forced to contain one vertex."""
    if k < 1:
        raise ValueError("clique size must be at least 1")
    core, _ = _core(G.adjacency, k - 1)
    if containing is not None:
        if containing not in core:
            return None
        roots = [containing]
    else:
        roots = sorted(core, key=lambda v: (len(core[v]), v))
    if not core:
        return None
    if k == 1:
        return [roots[0]]

    def extend(clique: list[int], cand: set[int]) -> list[int] | None:
        need = k - len(clique)
        if need == 0:
            return clique
        if len(cand) < need:
            return None
        for v in sorted(cand):
            nxt = cand & core[v]
            nxt = {w for w in nxt if w > v}
            found = extend(clique + [v], nxt)
            if found:
                return found
        return None

    done: set[int] = set()
    for r in roots:
        cand = core[r] - done
        found = extend([r], set(cand))
        if found:
            return sorted(found)
        if containing is None:
            done.add(r)
    return None


def is_clique(G: ContradictionGraph, vertices: Sequence[int]) -> bool:
    vs = list(vertices)
    return all(G.has_edge(vs[a], vs[b]) for a in range(len(vs)) for b in range(a + 1, len(vs)))


def hansel_bound(m: int) -> float:
    return (m + 1) * math.log2(m + 1)


@dataclass(frozen=True)
class HanselVerdict:
    colorable: bool
    capacity: int
    bound: float
    holds: bool

    def as_dict(self) -> dict:
        return {"colorable": self.colorable, "capacity": self.capacity, "bound": self.bound, "holds": self.holds}


def check_hansel_bound(G: ContradictionGraph, m: int) -> HanselVerdict:
    colorable, _ = is_m_colorable(G, m)
    cap = edge_cover_capacity(G)
    bound = hansel_bound(m)
    return HanselVerdict(colorable, cap, bound, colorable or cap >= bound - 1e-9)


@dataclass(frozen=True)
class WitnessCheck:
    """Outcome of checking a claimed explicit witness against a transcript."""

    m: int
    clique: tuple[int, ...]
    is_clique: bool
    capacity: int
    bound: float
    colorable: bool

    @property
    def valid(self) -> bool:
        return (len(self.clique) == self.m + 1 and self.is_clique and not self.colorable
                and self.capacity >= self.bound - 1e-9)

    def as_dict(self) -> dict:
        return {"m": self.m, "clique": list(self.clique), "is_clique": self.is_clique,
                "capacity": self.capacity, "bound": self.bound, "colorable": self.colorable,
                "valid": self.valid}


def verify_witness(log: QueryLog, clique: Sequence[int], m: int) -> WitnessCheck:
    """Check that ``clique`` is an (m+1)-clique of the transcript's contradiction graph.

    Edges between two samples depend only on those two samples' queries, so the
    graph restricted to the claimed vertices decides the clique question, and
    its capacity is a lower bound for the whole transcript's.
    """
    G = build_contradiction_graph(log, clique)
    ok = len(set(clique)) == len(clique) and is_clique(G, clique)
    verdict = check_hansel_bound(G, m)
    return WitnessCheck(m, tuple(int(c) for c in clique), ok, verdict.capacity, verdict.bound, verdict.colorable)


def search_witness(log: QueryLog, m: int) -> list[int] | None:
    """Look for any (m+1)-clique in the full transcript graph."""
    return find_clique(build_contradiction_graph(log), m + 1)
