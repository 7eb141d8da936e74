import itertools
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from supportlab.bitdist import DistributionSpec
from supportlab.oracle import QueryLog, atoms_for, open_session
from supportlab.witness import (COLORING_MAX_VERTICES, ContradictionGraph, GraphScaleExceeded,
                                build_contradiction_graph, check_hansel_bound, edge_cover_capacity,
                                find_clique, hansel_bound, is_clique, is_m_colorable, search_witness,
                                verify_witness)


def _log(samples, queries):
    evs = [{"ev": "sample", "i": i} for i in range(samples)]
    evs += [{"ev": "query", "i": i, "j": j, "a": a} for i, j, a in queries]
    return QueryLog.from_events(evs)


def _complete(k):
    return ContradictionGraph.from_edges(range(k), itertools.combinations(range(k), 2))


def test_build_examples():
    G = build_contradiction_graph(_log(2, [(0, 1, 0), (1, 2, 1)]))
    assert G.num_edges == 0
    G = build_contradiction_graph(_log(2, [(0, 3, 0), (1, 3, 1)]))
    assert G.edges() == [(0, 1, 3)]
    # strings 00, 01, 10 queried at both coordinates
    strings = ["00", "01", "10"]
    q = [(i, j, int(strings[i][j - 1])) for i in range(3) for j in (1, 2)]
    G = build_contradiction_graph(_log(3, q))
    assert sorted((u, v) for u, v, _ in G.edges()) == [(0, 1), (0, 2), (1, 2)]
    assert G.certificate(1, 2) == 1 and G.certificate(0, 1) == 2


def test_certificate_is_smallest_index_and_groups_partition():
    q = [(0, 9, 0), (1, 9, 1), (0, 4, 1), (1, 4, 0), (2, 4, 1)]
    G = build_contradiction_graph(_log(3, q))
    assert G.certificate(0, 1) == 4
    for j, (L, R) in G.groups.items():
        assert not set(L) & set(R)
    assert G.groups[4] == ((1,), (0, 2))
    doc = json.loads(G.dumps())
    assert doc["edges"][0] == [0, 1, 4]


def test_coloring_examples():
    assert is_m_colorable(ContradictionGraph.from_edges([0, 1, 2], []), 1)[0]
    assert not is_m_colorable(_complete(3), 2)[0]
    for m in range(1, 6):
        assert not is_m_colorable(_complete(m + 1), m)[0]
        ok, col = is_m_colorable(_complete(m + 1), m + 1)
        assert ok and len(set(col.values())) == m + 1


def test_coloring_scale_guard():
    # K_41 cannot be peeled at m = 40
    with pytest.raises(GraphScaleExceeded):
        is_m_colorable(_complete(COLORING_MAX_VERTICES + 1), COLORING_MAX_VERTICES)
    # a long path peels away entirely
    path = ContradictionGraph.from_edges(range(200), [(i, i + 1) for i in range(199)])
    assert is_m_colorable(path, 2)[0]


def test_clique_examples():
    assert find_clique(ContradictionGraph.from_edges(range(4), []), 2) is None
    assert find_clique(_complete(5), 5) == [0, 1, 2, 3, 4]
    assert find_clique(ContradictionGraph.from_edges([0], []), 1) == [0]


def _brute_clique(G, k):
    return any(is_clique(G, c) for c in itertools.combinations(G.vertices, k))


def _brute_colorable(G, m):
    vs = list(G.vertices)
    edges = [(vs.index(u), vs.index(v)) for u, v, _ in G.edges()]
    return any(all(c[a] != c[b] for a, b in edges) for c in itertools.product(range(m), repeat=len(vs)))


def test_clique_agrees_with_enumeration_on_gnp():
    rng = np.random.default_rng(0)
    for _ in range(40):
        edges = [e for e in itertools.combinations(range(10), 2) if rng.random() < 0.5]
        G = ContradictionGraph.from_edges(range(10), edges)
        for k in range(1, 7):
            found = find_clique(G, k)
            assert (found is not None) == _brute_clique(G, k)
            if found:
                assert len(found) == k and is_clique(G, found)
            v = int(rng.integers(10))
            forced = find_clique(G, k, containing=v)
            if forced:
                assert v in forced and is_clique(G, forced)
            else:
                assert not any(is_clique(G, c) for c in itertools.combinations(G.vertices, k) if v in c)


def test_coloring_agrees_with_enumeration():
    rng = np.random.default_rng(1)
    for _ in range(40):
        edges = [e for e in itertools.combinations(range(7), 2) if rng.random() < 0.55]
        G = ContradictionGraph.from_edges(range(7), edges)
        for m in (1, 2, 3):
            ok, col = is_m_colorable(G, m)
            assert ok == _brute_colorable(G, m)
            if ok:
                assert all(col[u] != col[v] for u, v, _ in G.edges())
            if find_clique(G, m + 1):
                assert not ok


def test_capacity_examples():
    assert edge_cover_capacity(build_contradiction_graph(QueryLog())) == 0
    q = [(i, j, (i + j) % 2) for i in range(3) for j in (1, 2)]
    assert edge_cover_capacity(build_contradiction_graph(_log(3, q))) == 6
    # duplicates do not add capacity
    assert edge_cover_capacity(build_contradiction_graph(_log(3, q + q[:2]))) == 6


def test_hansel_examples():
    G = build_contradiction_graph(_log(2, [(0, 1, 0), (1, 1, 1)]))
    v = check_hansel_bound(G, 1)
    assert not v.colorable and v.capacity == 2 and v.bound == 2 and v.holds
    v = check_hansel_bound(ContradictionGraph.from_edges([0, 1], []), 1)
    assert v.colorable and v.holds
    assert hansel_bound(3) == pytest.approx(4 * 2)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.integers(2, 5))
def test_hansel_on_random_transcripts(seed, m):
    rng = np.random.default_rng(seed)
    n = 6
    atoms = rng.choice(2**n, size=m + 2, replace=False)
    P = DistributionSpec.uniform([format(int(a), f"0{n}b") for a in atoms])
    s = open_session(P, seed)
    hs = s.draw_samples(12)
    for h in hs:
        for j in rng.choice(np.arange(1, n + 1), size=int(rng.integers(1, n + 1)), replace=False):
            s.query(h, j)
    G = build_contradiction_graph(s.log)
    v = check_hansel_bound(G, m)
    assert v.holds
    assert edge_cover_capacity(G) == len({(int(i), int(j)) for i, j in zip(*s.log.queries()[:2])})
    if not v.colorable:
        # witness soundness against ground truth
        assert len(set(atoms_for(P, seed, hs).tolist())) > m
    clique = search_witness(s.log, m)
    if clique:
        assert verify_witness(s.log, clique, m).valid


def test_verify_witness_rejects_bad_cliques():
    q = [(0, 1, 0), (1, 1, 1), (2, 2, 0), (0, 2, 1)]
    log = _log(3, q)
    assert not verify_witness(log, [0, 1, 2], 2).valid
    assert verify_witness(log, [0, 1], 1).valid
    assert not verify_witness(log, [0, 0], 1).valid
    assert math.isclose(verify_witness(log, [0, 1], 1).bound, 2)
