import io
from fractions import Fraction

import numpy as np
import pytest

from supportlab.bitdist import BitString, DistributionSpec
from supportlab.oracle import (BudgetExceeded, QueryLog, UnknownSample, atoms_for, open_session,
                               run_nonadaptive)


def _script(session):
    hs = [session.draw_sample() for _ in range(5)]
    return [session.query(h, j) for h in hs for j in (1, 3, 5)]


def _transcript(session) -> str:
    buf = io.StringIO()
    session.log.dump_jsonl(buf)
    return buf.getvalue()


P5 = DistributionSpec.from_pairs([("10101", "1/4"), ("01010", "1/4"), ("11100", "1/2")])


def test_same_seed_same_transcript():
    a, b = open_session(P5, 7), open_session(P5, 7)
    assert _script(a) == _script(b)
    assert _transcript(a) == _transcript(b)


def test_different_seeds_differ():
    P = DistributionSpec.uniform(["0", "1"])
    seqs = set()
    for seed in range(100):
        s = open_session(P, seed)
        h = s.draw_samples(20)
        seqs.add(tuple(s.query_many(h, np.ones(20, dtype=int)).tolist()))
    # two 20-draw fair sequences coincide with probability 2^-20 per pair
    assert len(seqs) >= 99


def test_point_mass_samples_identical():
    P = DistributionSpec.point_mass("0110")
    for seed in range(5):
        s = open_session(P, seed)
        hs = s.draw_samples(4)
        for h in hs:
            assert [s.query(h, j) for j in range(1, 5)] == [0, 1, 1, 0]


def test_uniform_frequency():
    s = open_session(DistributionSpec.uniform(["0", "1"]), 11)
    h = s.draw_samples(10000)
    freq = s.query_many(h, np.ones(len(h), dtype=int)).mean()
    assert abs(freq - 0.5) <= 0.02


def test_budgets_and_errors():
    s = open_session(P5, 0, max_samples=0)
    with pytest.raises(BudgetExceeded):
        s.draw_sample()
    s = open_session(DistributionSpec.point_mass(BitString.indicator(3, [2])), 0, max_queries=3)
    h = s.draw_sample()
    assert s.query(h, 2) == 1 and s.query(h, 1) == 0
    with pytest.raises(IndexError):
        s.query(h, 4)
    with pytest.raises(UnknownSample):
        s.query(h + 1, 1)
    assert s.query(h, 2) == 1
    with pytest.raises(BudgetExceeded):
        s.query(h, 3)
    assert s.queries_used == 3


def test_repeat_queries_count():
    s = open_session(P5, 3)
    h = s.draw_sample()
    a = [s.query(h, 2) for _ in range(3)]
    assert len(set(a)) == 1 and s.queries_used == 3


def test_answers_match_ground_truth():
    s = open_session(P5, 9)
    hs = s.draw_samples(50)
    truth = atoms_for(P5, 9, hs)
    for h, t in zip(hs.tolist(), truth.tolist()):
        assert [s.query(h, j) for j in range(1, 6)] == list(P5.support[t].bits)


def test_run_nonadaptive_examples():
    s = open_session(P5, 0)
    ans = run_nonadaptive(s, [])
    assert len(ans) == 0 and s.queries_used == 0

    s = open_session(DistributionSpec.point_mass("101"), 0)
    ans = run_nonadaptive(s, [(0, 1), (0, 2), (1, 3)])
    assert ans.as_dict() == {(0, 1): 1, (0, 2): 0, (1, 3): 1}
    assert s.samples_used == 2


def test_run_nonadaptive_equals_sequential_replay():
    Q = [(3, 2), (0, 1), (2, 5), (1, 4), (3, 1), (0, 5)]
    bulk = run_nonadaptive(open_session(P5, 21), Q).as_dict()
    s = open_session(P5, 21)
    s.draw_samples(4)
    seq = {(i, j): s.query(i, j) for i, j in reversed(Q)}
    assert bulk == seq


def test_log_counts_and_roundtrip():
    s = open_session(P5, 4)
    _script(s)
    events = list(s.log.events())
    assert sum(e["ev"] == "sample" for e in events) == s.samples_used == 5
    assert sum(e["ev"] == "query" for e in events) == s.queries_used == 15
    text = _transcript(s)
    assert text.splitlines()[0] == '{"ev":"sample","i":0}'
    log = QueryLog.load_jsonl(io.StringIO(text))
    assert list(log.events()) == events


def test_log_rejects_query_before_sample():
    with pytest.raises(ValueError):
        QueryLog.from_events([{"ev": "query", "i": 0, "j": 1, "a": 0}])


def test_blindness_on_unqueried_coordinates():
    # the two distributions differ only at coordinate 4, which is never queried
    P = DistributionSpec.from_pairs([("0000", Fraction(1, 3)), ("1100", Fraction(2, 3))])
    Q = DistributionSpec.from_pairs([("0001", Fraction(1, 3)), ("1101", Fraction(2, 3))])
    outs = []
    for D in (P, Q):
        s = open_session(D, 5)
        hs = s.draw_samples(30)
        ans = s.query_many(np.repeat(hs, 3), np.tile([1, 2, 3], 30))
        outs.append((ans.tolist(), _transcript(s)))
    assert outs[0] == outs[1]
    public = {n for n in dir(open_session(P, 0)) if not n.startswith("_")}
    assert not public & {"distribution", "drawn", "atoms", "P"}
