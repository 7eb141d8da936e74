import itertools
import json
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from supportlab.bitdist import (BitString, DistributionSpec, OracleScaleExceeded, distance_to_set,
                                distance_to_support_m, emd, hamming_distance, sample_map,
                                variation_distance)

B = BitString.parse


def test_hamming_examples():
    assert hamming_distance(B("000"), B("000")) == 0
    assert hamming_distance(B("000"), B("111")) == 1
    assert hamming_distance(B("0011"), B("0101")) == Fraction(1, 2)


def test_hamming_length_mismatch():
    with pytest.raises(ValueError):
        hamming_distance(B("00"), B("000"))


def test_distance_to_set_examples():
    assert distance_to_set(B("111"), [B("000"), B("110")]) == Fraction(1, 3)
    assert distance_to_set(B("0101"), [B("0101"), B("1111")]) == 0
    assert distance_to_set(B("0000"), [B("1111"), B("1100")]) == Fraction(1, 2)
    with pytest.raises(ValueError):
        distance_to_set(B("0"), [])


def test_bitstring_indicator_is_one_based():
    assert str(BitString.indicator(3, [2])) == "010"
    with pytest.raises(ValueError):
        BitString.indicator(3, [0])


def test_distribution_invariants():
    with pytest.raises(ValueError):
        DistributionSpec.from_pairs([("01", "1/2"), ("01", "1/2")])
    with pytest.raises(ValueError):
        DistributionSpec.from_pairs([("01", "1/2"), ("10", "1/3")])
    with pytest.raises(ValueError):
        DistributionSpec.from_pairs([("01", 1), ("10", 0)])
    with pytest.raises(ValueError):
        DistributionSpec.from_pairs([("01", "1/2"), ("100", "1/2")], n=2)
    P = DistributionSpec.from_pairs([("01", "1/2"), ("01", "1/2")], merge=True)
    assert P.support_size == 1 and P.weights == [1]


def test_json_roundtrip_and_format():
    P = DistributionSpec.from_pairs([("0110", "1/3"), ("1111", "2/3")])
    doc = json.loads(P.dumps())
    assert doc == {"n": 4, "atoms": [{"bits": "0110", "weight": "1/3"}, {"bits": "1111", "weight": "2/3"}]}
    assert DistributionSpec.loads(P.dumps()) == P
    Q = DistributionSpec.from_json({"n": 1, "atoms": [{"bits": "0", "weight": 0.25}, {"bits": "1", "weight": 0.75}]})
    assert not Q.exact and Q.weight_of("1") == 0.75


def test_emd_examples():
    P = DistributionSpec.uniform(["0011", "0101"])
    assert emd(P, P)[0] == pytest.approx(0, abs=1e-12)
    v, plan = emd(DistributionSpec.point_mass("0000"), DistributionSpec.point_mass("1111"))
    assert v == pytest.approx(1)
    v, plan = emd(DistributionSpec.point_mass("00"), DistributionSpec.from_pairs([("00", "1/2"), ("11", "1/2")]))
    assert v == pytest.approx(0.5)
    assert plan.is_transfer(DistributionSpec.point_mass("00"), DistributionSpec.from_pairs([("00", "1/2"), ("11", "1/2")]))


def test_emd_dimension_mismatch():
    with pytest.raises(ValueError):
        emd(DistributionSpec.point_mass("00"), DistributionSpec.point_mass("000"))


def test_variation_examples():
    P = DistributionSpec.uniform(["01", "10"])
    assert variation_distance(P, P) == 0
    assert variation_distance(P, DistributionSpec.uniform(["00", "11"])) == 1
    P1 = DistributionSpec.from_pairs([("0", "3/4"), ("1", "1/4")])
    Q1 = DistributionSpec.from_pairs([("0", "1/4"), ("1", "3/4")])
    assert variation_distance(P1, Q1) == Fraction(1, 2)


def test_support_distance_examples():
    assert distance_to_support_m(DistributionSpec.uniform(["01", "10"]), 2).value == 0
    assert distance_to_support_m(DistributionSpec.uniform(["000", "111"]), 1).value == Fraction(1, 2)
    r = distance_to_support_m(DistributionSpec.uniform(["0000", "0011", "1100", "1111"]), 2)
    assert r.value == Fraction(1, 4)
    assert len(r.centers) == 2 and len(r.assignment) == 4


def test_support_distance_guards():
    with pytest.raises(ValueError):
        distance_to_support_m(DistributionSpec.point_mass("0"), 0)
    strings = [format(i, "04b") for i in range(13)]
    with pytest.raises(OracleScaleExceeded):
        distance_to_support_m(DistributionSpec.uniform(strings), 2)


def test_majority_tie_goes_to_zero():
    r = distance_to_support_m(DistributionSpec.uniform(["0", "1"]), 1)
    assert r.value == Fraction(1, 2)
    assert str(r.centers[0]) == "0"


def test_sample_map_examples():
    P = DistributionSpec.uniform(["01", "10"])
    assert sample_map(P, lambda x: x) == P
    assert sample_map(P, lambda x: BitString.zeros(2)) == DistributionSpec.point_mass("00")
    rev = sample_map(P, lambda x: BitString(x.bits[::-1]))
    assert rev.as_dict() == P.as_dict()
    with pytest.raises(ValueError):
        sample_map(P, lambda x: BitString.zeros(3))


def _center_enumeration(P: DistributionSpec, m: int) -> Fraction:
    """Independent oracle: try every center set of size m in {0,1}^n."""
    n = P.n
    cube = [BitString(bits) for bits in itertools.product((0, 1), repeat=n)]
    best = None
    for A in itertools.combinations(cube, min(m, len(cube))):
        v = sum(w * distance_to_set(x, A) for x, w in P.atoms)
        if best is None or v < best:
            best = v
    return best


@st.composite
def small_distributions(draw, max_atoms=5, max_n=5):
    n = draw(st.integers(1, max_n))
    k = draw(st.integers(1, min(max_atoms, 2**n)))
    atoms = draw(st.lists(st.integers(0, 2**n - 1), min_size=k, max_size=k, unique=True))
    raw = draw(st.lists(st.integers(1, 9), min_size=k, max_size=k))
    tot = sum(raw)
    return DistributionSpec.from_pairs([(format(a, f"0{n}b"), Fraction(r, tot)) for a, r in zip(atoms, raw)])


@settings(max_examples=60, deadline=None)
@given(small_distributions(max_n=4), st.integers(1, 3))
def test_partition_matches_center_enumeration(P, m):
    assert distance_to_support_m(P, m).value == _center_enumeration(P, m)


@settings(max_examples=60, deadline=None)
@given(small_distributions(), small_distributions())
def test_emd_vs_variation(P, Q):
    if P.n != Q.n:
        return
    e, plan = emd(P, Q)
    tv = float(variation_distance(P, Q))
    assert e <= tv + 1e-9
    assert plan.cost() == pytest.approx(e, abs=1e-12)
    assert plan.is_transfer(P, Q)
    assert emd(Q, P)[0] == pytest.approx(e, abs=1e-9)
    assert (e < 1e-12) == (P.as_dict() == Q.as_dict())


@settings(max_examples=40, deadline=None)
@given(small_distributions(max_atoms=6))
def test_support_distance_monotone_in_m(P):
    vals = [distance_to_support_m(P, m).value for m in range(1, 7)]
    assert all(a >= b for a, b in zip(vals, vals[1:]))
    for m, v in enumerate(vals, start=1):
        assert (v == 0) == (P.support_size <= m)


def test_support_distance_matches_emd_to_center_pushforward():
    rng = np.random.default_rng(5)
    for _ in range(20):
        n = 6
        atoms = rng.choice(2**n, size=5, replace=False)
        P = DistributionSpec.uniform([format(int(a), "06b") for a in atoms])
        r = distance_to_support_m(P, 2)
        Q = sample_map(P, lambda x: r.centers[r.assignment[P.support.index(x)]])
        assert emd(P, Q)[0] == pytest.approx(float(r.value), abs=1e-9)
