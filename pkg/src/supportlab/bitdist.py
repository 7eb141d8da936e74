"""Distributions over fixed-length bitstrings and exact distance computations.

Weights are kept as :class:`fractions.Fraction` when every weight of a
distribution is rational (exact mode); otherwise they are floats and sums and
comparisons use an absolute tolerance of ``1e-12``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Callable, Iterable, Mapping, Sequence, Union

import numpy as np
from scipy.optimize import linprog

Weight = Union[Fraction, float]

TOL = 1e-12
ORACLE_MAX_ATOMS = 12


class OracleScaleExceeded(ValueError):
    """The exact oracle was asked for an instance beyond its guard."""


@dataclass(frozen=True)
class BitString:
    """An immutable string in {0,1}^n. Character 0 of the text form is coordinate 1."""

    bits: tuple[int, ...]

    def __post_init__(self):
        if len(self.bits) < 1:
            raise ValueError("bitstrings must have length >= 1")
        if any(b not in (0, 1) for b in self.bits):
            raise ValueError("bits must be 0 or 1")

    @classmethod
    def parse(cls, text: str) -> "BitString":
        if not text or set(text) - {"0", "1"}:
            raise ValueError(f"not a 01-string: {text!r}")
        return cls(tuple(1 if c == "1" else 0 for c in text))

    @classmethod
    def from_array(cls, arr) -> "BitString":
        return cls(tuple(int(b) for b in np.asarray(arr).ravel()))

    @classmethod
    def zeros(cls, n: int) -> "BitString":
        return cls((0,) * n)

    @classmethod
    def indicator(cls, n: int, positions: Iterable[int]) -> "BitString":
        """The string 1_A for a set A of 1-based coordinates."""
        bits = [0] * n
        for p in positions:
            if not 1 <= p <= n:
                raise ValueError(f"coordinate {p} outside 1..{n}")
            bits[p - 1] = 1
        return cls(tuple(bits))

    @property
    def n(self) -> int:
        return len(self.bits)

    def __len__(self) -> int:
        return len(self.bits)

    def __str__(self) -> str:
        return "".join("1" if b else "0" for b in self.bits)

    def __repr__(self) -> str:
        return f"BitString('{self}')"

    def array(self) -> np.ndarray:
        return np.array(self.bits, dtype=np.uint8)


def _as_weight(w) -> Weight:
    if isinstance(w, Fraction):
        return w
    if isinstance(w, int) and not isinstance(w, bool):
        return Fraction(w)
    if isinstance(w, str):
        return Fraction(w.strip())
    return float(w)


@dataclass(frozen=True)
class DistributionSpec:
    """An explicit distribution: ``atoms`` is a tuple of ``(BitString, weight)``."""

    n: int
    atoms: tuple[tuple[BitString, Weight], ...]

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if not self.atoms:
            raise ValueError("a distribution needs at least one atom")
        atoms = tuple((x, _as_weight(w)) for x, w in self.atoms)
        object.__setattr__(self, "atoms", atoms)
        seen = set()
        for x, w in atoms:
            if not isinstance(x, BitString):
                raise TypeError("atoms must be BitString instances")
            if len(x) != self.n:
                raise ValueError(f"atom {x} has length {len(x)}, expected {self.n}")
            if x in seen:
                raise ValueError(f"duplicate atom {x}")
            seen.add(x)
            if not w > 0:
                raise ValueError(f"weight of {x} must be strictly positive, got {w}")
        total = sum(w for _, w in atoms)
        if self.exact:
            if total != 1:
                raise ValueError(f"weights sum to {total}, not 1")
        elif abs(float(total) - 1.0) > TOL:
            raise ValueError(f"weights sum to {float(total)!r}, not 1 within {TOL}")

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple], n: int | None = None, merge: bool = False) -> "DistributionSpec":
        """Build from ``(bits, weight)`` pairs; bits may be text, a BitString or a 0/1 sequence.

        With ``merge=True`` repeated strings have their weights summed, which is
        what pushforwards and the hard-instance generators need.
        """
        items: dict[BitString, Weight] = {}
        order: list[BitString] = []
        for bits, w in pairs:
            x = _coerce_bits(bits)
            w = _as_weight(w)
            if x in items:
                if not merge:
                    raise ValueError(f"duplicate atom {x}")
                items[x] = items[x] + w
            else:
                items[x] = w
                order.append(x)
        if n is None:
            n = len(order[0]) if order else 0
        return cls(n, tuple((x, items[x]) for x in order))

    @classmethod
    def point_mass(cls, bits) -> "DistributionSpec":
        x = _coerce_bits(bits)
        return cls(len(x), ((x, Fraction(1)),))

    @classmethod
    def uniform(cls, strings: Sequence) -> "DistributionSpec":
        xs = [_coerce_bits(s) for s in strings]
        w = Fraction(1, len(xs))
        return cls(len(xs[0]), tuple((x, w) for x in xs))

    @property
    def exact(self) -> bool:
        return all(isinstance(w, Fraction) for _, w in self.atoms)

    @property
    def support(self) -> list[BitString]:
        return [x for x, _ in self.atoms]

    @property
    def weights(self) -> list[Weight]:
        return [w for _, w in self.atoms]

    @property
    def support_size(self) -> int:
        return len(self.atoms)

    @cached_property
    def matrix(self) -> np.ndarray:
        """Atoms as a read-only ``(support_size, n)`` uint8 array."""
        mat = np.array([x.bits for x, _ in self.atoms], dtype=np.uint8)
        mat.setflags(write=False)
        return mat

    @cached_property
    def probs(self) -> np.ndarray:
        p = np.array([float(w) for _, w in self.atoms], dtype=np.float64)
        p.setflags(write=False)
        return p

    def weight_of(self, x) -> Weight:
        x = _coerce_bits(x)
        for y, w in self.atoms:
            if y == x:
                return w
        return Fraction(0) if self.exact else 0.0

    def as_dict(self) -> dict[BitString, Weight]:
        return dict(self.atoms)

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "atoms": [{"bits": str(x), "weight": _weight_to_json(w)} for x, w in self.atoms],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2)

    @classmethod
    def from_json(cls, doc: Mapping) -> "DistributionSpec":
        n = int(doc["n"])
        atoms = tuple((BitString.parse(a["bits"]), _as_weight(a["weight"])) for a in doc["atoms"])
        return cls(n, atoms)

    @classmethod
    def loads(cls, text: str) -> "DistributionSpec":
        return cls.from_json(json.loads(text))


def _weight_to_json(w: Weight):
    if isinstance(w, Fraction):
        return f"{w.numerator}/{w.denominator}"
    return float(w)


def _coerce_bits(bits) -> BitString:
    if isinstance(bits, BitString):
        return bits
    if isinstance(bits, str):
        return BitString.parse(bits)
    return BitString.from_array(bits)


def _check_same_n(a: int, b: int):
    if a != b:
        raise ValueError(f"dimension mismatch: {a} != {b}")


def hamming_distance(u: BitString, v: BitString) -> Fraction:
    """Normalized Hamming distance as an exact fraction."""
    u, v = _coerce_bits(u), _coerce_bits(v)
    _check_same_n(len(u), len(v))
    diff = sum(1 for a, b in zip(u.bits, v.bits) if a != b)
    return Fraction(diff, len(u))


def distance_to_set(x: BitString, A: Iterable[BitString]) -> Fraction:
    A = [_coerce_bits(a) for a in A]
    if not A:
        raise ValueError("distance to an empty set is undefined")
    return min(hamming_distance(x, a) for a in A)


def variation_distance(P: DistributionSpec, Q: DistributionSpec) -> Weight:
    _check_same_n(P.n, Q.n)
    p, q = P.as_dict(), Q.as_dict()
    zero = Fraction(0) if (P.exact and Q.exact) else 0.0
    total = zero
    for x in set(p) | set(q):
        total += abs(p.get(x, zero) - q.get(x, zero))
    return total / 2


@dataclass(frozen=True)
class TransferPlan:
    """A coupling of two distributions given as ``(source, target, mass)`` entries."""

    entries: tuple[tuple[BitString, BitString, float], ...]

    def cost(self) -> float:
        return float(sum(m * float(hamming_distance(u, v)) for u, v, m in self.entries))

    def marginals(self) -> tuple[dict[BitString, float], dict[BitString, float]]:
        rows: dict[BitString, float] = {}
        cols: dict[BitString, float] = {}
        for u, v, m in self.entries:
            rows[u] = rows.get(u, 0.0) + m
            cols[v] = cols.get(v, 0.0) + m
        return rows, cols

    def is_transfer(self, P: DistributionSpec, Q: DistributionSpec, tol: float = TOL) -> bool:
        if any(m < 0 for _, _, m in self.entries):
            return False
        rows, cols = self.marginals()
        for dist, marg in ((P, rows), (Q, cols)):
            keys = set(dist.as_dict()) | set(marg)
            for x in keys:
                if abs(float(dist.weight_of(x)) - marg.get(x, 0.0)) > tol:
                    return False
        return True


def _hamming_matrix(X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """Integer Hamming counts between rows of two 0/1 matrices."""
    X = X.astype(np.int64)
    Y = Y.astype(np.int64)
    return X @ (1 - Y).T + (1 - X) @ Y.T


def emd(P: DistributionSpec, Q: DistributionSpec) -> tuple[float, TransferPlan]:
    """Earth mover's distance under normalized Hamming cost, solved as an exact LP.

    Returns the optimum and a plan attaining it; the value is recomputed from
    the plan so the two always agree.
    """
    _check_same_n(P.n, Q.n)
    s, t = P.support_size, Q.support_size
    cost = _hamming_matrix(P.matrix, Q.matrix) / P.n
    a, b = P.probs, Q.probs
    # equality rows: s row sums, t column sums (last dropped, it is implied)
    A_eq = np.zeros((s + t - 1, s * t))
    for i in range(s):
        A_eq[i, i * t:(i + 1) * t] = 1.0
    for j in range(t - 1):
        A_eq[s + j, j::t] = 1.0
    b_eq = np.concatenate([a, b[:-1]])
    res = linprog(cost.ravel(), A_eq=A_eq, b_eq=b_eq, bounds=(0, None), method="highs")
    if res.status != 0:
        raise RuntimeError(f"transportation LP failed: {res.message}")
    flow = np.clip(res.x.reshape(s, t), 0.0, None)
    flow[np.abs(flow) < 1e-15] = 0.0
    entries = []
    for i in range(s):
        for j in range(t):
            if flow[i, j] > 0:
                entries.append((P.support[i], Q.support[j], float(flow[i, j])))
    plan = TransferPlan(tuple(entries))
    value = float((flow * cost).sum())
    return value, plan


def sample_map(P: DistributionSpec, f: Callable[[BitString], BitString]) -> DistributionSpec:
    """Pushforward of ``P`` under ``f``; atoms mapped to the same string merge."""
    pairs = []
    for x, w in P.atoms:
        y = _coerce_bits(f(x))
        if len(y) != P.n:
            raise ValueError(f"map changed length {P.n} -> {len(y)}")
        pairs.append((y, w))
    return DistributionSpec.from_pairs(pairs, n=P.n, merge=True)


@dataclass(frozen=True)
class SupportDistance:
    """Result of the exact oracle: value, cluster centers and atom-to-center assignment."""

    value: Weight
    centers: tuple[BitString, ...]
    assignment: tuple[int, ...]


def _scaled_weights(P: DistributionSpec):
    """Integer weights over a common denominator (exact mode) or plain floats."""
    if P.exact:
        denom = math.lcm(*(w.denominator for w in P.weights))
        ints = [int(w * denom) for w in P.weights]
        return ints, denom
    return list(P.probs), None


def _subset_costs(X: np.ndarray, w, exact: bool) -> list:
    """Unnormalized cost of every subset of atoms served by its weighted-majority center."""
    s = X.shape[0]
    # identical columns contribute identically; collapse them
    cols, counts = np.unique(X.T, axis=0, return_counts=True)
    cols = cols.T  # (s, patterns)
    masks = np.arange(1 << s)
    member = (masks[:, None] >> np.arange(s)[None, :]) & 1
    if exact:
        bound = sum(w) * int(counts.sum())
        dtype = np.int64 if bound < (1 << 62) else object
    else:
        dtype = np.float64
    wv = np.array(w, dtype=dtype)
    cnt = counts.astype(dtype)
    weighted_cols = wv[:, None] * cols.astype(dtype)
    costs = np.empty(1 << s, dtype=dtype)
    chunk = 512
    for start in range(0, 1 << s, chunk):
        mem = member[start:start + chunk].astype(dtype)
        ones = mem @ weighted_cols
        zeros = (mem @ wv)[:, None] - ones
        costs[start:start + chunk] = np.minimum(ones, zeros) @ cnt
    return costs.tolist()


def _majority_center(X: np.ndarray, w, idx: list[int], exact: bool) -> BitString:
    dtype = object if exact else np.float64
    ones = np.array([w[i] for i in idx], dtype=dtype) @ X[idx].astype(dtype)
    total = sum(w[i] for i in idx)
    return BitString(tuple(1 if o > total - o else 0 for o in ones))


def _best_partition(costs: list, s: int, m: int) -> list[int]:
    """Cluster masks of a minimum-cost partition of ``s`` atoms into at most ``m`` clusters."""
    full = (1 << s) - 1
    best = list(costs)
    choices: list[list[int] | None] = [None, list(range(full + 1))]
    for _ in range(2, m + 1):
        nxt = list(costs)
        choice = list(range(full + 1))
        for mask in range(1, full + 1):
            low = mask & -mask
            rest = mask ^ low
            # enumerate proper submasks of ``rest``; the first cluster always holds ``low``
            sub = (rest - 1) & rest if rest else 0
            if rest == 0:
                continue
            while True:
                first = sub | low
                cand = costs[first] + best[mask ^ first]
                if cand < nxt[mask]:
                    nxt[mask] = cand
                    choice[mask] = first
                if sub == 0:
                    break
                sub = (sub - 1) & rest
        best = nxt
        choices.append(choice)

    clusters = []
    mask, k = full, m
    while mask:
        first = choices[k][mask]
        clusters.append(first)
        mask ^= first
        k -= 1
    return clusters


def distance_to_support_m(P: DistributionSpec, m: int) -> SupportDistance:
    """Exact EMD distance from ``P`` to the set of distributions with support at most ``m``.

    Minimizes over all partitions of the support into at most ``m`` clusters,
    each served by its probability-weighted coordinate-wise majority string
    (ties resolve to 0). Exact rationals are returned in exact mode.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    s = P.support_size
    if s > ORACLE_MAX_ATOMS:
        raise OracleScaleExceeded(f"oracle scale exceeded: support {s} > {ORACLE_MAX_ATOMS} atoms")
    if s <= m:
        zero = Fraction(0) if P.exact else 0.0
        return SupportDistance(zero, tuple(P.support), tuple(range(s)))

    w, denom = _scaled_weights(P)
    X = P.matrix
    costs = _subset_costs(X, w, P.exact)
    clusters = _best_partition(costs, s, m)

    centers = []
    assignment = [0] * s
    for ci, cmask in enumerate(clusters):
        idx = [i for i in range(s) if cmask >> i & 1]
        centers.append(_majority_center(X, w, idx, P.exact))
        for i in idx:
            assignment[i] = ci
    raw = sum(costs[c] for c in clusters)
    if P.exact:
        value: Weight = Fraction(int(raw), denom * P.n)
    else:
        value = float(raw) / P.n
    return SupportDistance(value, tuple(centers), tuple(assignment))
