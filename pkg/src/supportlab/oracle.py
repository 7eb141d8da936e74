"""Sample-then-query access to a hidden distribution.

A session draws i.i.d. samples from a :class:`DistributionSpec` and answers
bit queries about them; testers only ever see sample handles and answered
bits. Sample ids are 0-based draw ordinals, coordinates are 1-based.

Randomness is counter-based and split by purpose: the atom drawn at ordinal
``i`` depends only on ``(seed, i)``, so every tester run under one seed sees
the same sample stream. Algorithmic coin tosses come from a separate stream.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import IO, Iterable, Iterator

import numpy as np

from .bitdist import DistributionSpec

RNG_SCHEME = "philox-seedseq/v1"
_SAMPLE_STREAM = 1
_ALG_STREAM = 2
_BLOCK = 4096


class BudgetExceeded(RuntimeError):
    pass


class UnknownSample(LookupError):
    pass


def _stream(seed: int, *key: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(seed) & (2**64 - 1), spawn_key=key)
    return np.random.Generator(np.random.Philox(ss))


def sample_uniforms(seed: int, ordinals) -> np.ndarray:
    """The uniform variate used for each sample ordinal under ``seed``."""
    ordinals = np.asarray(ordinals, dtype=np.int64)
    out = np.empty(ordinals.shape, dtype=np.float64)
    blocks = ordinals // _BLOCK
    for b in np.unique(blocks):
        u = _stream(seed, _SAMPLE_STREAM, int(b)).random(_BLOCK)
        sel = blocks == b
        out[sel] = u[ordinals[sel] % _BLOCK]
    return out


def atoms_for(P: DistributionSpec, seed: int, ordinals) -> np.ndarray:
    """Indices into ``P.atoms`` of the samples at the given ordinals (inverse CDF, serialized order).

    This is ground truth; it belongs to the harness, never to a tester.
    """
    cdf = np.cumsum(P.probs)
    cdf[-1] = 1.0
    idx = np.searchsorted(cdf, sample_uniforms(seed, ordinals), side="right")
    return np.minimum(idx, P.support_size - 1)


class QueryLog:
    """Ordered transcript of sample and query events.

    Stored as segments so bulk requests stay cheap: a ``("sample", first, count)``
    segment or a ``("query", i, j, a)`` segment of parallel arrays.
    """

    def __init__(self):
        self._segments: list[tuple] = []
        self.samples_used = 0
        self.queries_used = 0
        self._cache: tuple[np.ndarray, np.ndarray, np.ndarray] | None = None
        self._pending: list[tuple[int, int, int]] = []

    def _flush(self):
        if self._pending:
            i, j, a = zip(*self._pending)
            self._pending = []
            self._segments.append(("query", np.array(i, np.int32), np.array(j, np.int32), np.array(a, np.uint8)))
            self._cache = None

    def record_query(self, i: int, j: int, a: int):
        self._pending.append((i, j, a))
        self.queries_used += 1

    def record_samples(self, first: int, count: int):
        if count <= 0:
            return
        self._flush()
        last = self._segments[-1] if self._segments else None
        if last is not None and last[0] == "sample" and last[1] + last[2] == first:
            self._segments[-1] = ("sample", last[1], last[2] + count)
        else:
            self._segments.append(("sample", first, count))
        self.samples_used += count

    def record_queries(self, i: np.ndarray, j: np.ndarray, a: np.ndarray):
        if len(i) == 0:
            return
        self._flush()
        # int32 keeps long adaptive transcripts compact; handles and coordinates stay far below 2**31
        self._segments.append(("query", np.asarray(i, np.int32), np.asarray(j, np.int32), np.asarray(a, np.uint8)))
        self.queries_used += len(i)
        self._cache = None

    def queries(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """All query events as parallel arrays ``(sample id, coordinate, answer)``."""
        self._flush()
        if self._cache is None:
            segs = [s for s in self._segments if s[0] == "query"]
            if segs:
                self._cache = tuple(np.concatenate([s[k] for s in segs]).astype(t)
                                    for k, t in ((1, np.int64), (2, np.int64), (3, np.uint8)))
            else:
                empty = np.zeros(0, dtype=np.int64)
                self._cache = (empty, empty.copy(), np.zeros(0, dtype=np.uint8))
        return self._cache

    def events(self) -> Iterator[dict]:
        self._flush()
        for seg in self._segments:
            if seg[0] == "sample":
                for k in range(seg[1], seg[1] + seg[2]):
                    yield {"ev": "sample", "i": k}
            else:
                for i, j, a in zip(seg[1].tolist(), seg[2].tolist(), seg[3].tolist()):
                    yield {"ev": "query", "i": i, "j": j, "a": a}

    def dump_jsonl(self, fh: IO[str]):
        for ev in self.events():
            fh.write(json.dumps(ev, separators=(",", ":")) + "\n")

    @classmethod
    def from_events(cls, events: Iterable[dict]) -> "QueryLog":
        """Rebuild a log from parsed events, checking that each query references a prior sample."""
        log = cls()
        seen: set[int] = set()
        qi, qj, qa = [], [], []

        def flush():
            if qi:
                log.record_queries(np.array(qi), np.array(qj), np.array(qa))
                qi.clear(), qj.clear(), qa.clear()

        for ev in events:
            kind = ev.get("ev")
            if kind == "sample":
                flush()
                k = int(ev["i"])
                seen.add(k)
                log.record_samples(k, 1)
            elif kind == "query":
                i, j, a = int(ev["i"]), int(ev["j"]), int(ev["a"])
                if i not in seen:
                    raise ValueError(f"query on sample {i} before it was drawn")
                if j < 1 or a not in (0, 1):
                    raise ValueError(f"malformed query event {ev}")
                qi.append(i), qj.append(j), qa.append(a)
            else:
                raise ValueError(f"unknown event {ev}")
        flush()
        return log

    @classmethod
    def load_jsonl(cls, fh: IO[str]) -> "QueryLog":
        return cls.from_events(json.loads(line) for line in fh if line.strip())


@dataclass(frozen=True)
class Budgets:
    max_samples: int | None = None
    max_queries: int | None = None


class OracleSession:
    """Access to one hidden distribution. Single-threaded; one request at a time."""

    def __init__(self, P: DistributionSpec, seed: int, budgets: Budgets | None = None):
        self._P = P
        self._seed = int(seed)
        self._atom_arr = np.zeros(1024, dtype=np.int64)
        self._cdf = np.cumsum(P.probs)
        self._cdf[-1] = 1.0
        self._block: tuple[int, np.ndarray] | None = None
        self.budgets = budgets or Budgets()
        self.log = QueryLog()
        self.n = P.n
        self.rng = _stream(seed, _ALG_STREAM)

    @property
    def samples_used(self) -> int:
        return self.log.samples_used

    @property
    def queries_used(self) -> int:
        return self.log.queries_used

    def _draw(self, count: int) -> np.ndarray:
        cap = self.budgets.max_samples
        if cap is not None and self.samples_used + count > cap:
            raise BudgetExceeded(f"sample budget {cap} exhausted")
        first = self.samples_used
        ordinals = np.arange(first, first + count)
        if first + count > len(self._atom_arr):
            grown = np.zeros(max(2 * len(self._atom_arr), first + count), dtype=np.int64)
            grown[:first] = self._atom_arr[:first]
            self._atom_arr = grown
        self._atom_arr[first:first + count] = self._atoms_at(ordinals)
        self.log.record_samples(first, count)
        return ordinals

    def _atoms_at(self, ordinals: np.ndarray) -> np.ndarray:
        # same values as atoms_for, with the most recent block of uniforms kept around
        if len(ordinals) <= 64 and ordinals[0] // _BLOCK == ordinals[-1] // _BLOCK:
            b = int(ordinals[0] // _BLOCK)
            if self._block is None or self._block[0] != b:
                self._block = (b, _stream(self._seed, _SAMPLE_STREAM, b).random(_BLOCK))
            u = self._block[1][ordinals % _BLOCK]
        else:
            u = sample_uniforms(self._seed, ordinals)
        idx = np.searchsorted(self._cdf, u, side="right")
        return np.minimum(idx, self._P.support_size - 1)

    def draw_sample(self) -> int:
        return int(self._draw(1)[0])

    def draw_samples(self, count: int) -> np.ndarray:
        """Draw ``count`` new samples at once; returns their handles."""
        return self._draw(count)

    def _answer(self, i: np.ndarray, j: np.ndarray) -> np.ndarray:
        if len(i) and (i.min() < 0 or i.max() >= self.samples_used):
            bad = i[(i < 0) | (i >= self.samples_used)][0]
            raise UnknownSample(f"no sample with handle {bad}")
        if len(j) and (j.min() < 1 or j.max() > self.n):
            bad = j[(j < 1) | (j > self.n)][0]
            raise IndexError(f"coordinate {bad} outside 1..{self.n}")
        cap = self.budgets.max_queries
        if cap is not None and self.queries_used + len(i) > cap:
            raise BudgetExceeded(f"query budget {cap} exhausted")
        return self._P.matrix[self._atom_arr[i], j - 1]

    def query(self, handle: int, j: int) -> int:
        handle, j = int(handle), int(j)
        if not 0 <= handle < self.samples_used:
            raise UnknownSample(f"no sample with handle {handle}")
        if not 1 <= j <= self.n:
            raise IndexError(f"coordinate {j} outside 1..{self.n}")
        cap = self.budgets.max_queries
        if cap is not None and self.queries_used + 1 > cap:
            raise BudgetExceeded(f"query budget {cap} exhausted")
        a = int(self._P.matrix[self._atom_arr[handle], j - 1])
        self.log.record_query(handle, j, a)
        return a

    def query_many(self, handles, coords) -> np.ndarray:
        """Answer a list of ``(handle, coordinate)`` pairs, recorded in the given order.

        Identical to issuing :meth:`query` for each pair in turn; callers use it
        when none of the pairs depends on another's answer.
        """
        i = np.asarray(handles, dtype=np.int64).ravel()
        j = np.asarray(coords, dtype=np.int64).ravel()
        if i.shape != j.shape:
            raise ValueError("handles and coordinates must pair up")
        a = self._answer(i, j)
        self.log.record_queries(i, j, a)
        return a


def open_session(P: DistributionSpec, seed: int, max_samples: int | None = None,
                 max_queries: int | None = None) -> OracleSession:
    return OracleSession(P, seed, Budgets(max_samples, max_queries))


def _pair_keys(i, j) -> np.ndarray:
    return np.asarray(i, dtype=np.int64) * (1 << 32) + np.asarray(j, dtype=np.int64)


class AnswerMap:
    """Answers of a bulk request, keyed by ``(sample id, coordinate)``.

    Pairs are held sorted and unique, which allows vectorized lookup.
    """

    def __init__(self, i: np.ndarray, j: np.ndarray, a: np.ndarray):
        self.i, self.j, self.a = i, j, a
        self._keys = _pair_keys(i, j)
        self._index = None

    def lookup(self, handles, coords) -> np.ndarray:
        """Answers for parallel arrays of pairs; every pair must be present."""
        keys = _pair_keys(handles, coords)
        pos = np.searchsorted(self._keys, keys)
        pos = np.minimum(pos, len(self._keys) - 1)
        if len(keys) and (len(self._keys) == 0 or not np.array_equal(self._keys[pos], keys)):
            raise KeyError("some pairs were not part of the request")
        return self.a[pos]

    def __len__(self) -> int:
        return len(self.i)

    def __getitem__(self, key: tuple[int, int]) -> int:
        if self._index is None:
            self._index = {(x, y): k for k, (x, y) in enumerate(zip(self.i.tolist(), self.j.tolist()))}
        return int(self.a[self._index[key]])

    def __contains__(self, key) -> bool:
        try:
            self[key]
        except KeyError:
            return False
        return True

    def items(self):
        return (((x, y), int(b)) for x, y, b in zip(self.i.tolist(), self.j.tolist(), self.a.tolist()))

    def as_dict(self) -> dict[tuple[int, int], int]:
        return dict(self.items())


def run_nonadaptive(session: OracleSession, query_set) -> AnswerMap:
    """Issue a whole query set in one step.

    ``query_set`` holds ``(sample id, coordinate)`` pairs (an iterable of pairs
    or a ``(k, 2)`` integer array). Samples up to the largest referenced id are
    drawn first; duplicate pairs are asked once.
    """
    pairs = np.asarray(list(query_set) if not isinstance(query_set, np.ndarray) else query_set, dtype=np.int64)
    if pairs.size == 0:
        empty = np.zeros(0, dtype=np.int64)
        return AnswerMap(empty, empty.copy(), np.zeros(0, dtype=np.uint8))
    pairs = pairs.reshape(-1, 2)
    if pairs[:, 0].min() < 0:
        raise UnknownSample("sample ids are non-negative")
    keys = np.unique(_pair_keys(pairs[:, 0], pairs[:, 1]))
    pairs = np.stack([keys >> 32, keys & 0xFFFFFFFF], axis=1)
    need = int(pairs[:, 0].max()) + 1 - session.samples_used
    if need > 0:
        cap_q = session.budgets.max_queries
        if cap_q is not None and session.queries_used + len(pairs) > cap_q:
            raise BudgetExceeded(f"query budget {cap_q} exhausted")
        session.draw_samples(need)
    a = session.query_many(pairs[:, 0], pairs[:, 1])
    return AnswerMap(pairs[:, 0], pairs[:, 1], a)
