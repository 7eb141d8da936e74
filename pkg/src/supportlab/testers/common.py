"""Shared plumbing for the testers: verdicts, witnesses, parameter helpers and
a query cache that keeps a tester from asking the same bit twice."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from ..oracle import OracleSession

ACCEPT = "accept"
REJECT = "reject"


def ceil_log(x: float) -> int:
    """``ceil(x)`` that ignores floating noise just above an integer."""
    return math.ceil(x - 1e-9)


def as_fraction(eps) -> Fraction:
    if isinstance(eps, Fraction):
        return eps
    if isinstance(eps, str):
        return Fraction(eps)
    return Fraction(eps).limit_denominator(10**12)


def check_params(m: int, eps) -> Fraction:
    if int(m) != m or m < 2:
        raise ValueError(f"m must be an integer >= 2, got {m}")
    e = as_fraction(eps)
    if not 0 < e < 1:
        raise ValueError(f"epsilon must lie in (0, 1), got {eps}")
    return e


def uniform_indices(rng: np.random.Generator, n: int, count: int) -> np.ndarray:
    """``count`` coordinates in 1..n, uniform and independent, with repetitions."""
    return rng.integers(1, n + 1, size=count, dtype=np.int64)


@dataclass(frozen=True)
class Witness:
    """Pairwise-distinguished samples, with the separating coordinate of each pair."""

    clique: tuple[int, ...]
    certificates: tuple[tuple[int, int, int], ...]

    def to_json(self) -> dict:
        return {"clique": list(self.clique), "certificates": [list(c) for c in self.certificates]}

    @classmethod
    def from_json(cls, obj: dict) -> "Witness":
        return cls(tuple(obj["clique"]), tuple(tuple(c) for c in obj["certificates"]))


@dataclass
class TesterVerdict:
    verdict: str
    queries: int
    samples: int
    witness: Witness | None = None
    tester: str = ""
    details: dict = field(default_factory=dict)

    @property
    def rejected(self) -> bool:
        return self.verdict == REJECT

    def to_json(self) -> dict:
        return {
            "verdict": self.verdict,
            "queries": self.queries,
            "samples": self.samples,
            "witness": self.witness.to_json() if self.witness else None,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json())


def finish(session: OracleSession, tester: str, witness: Witness | None, **details) -> TesterVerdict:
    return TesterVerdict(REJECT if witness else ACCEPT, session.queries_used, session.samples_used,
                         witness, tester, details)


class Prober:
    """Query access that remembers the bits of tracked samples.

    Samples that may be queried again (the distinguished set, the sample being
    routed) are tracked; fresh batch samples are queried once in bulk and only
    remembered if they are kept.
    """

    def __init__(self, session: OracleSession):
        self.session = session
        self.n = session.n
        self.rng = session.rng
        self.known: dict[int, dict[int, int]] = {}

    def bits(self, handle: int, coords: Sequence[int]) -> np.ndarray:
        """Bits of one sample at ``coords`` (in the given order), querying only unknown ones."""
        mem = self.known.setdefault(int(handle), {})
        missing = sorted({int(j) for j in coords if int(j) not in mem})
        if missing:
            ans = self.session.query_many(np.full(len(missing), handle), missing)
            mem.update(zip(missing, ans.tolist()))
        return np.fromiter((mem[int(j)] for j in coords), dtype=np.uint8, count=len(coords))

    def bit(self, handle: int, j: int) -> int:
        mem = self.known.setdefault(int(handle), {})
        j = int(j)
        if j not in mem:
            mem[j] = self.session.query(handle, j)
        return mem[j]

    def fresh(self, handles: np.ndarray, coords: np.ndarray) -> np.ndarray:
        """Query never-seen samples at ``coords``; rows follow ``handles``, columns follow ``coords``.

        Each sample is queried once per distinct coordinate.
        """
        uniq, inv = np.unique(coords, return_inverse=True)
        hh = np.repeat(handles, len(uniq))
        jj = np.tile(uniq, len(handles))
        ans = self.session.query_many(hh, jj).reshape(len(handles), len(uniq))
        return ans[:, inv]

    def remember(self, handle: int, coords, values):
        mem = self.known.setdefault(int(handle), {})
        mem.update(zip((int(j) for j in coords), (int(v) for v in values)))

    def certificate(self, x: int, y: int) -> int | None:
        """Smallest coordinate known on both samples where they differ."""
        kx, ky = self.known.get(x, {}), self.known.get(y, {})
        common = sorted(set(kx) & set(ky))
        return next((j for j in common if kx[j] != ky[j]), None)

    def witness(self, members: Sequence[int]) -> Witness:
        members = tuple(int(x) for x in members)
        certs = []
        for a in range(len(members)):
            for b in range(a + 1, len(members)):
                j = self.certificate(members[a], members[b])
                if j is None:
                    raise AssertionError(f"samples {members[a]} and {members[b]} were never separated")
                certs.append((members[a], members[b], j))
        return Witness(members, tuple(certs))
