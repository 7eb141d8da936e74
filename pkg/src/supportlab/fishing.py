"""The fishing expedition: repeat a subroutine until ``k`` successes, or stop
early at a checkpoint once the observed success rate is below ``p/2``.

The subroutine is a black box returning an outcome, where ``0``/``None``/``False``
means failure. Its stochastic contract (failures do not change the future
success probability, successes never raise it) is the caller's responsibility.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

_EPS = 1e-9


class StopReason(str, enum.Enum):
    GOAL = "goal"
    FUTILITY = "futility"


@dataclass(frozen=True)
class FishingParams:
    k: int
    p: float
    q: float

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 1:
            raise ValueError(f"goal k must be a positive integer, got {self.k}")
        if not 0 < self.p <= 1:
            raise ValueError(f"threshold p must lie in (0, 1], got {self.p}")
        if not 0 < self.q < 1:
            raise ValueError(f"confidence q must lie in (0, 1), got {self.q}")

    @property
    def log_term(self) -> float:
        """log2(1/q) + log2(log2 k + 1)."""
        return math.log2(1 / self.q) + math.log2(math.log2(self.k) + 1)

    def termination_bound(self, H: int) -> float:
        """The largest execution count a run ending with ``H`` successes may report."""
        return (4 * H + 5 * self.log_term) / self.p + 1


def _checkpoint(params: FishingParams, t: int) -> int:
    return math.ceil(max(2.0**t, 5 * params.log_term) / params.p - _EPS)


def checkpoint_schedule(params: FishingParams) -> list[tuple[int, int]]:
    """Checkpoints ``(t, N_t)`` in execution order.

    ``t`` runs from 2 to ``floor(log2 k + 1)`` as written. That range can end
    before the futility test is forced (for ``k = 1`` it is empty, and when
    ``k`` is not a power of two the last ``2^t`` can fall short of ``2k``), so
    the doubling schedule is continued until a run that has not reached the
    goal must fail the test at the last checkpoint.
    """
    t_max = math.floor(math.log2(params.k) + 1 + _EPS)
    sched = [(t, _checkpoint(params, t)) for t in range(2, max(t_max, 2) + 1)]
    while params.k - 1 >= 0.5 * params.p * sched[-1][1]:
        t = sched[-1][0] + 1
        sched.append((t, _checkpoint(params, t)))
    return sched


def is_failure(outcome: Any) -> bool:
    if outcome is None or outcome is False:
        return True
    return isinstance(outcome, (int, np.integer)) and not isinstance(outcome, bool) and outcome == 0


@dataclass
class FishingOutcome:
    N: int
    H: int
    results: list = field(default_factory=list)
    stop_reason: StopReason = StopReason.FUTILITY
    checkpoint: int | None = None

    @property
    def successes(self) -> list:
        return [r for r in self.results if not is_failure(r)]


class UnreachablePoint(AssertionError):
    pass


def run_fishing(params: FishingParams, subroutine: Callable[[], Any]) -> FishingOutcome:
    out = FishingOutcome(0, 0)
    for t, N_t in checkpoint_schedule(params):
        while out.N < N_t:
            r = subroutine()
            out.N += 1
            out.results.append(r)
            if not is_failure(r):
                out.H += 1
                if out.H == params.k:
                    out.stop_reason = StopReason.GOAL
                    out.checkpoint = t
                    return out
        if out.H < 0.5 * params.p * N_t:
            out.stop_reason = StopReason.FUTILITY
            out.checkpoint = t
            return out
    raise UnreachablePoint(f"fishing run passed its last checkpoint with H={out.H}, N={out.N}")


def simulate_many(params: FishingParams, prob_by_hits: Sequence[float], uniforms: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Run many fishing expeditions at once over Markov success probabilities.

    Execution ``N`` of run ``r`` succeeds iff ``uniforms[r, N-1] < prob_by_hits[H]``
    where ``H`` is the success count so far, which is the same rule a scalar
    :func:`run_fishing` run sees when fed the same uniforms. Returns ``(N, H,
    goal_reached)`` arrays. ``uniforms`` needs as many columns as the last
    checkpoint. ``prob_by_hits`` may also be a ``(runs, k+1)`` array giving each
    run its own profile.
    """
    sched = checkpoint_schedule(params)
    last = sched[-1][1]
    if uniforms.shape[1] < last:
        raise ValueError(f"need {last} uniforms per run, got {uniforms.shape[1]}")
    runs = uniforms.shape[0]
    probs = np.asarray(prob_by_hits, dtype=float)
    if probs.ndim == 1:
        probs = np.broadcast_to(probs, (runs, len(probs)))
    if probs.shape[1] < params.k + 1:
        probs = np.pad(probs, ((0, 0), (0, params.k + 1 - probs.shape[1])))
    H = np.zeros(runs, dtype=np.int64)
    N = np.zeros(runs, dtype=np.int64)
    alive = np.ones(runs, dtype=bool)
    goal = np.zeros(runs, dtype=bool)
    done_at = 0
    for _, N_t in sched:
        for step in range(done_at, N_t):
            idx = np.flatnonzero(alive)
            if len(idx) == 0:
                break
            hit = uniforms[idx, step] < probs[idx, H[idx]]
            H[idx] += hit
            N[idx] = step + 1
            reached = idx[H[idx] == params.k]
            goal[reached] = True
            alive[reached] = False
        done_at = N_t
        stop = alive & (H < 0.5 * params.p * N_t)
        alive &= ~stop
    if alive.any():
        raise UnreachablePoint("simulated run passed its last checkpoint")
    return N, H, goal
