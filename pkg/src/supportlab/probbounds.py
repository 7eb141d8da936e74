"""Tail bounds used by the testers' analysis, with Monte-Carlo checks.

Bounds are evaluated in log space so large expectations do not underflow.
A Monte-Carlo check counts as a violation only when the empirical frequency
exceeds the bound by more than three standard errors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.stats import binomtest

SIGMAS = 3.0


def chernoff_zero_bound(expectation: float) -> float:
    """Upper bound exp(-E[X]) on Pr[X = 0] for a sum of independent indicators."""
    if expectation < 0:
        raise ValueError("expectation must be nonnegative")
    return math.exp(-expectation)


def log_multiplicative_chernoff(expectation: float, delta: float, side: str = "lower") -> float:
    if expectation < 0:
        raise ValueError("expectation must be nonnegative")
    if side == "lower":
        if not 0 < delta < 1:
            raise ValueError("lower tail needs 0 < delta < 1")
        per = -delta - (1 - delta) * math.log1p(-delta)
    elif side == "upper":
        if not delta > 0:
            raise ValueError("upper tail needs delta > 0")
        per = delta - (1 + delta) * math.log1p(delta)
    else:
        raise ValueError(f"side must be 'lower' or 'upper', got {side!r}")
    return expectation * per


def multiplicative_chernoff(expectation: float, delta: float, side: str = "lower") -> float:
    """(e^-d / (1-d)^(1-d))^E for the lower tail, (e^d / (1+d)^(1+d))^E for the upper."""
    return math.exp(log_multiplicative_chernoff(expectation, delta, side))


def contribution(values: Sequence[float], flags: Sequence[bool], weights: Sequence[float] | None = None) -> float:
    """Ct[X | B]: the sum of weight * value over outcomes where B holds.

    Without weights the outcomes are treated as equally likely.
    """
    v = np.asarray(values, dtype=float)
    f = np.asarray(flags, dtype=bool)
    if len(v) == 0 and len(f) == 0:
        return 0.0
    w = np.full(len(v), 1 / len(v)) if weights is None else np.asarray(weights, dtype=float)
    if not (len(v) == len(f) == len(w)):
        raise ValueError("values, flags and weights must have equal length")
    return float(np.sum(w * v * f))


def exp_linearization_holds(n: int, p: float) -> bool:
    """1 - (1-p)^n >= n p / 2 on the range n >= 1, 0 <= p < 1/(2n)."""
    return -math.expm1(n * math.log1p(-p)) >= 0.5 * n * p - 1e-15


def exp_linearization_grid(n_max: int = 200, p_steps: int = 200) -> list[tuple[int, float]]:
    """Grid points in the admissible range where the inequality fails (expected: none)."""
    bad = []
    for n in range(1, n_max + 1):
        for k in range(p_steps):
            p = k / p_steps / (2 * n)
            if not exp_linearization_holds(n, p):
                bad.append((n, p))
    return bad


def wilson_interval(successes: int, trials: int, level: float = 0.95) -> tuple[float, float]:
    if trials <= 0:
        return (0.0, 1.0)
    ci = binomtest(int(successes), int(trials)).proportion_ci(confidence_level=level, method="wilson")
    return float(ci.low), float(ci.high)


@dataclass(frozen=True)
class TailBoundReport:
    name: str
    params: dict
    bound: float
    empirical: float
    trials: int
    stderr: float

    def __post_init__(self):
        if not 0 <= self.empirical <= 1:
            raise ValueError("empirical frequency must lie in [0, 1]")
        if self.trials < 1:
            raise ValueError("trials must be positive")

    @property
    def violated(self) -> bool:
        return self.empirical > self.bound + SIGMAS * self.stderr + 1e-12

    def row(self) -> dict:
        return {"bound_name": self.name, "params": ";".join(f"{k}={v}" for k, v in self.params.items()),
                "bound": f"{self.bound:.6g}", "empirical": f"{self.empirical:.6g}", "trials": self.trials,
                "stderr": f"{self.stderr:.3g}", "violated": self.violated}


def _report(name: str, params: dict, bound: float, hits: int, trials: int) -> TailBoundReport:
    f = hits / trials
    return TailBoundReport(name, params, bound, f, trials, math.sqrt(f * (1 - f) / trials))


def _bernoulli_sums(rng: np.random.Generator, ps: np.ndarray, trials: int, chunk: int = 20000) -> np.ndarray:
    out = np.empty(trials, dtype=np.int64)
    for lo in range(0, trials, chunk):
        hi = min(trials, lo + chunk)
        out[lo:hi] = (rng.random((hi - lo, len(ps))) < ps).sum(axis=1)
    return out


def validate_zero_bound(ps: Sequence[float], trials: int, rng: np.random.Generator) -> TailBoundReport:
    ps = np.asarray(ps, dtype=float)
    X = _bernoulli_sums(rng, ps, trials)
    return _report("pr-chernoff-zero", {"n": len(ps), "E": round(float(ps.sum()), 4)},
                   chernoff_zero_bound(float(ps.sum())), int((X == 0).sum()), trials)


def validate_multiplicative(ps: Sequence[float], delta: float, side: str, trials: int,
                            rng: np.random.Generator) -> TailBoundReport:
    ps = np.asarray(ps, dtype=float)
    E = float(ps.sum())
    X = _bernoulli_sums(rng, ps, trials)
    tail = X < (1 - delta) * E if side == "lower" else X > (1 + delta) * E
    return _report(f"chernoff-mult-{side}", {"n": len(ps), "E": round(E, 4), "delta": delta},
                   multiplicative_chernoff(E, delta, side), int(tail.sum()), trials)


@dataclass
class GoalSimulator:
    """A sequence of dependent trials with a goal set closed under extension.

    The goal is a predicate on the running success count (monotone, so once in
    the goal a sequence stays there). ``prob(i, hits, in_goal)`` gives the
    success probability of trial ``i`` and must be at least ``ps[i]`` whenever
    ``in_goal`` is false.
    """

    name: str
    ps: np.ndarray
    prob: Callable[[int, np.ndarray, np.ndarray], np.ndarray]
    goal: Callable[[np.ndarray], np.ndarray]
    params: dict = field(default_factory=dict)

    def run(self, rng: np.random.Generator, trials: int) -> tuple[np.ndarray, np.ndarray]:
        hits = np.zeros(trials, dtype=np.int64)
        in_goal = self.goal(hits)
        for i in range(len(self.ps)):
            pr = self.prob(i, hits, in_goal)
            if np.any(pr[~in_goal] < self.ps[i] - 1e-12):
                raise ValueError(f"simulator {self.name} breaks its lower bound at trial {i}")
            hits = hits + (rng.random(trials) < pr)
            in_goal = in_goal | self.goal(hits)
        return hits, in_goal


def independent_simulator(ps: Sequence[float]) -> GoalSimulator:
    ps = np.asarray(ps, dtype=float)
    return GoalSimulator("independent", ps, lambda i, h, g: np.full(len(h), ps[i]),
                         lambda h: np.zeros(len(h), dtype=bool), {"n": len(ps)})


def dropping_simulator(ps: Sequence[float], goal_hits: int, before: float | None = None,
                       after: float = 0.0) -> GoalSimulator:
    """Success probability ``max(p_i, before)`` until ``goal_hits`` successes, then ``after``."""
    ps = np.asarray(ps, dtype=float)

    def prob(i, h, g):
        base = ps[i] if before is None else max(ps[i], before)
        return np.where(g, after, base)

    return GoalSimulator("dropping", ps, prob, lambda h: h >= goal_hits,
                         {"n": len(ps), "goal_hits": goal_hits, "after": after})


def validate_goal_chernoff(sim: GoalSimulator, delta: float, trials: int, rng: np.random.Generator) -> TailBoundReport:
    """Estimate Pr[not in goal and X < (1-delta) sum p_i] against the lower-tail bound."""
    S = float(sim.ps.sum())
    X, in_goal = sim.run(rng, trials)
    bad = (~in_goal) & (X < (1 - delta) * S)
    return _report(f"chernoff-with-goal/{sim.name}", dict(sim.params, E=round(S, 4), delta=delta),
                   multiplicative_chernoff(S, delta, "lower"), int(bad.sum()), trials)


def validation_suite(seed: int = 0, trials: int = 100_000, configs: int = 20) -> list[TailBoundReport]:
    """Monte-Carlo checks of the zero-probability, multiplicative and goal-aware Chernoff
    bounds, plus the analytic grid check of the linearization inequality."""
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(4,))))
    reports: list[TailBoundReport] = []
    for _ in range(configs):
        n = int(rng.integers(1, 40))
        ps = rng.random(n) * rng.choice([0.1, 0.3, 1.0])
        reports.append(validate_zero_bound(ps, trials, rng))
    for _ in range(configs):
        n = int(rng.integers(5, 80))
        ps = rng.random(n)
        delta = float(rng.uniform(0.1, 0.9))
        reports.append(validate_multiplicative(ps, delta, "lower", trials, rng))
        reports.append(validate_multiplicative(ps, float(rng.uniform(0.1, 2.0)), "upper", trials, rng))
    for _ in range(configs // 2):
        n = int(rng.integers(10, 60))
        ps = rng.random(n) * 0.5
        delta = float(rng.uniform(0.2, 0.8))
        sims = [independent_simulator(ps),
                dropping_simulator(ps, goal_hits=1),
                dropping_simulator(ps, goal_hits=int(rng.integers(2, max(3, n // 4))), before=0.6)]
        for sim in sims:
            reports.append(validate_goal_chernoff(sim, delta, trials // 4, rng))
    bad = exp_linearization_grid()
    grid = 200 * 200
    reports.append(TailBoundReport("exp-linearization", {"n_max": 200, "p_steps": 200}, 0.0,
                                   len(bad) / grid, grid, 0.0))
    return reports
