"""Hard-instance generators with ground-truth metadata.

Every generator is seed-deterministic and returns exact (rational) weights.
Farness is never taken on faith: :func:`verify` runs the exact oracle and
records the distance, and instances that are not far are tagged so that
soundness statistics can skip them.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Sequence

import numpy as np

from .bitdist import (ORACLE_MAX_ATOMS, BitString, DistributionSpec, distance_to_support_m,
                      hamming_distance)
from .testers.common import as_fraction

_GEN_STREAM = 3


class ParameterRange(ValueError):
    pass


class ConstructionFailed(RuntimeError):
    pass


def _rng(seed: int, *extra: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(seed) & (2**64 - 1), spawn_key=(_GEN_STREAM, *extra))
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class GroundTruthInstance:
    distribution: DistributionSpec
    family: str
    params: dict = field(default_factory=dict)
    claimed_far_from_m: tuple[int, Fraction] | None = None
    verified_distance: Fraction | None = None

    @property
    def farness(self) -> str:
        """``far``, ``not-far`` or ``unverified`` for the claimed ``(m, eps)``."""
        if self.claimed_far_from_m is None or self.verified_distance is None:
            return "unverified"
        return "far" if self.verified_distance > self.claimed_far_from_m[1] else "not-far"

    def metadata(self) -> dict:
        claim = self.claimed_far_from_m
        return {
            "family": self.family,
            "params": {k: _jsonable(v) for k, v in self.params.items()},
            "claimed_far_from_m": None if claim is None else {"m": claim[0], "eps": str(claim[1])},
            "verified_distance": None if self.verified_distance is None else str(self.verified_distance),
            "farness": self.farness,
        }


def _jsonable(v):
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.integer):
        return int(v)
    return v


def verify(inst: GroundTruthInstance, m: int | None = None, eps=None) -> GroundTruthInstance:
    """Attach the exact distance to S_m; skipped when the support exceeds the oracle guard."""
    if m is None:
        if inst.claimed_far_from_m is None:
            raise ValueError("no (m, eps) to verify against")
        m, eps = inst.claimed_far_from_m
    claim = (m, as_fraction(eps)) if eps is not None else inst.claimed_far_from_m
    if inst.distribution.support_size > ORACLE_MAX_ATOMS:
        return replace(inst, claimed_far_from_m=claim, verified_distance=None)
    d = distance_to_support_m(inst.distribution, m).value
    return replace(inst, claimed_far_from_m=claim, verified_distance=Fraction(d))


def _bits(arr) -> BitString:
    return BitString.from_array(np.asarray(arr, dtype=np.uint8))


def dno_alpha_range(eps) -> list[int]:
    """Admissible values of log2(1/alpha)."""
    e = as_fraction(eps)
    top = math.floor(math.log2(float(1 / e)) + 1e-12) - 2
    return list(range(2, top + 1))


def gen_dno(t: int, eps, n: int, seed: int) -> GroundTruthInstance:
    """Zero with mass 1 - 2eps/alpha and t random subsets of a random support set D."""
    if t < 1:
        raise ParameterRange("t must be at least 1")
    e = as_fraction(eps)
    choices = dno_alpha_range(e)
    if not choices:
        raise ParameterRange(f"eps={e} too large: need floor(log2 1/eps) - 2 >= 2")
    rng = _rng(seed, 1)
    log_inv_alpha = int(rng.choice(choices))
    alpha = Fraction(1, 2**log_inv_alpha)
    D = rng.random(n) < float(4 * alpha)
    sets = [(D & (rng.random(n) < 0.5)) for _ in range(t)]
    heavy = 2 * e / alpha
    pairs = [(BitString.zeros(n), 1 - heavy)] + [(_bits(A), heavy / t) for A in sets]
    P = DistributionSpec.from_pairs([(x, w) for x, w in pairs if w > 0], n=n, merge=True)
    return GroundTruthInstance(P, "dno", {"t": t, "eps": e, "n": n, "seed": seed, "alpha": alpha,
                                          "D_size": int(D.sum())})


def gen_anchor(m: int, eps, n: int, seed: int) -> GroundTruthInstance:
    """Zero with mass 1 - 10 eps and 2m uniform strings of mass 5 eps / m each."""
    e = as_fraction(eps)
    if 10 * e > 1 or e <= 0:
        raise ParameterRange("need 0 < 10*eps <= 1")
    if m < 1:
        raise ParameterRange("m must be positive")
    rng = _rng(seed, 2)
    pairs = [(BitString.zeros(n), 1 - 10 * e)] + [(_bits(rng.integers(0, 2, n)), 5 * e / m) for _ in range(2 * m)]
    P = DistributionSpec.from_pairs([(x, w) for x, w in pairs if w > 0], n=n, merge=True)
    return GroundTruthInstance(P, "anchor", {"m": m, "eps": e, "n": n, "seed": seed},
                               claimed_far_from_m=(m, e))


def _rank2(M: np.ndarray) -> int:
    """Rank over GF(2) of a 0/1 matrix."""
    A = M.copy() % 2
    r = 0
    for c in range(A.shape[1]):
        piv = np.flatnonzero(A[r:, c])
        if len(piv) == 0:
            continue
        p = r + piv[0]
        A[[r, p]] = A[[p, r]]
        rows = np.flatnonzero(A[:, c])
        rows = rows[rows != r]
        A[rows] ^= A[r]
        r += 1
        if r == A.shape[0]:
            break
    return r


def _columns_independent(G: np.ndarray, t: int) -> bool:
    """Every set of at most t columns of G is linearly independent over GF(2)."""
    cols = [int("".join(map(str, G[:, j])), 2) for j in range(G.shape[1])]
    for size in range(1, t + 1):
        for combo in itertools.combinations(cols, size):
            acc = 0
            for c in combo:
                acc ^= c
            if acc == 0:
                return False
    return True


def _draw_generator(rng: np.random.Generator, k: int, n: int, t: int) -> np.ndarray | None:
    """A random k x n generator whose columns are nonzero (distinct when t >= 2), or None."""
    if k == 0:
        return np.zeros((0, n), dtype=np.uint8)
    nonzero = np.arange(1, 2**k)
    if t >= 2:
        if n > len(nonzero):
            return None
        cols = rng.choice(nonzero, size=n, replace=False)
    else:
        cols = rng.choice(nonzero, size=n, replace=True)
    G = ((cols[None, :] >> np.arange(k)[:, None]) & 1).astype(np.uint8)
    if _rank2(G) < k or not _columns_independent(G, t):
        return None
    return G


def _span(G: np.ndarray) -> np.ndarray:
    k = G.shape[0]
    coeffs = np.array(list(itertools.product([0, 1], repeat=k)), dtype=np.uint8)
    return (coeffs @ G) % 2


def restriction_multisets_agree(H0: Sequence[BitString], H1: Sequence[BitString], t: int) -> bool:
    """Exhaustively compare the multisets of restrictions to every index set of size <= t."""
    A = np.array([h.array() for h in H0], dtype=np.uint8)
    B = np.array([h.array() for h in H1], dtype=np.uint8)
    n = A.shape[1]
    for size in range(1, t + 1):
        for I in itertools.combinations(range(n), size):
            idx = list(I)
            if Counter(map(bytes, A[:, idx])) != Counter(map(bytes, B[:, idx])):
                return False
    return True


def secret_ensemble_ok(H0, H1, delta, zeta) -> bool:
    n = H0[0].n
    t = math.floor(as_fraction(zeta) * n)
    allx = list(H0) + list(H1)
    if len(H0) != len(H1) or len(set(allx)) != len(allx):
        return False
    d = as_fraction(delta)
    if any(hamming_distance(u, v) <= d for u, v in itertools.combinations(allx, 2)):
        return False
    return restriction_multisets_agree(H0, H1, t)


def gen_secret_ensemble(n: int, target: int, delta, zeta, seed: int,
                        attempts: int = 2000) -> tuple[tuple[BitString, ...], tuple[BitString, ...]]:
    """Two families of ``target`` strings each, built as unions of cosets of a linear code.

    If every ``t = floor(zeta n)`` columns of the code's generator matrix are
    independent, each coset restricted to at most ``t`` coordinates is uniform,
    so the two families cannot be told apart by so few coordinates. The code
    dimension ``k`` is the largest with ``2^k`` dividing ``target``; each side
    gets ``target / 2^k`` cosets. Returned ensembles are fully re-verified.
    """
    if n > 24:
        raise ParameterRange("exhaustive verification is limited to n <= 24")
    if target < 1:
        raise ParameterRange("target must be positive")
    t = math.floor(as_fraction(zeta) * n)
    d = as_fraction(delta)
    k = 0
    while target % (2 ** (k + 1)) == 0:
        k += 1
    if t >= 1 and k == 0:
        raise ConstructionFailed("odd target cannot hide anything: need a code of dimension >= 1")
    per_side = target // 2**k
    rng = _rng(seed, 4)
    for _ in range(attempts):
        G = _draw_generator(rng, k, n, t)
        if G is None:
            continue
        C = _span(G) if k else np.zeros((1, n), dtype=np.uint8)
        reps = rng.integers(0, 2, size=(2 * per_side, n), dtype=np.uint8)
        fams = [((C + r) % 2) for r in reps]
        H0 = tuple(_bits(x) for f in fams[:per_side] for x in f)
        H1 = tuple(_bits(x) for f in fams[per_side:] for x in f)
        allx = H0 + H1
        if len(set(allx)) != len(allx):
            continue
        if any(hamming_distance(u, v) <= d for u, v in itertools.combinations(allx, 2)):
            continue
        if restriction_multisets_agree(H0, H1, t):
            return H0, H1
    raise ConstructionFailed(f"no ensemble for n={n}, target={target}, delta={d}, zeta={zeta} in {attempts} attempts")


def gen_secret_instance(H0: Sequence[BitString], H1: Sequence[BitString], eps, delta) -> GroundTruthInstance:
    """Common family H0 shares the mass 1 - 4 eps/delta; the rare family H1 shares 4 eps/delta."""
    e, d = as_fraction(eps), as_fraction(delta)
    if not e < d / 4:
        raise ParameterRange("need eps < delta/4")
    if len(H0) != len(H1) or not H0:
        raise ParameterRange("families must be nonempty and of equal size")
    size = len(H0)
    m = Fraction(3 * size, 2)
    if m.denominator != 1:
        raise ParameterRange("family size must be 2m/3 for an integer m")
    rare = 4 * e / d
    pairs = [(x, (1 - rare) / size) for x in H0] + [(x, rare / size) for x in H1]
    P = DistributionSpec.from_pairs(pairs)
    return GroundTruthInstance(P, "secret", {"eps": e, "delta": d, "family_size": size},
                               claimed_far_from_m=(int(m), e))


def repetition_lift(P: DistributionSpec, ell: int) -> DistributionSpec:
    """Replace each atom by its ell-fold concatenation; weights unchanged."""
    if ell < 1:
        raise ParameterRange("ell must be positive")
    return DistributionSpec(P.n * ell, tuple((BitString(x.bits * ell), w) for x, w in P.atoms))


def lift_instance(inst: GroundTruthInstance, ell: int) -> GroundTruthInstance:
    params = dict(inst.params, lift=ell)
    return replace(inst, distribution=repetition_lift(inst.distribution, ell), params=params,
                   verified_distance=None)


def gen_secret_lifted(m: int, eps, n_base: int, ell: int, seed: int, delta=Fraction(2, 5),
                      zeta=Fraction(1, 12)) -> GroundTruthInstance:
    """Desk-scale secret-sharing instance: a small verified ensemble lifted to length n_base*ell."""
    if m % 3:
        raise ParameterRange("m must be divisible by 3")
    H0, H1 = gen_secret_ensemble(n_base, 2 * m // 3, delta, zeta, seed)
    inst = gen_secret_instance(H0, H1, eps, delta)
    inst = replace(inst, params=dict(inst.params, n_base=n_base, zeta=as_fraction(zeta), seed=seed))
    return lift_instance(inst, ell)


def _random_weights(rng: np.random.Generator, k: int, scale: int = 64) -> list[Fraction]:
    raw = rng.integers(1, scale + 1, size=k)
    total = int(raw.sum())
    return [Fraction(int(r), total) for r in raw]


def gen_support_m(m: int, n: int, seed: int) -> GroundTruthInstance:
    """In-property instances: at most m atoms, mixing unrelated strings with near-duplicates."""
    rng = _rng(seed, 5)
    size = int(rng.integers(1, m + 1))
    base = rng.integers(0, 2, n, dtype=np.uint8)
    atoms = []
    for _ in range(size):
        if atoms and rng.random() < 0.5:
            # a close relative of an earlier atom
            x = atoms[int(rng.integers(len(atoms)))].copy()
            flips = rng.integers(0, n, size=int(rng.integers(1, 4)))
            x[flips] ^= 1
        elif rng.random() < 0.3:
            x = base.copy()
        else:
            x = rng.integers(0, 2, n, dtype=np.uint8)
        atoms.append(x)
    ws = _random_weights(rng, size)
    P = DistributionSpec.from_pairs([(_bits(x), w) for x, w in zip(atoms, ws)], n=n, merge=True)
    return GroundTruthInstance(P, "support_m", {"m": m, "n": n, "seed": seed})


def gen_cluster(m: int, eps, n: int, seed: int, extra: int = 2, rho=None,
                far: int | None = None) -> GroundTruthInstance:
    """``far`` (default m+1) far strings plus small perturbations of the first one.

    The perturbations sit at relative distance ``rho`` (default ``1/(4m)``) from
    their center. With ``far = m`` the far strings alone do not leave S_m, so the
    instance is far only through the perturbations.
    """
    e = as_fraction(eps)
    rng = _rng(seed, 6)
    rho = as_fraction(rho) if rho is not None else Fraction(1, 4 * m)
    flips = max(1, round(float(rho) * n))
    far = m + 1 if far is None else far
    if far < 1:
        raise ParameterRange("need at least one far string")
    centers = [rng.integers(0, 2, n, dtype=np.uint8) for _ in range(far)]
    near = []
    for _ in range(extra):
        x = centers[0].copy()
        x[rng.choice(n, size=flips, replace=False)] ^= 1
        near.append(x)
    w_near = min(Fraction(1, 2), 4 * e / rho) if extra else Fraction(0)
    w_far = (1 - w_near) / far
    pairs = [(_bits(c), w_far) for c in centers] + [(_bits(x), w_near / extra) for x in near]
    P = DistributionSpec.from_pairs(pairs, n=n, merge=True)
    return GroundTruthInstance(P, "cluster", {"m": m, "eps": e, "n": n, "seed": seed, "extra": extra,
                                              "rho": rho, "far": far}, claimed_far_from_m=(m, e))


def generate(family: str, *, m: int, eps, n: int, seed: int, t: int | None = None) -> GroundTruthInstance:
    """Dispatch by family name with the harness's parameter set."""
    e = as_fraction(eps)
    if family == "dno":
        inst = gen_dno(t if t is not None else 2 * m, e, n, seed)
        return replace(inst, claimed_far_from_m=(m, e))
    if family == "anchor":
        return gen_anchor(m, e, n, seed)
    if family == "secret":
        n_base = 16
        if n % n_base:
            raise ParameterRange(f"secret instances need n divisible by {n_base}")
        return gen_secret_lifted(m, e, n_base, n // n_base, seed)
    if family == "support_m":
        return gen_support_m(m, n, seed)
    if family == "cluster":
        return gen_cluster(m, e, n, seed)
    raise ParameterRange(f"unknown family {family!r}")


FAMILIES = ("dno", "anchor", "secret", "support_m", "cluster")
