"""Experiment configuration and the versioned result-row schema."""

from __future__ import annotations

import itertools
import json
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path

from ..adversary import FAMILIES
from ..testers import TESTERS
from ..testers.common import as_fraction

SCHEMA_VERSION = "1"

COLUMNS = (
    "schema_version", "family", "m", "eps", "n", "t", "seed", "tester", "verdict",
    "queries_used", "samples_used", "witness_valid", "verified_distance", "farness",
    "wall_time_ms", "error",
)


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class GridPoint:
    family: str
    m: int
    eps: Fraction
    n: int
    t: int | None


@dataclass
class ExperimentConfig:
    """A grid of instance parameters crossed with seeds and testers.

    ``seeds`` consecutive seeds starting at ``base_seed`` are used at every grid
    point; each tester sees the same sample stream for a given seed.
    """

    families: list[str]
    m: list[int]
    eps: list[str]
    n: list[int]
    t: list[int | None] = field(default_factory=lambda: [None])
    testers: list[str] = field(default_factory=lambda: ["nonadaptive", "adaptive"])
    base_seed: int = 0
    seeds: int = 1
    out: str | None = None
    figures_dir: str | None = None
    max_queries: int | None = None
    workers: int = 1
    timing: bool = False

    def __post_init__(self):
        if self.seeds < 1:
            raise ConfigError("seed count must be at least 1")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")
        for f in self.families:
            if f not in FAMILIES:
                raise ConfigError(f"unknown family {f!r}; choose from {', '.join(FAMILIES)}")
        for name in self.testers:
            if name not in TESTERS:
                raise ConfigError(f"unknown tester {name!r}; choose from {', '.join(TESTERS)}")
        if not self.testers:
            raise ConfigError("at least one tester is required")
        try:
            self.eps = [str(as_fraction(e)) for e in self.eps]
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigError(f"bad epsilon: {exc}") from None
        if not self.t:
            self.t = [None]

    def grid(self) -> list[GridPoint]:
        pts = itertools.product(self.families, self.m, self.eps, self.n, self.t)
        return [GridPoint(f, int(m), Fraction(e), int(n), None if t is None else int(t)) for f, m, e, n, t in pts]

    def seed_list(self) -> list[int]:
        return [self.base_seed + i for i in range(self.seeds)]

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        doc = dict(doc)
        if "family" in doc and "families" not in doc:
            fam = doc.pop("family")
            doc["families"] = [fam] if isinstance(fam, str) else fam
        known = set(cls.__dataclass_fields__)
        extra = set(doc) - known
        if extra:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(extra))}")
        missing = {"families", "m", "eps", "n"} - set(doc)
        if missing:
            raise ConfigError(f"missing config keys: {', '.join(sorted(missing))}")
        doc["eps"] = [str(e) for e in doc["eps"]]
        return cls(**doc)

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentConfig":
        try:
            doc = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
        return cls.from_dict(doc)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class ResultRow:
    family: str
    m: int
    eps: str
    n: int
    t: int | None
    seed: int
    tester: str
    verdict: str = ""
    queries_used: int | None = None
    samples_used: int | None = None
    witness_valid: bool | None = None
    verified_distance: str = ""
    farness: str = "unverified"
    wall_time_ms: float | None = None
    error: str = ""

    def csv_fields(self) -> dict:
        def cell(v):
            if v is None:
                return ""
            if isinstance(v, bool):
                return "true" if v else "false"
            if isinstance(v, float):
                return f"{v:.1f}"
            return str(v)

        d = {k: cell(v) for k, v in asdict(self).items()}
        d["schema_version"] = SCHEMA_VERSION
        return {c: d[c] for c in COLUMNS}
