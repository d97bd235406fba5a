"""Progressive-redaction plans and repair-by-subsampling.

Random plans use SplitMix64 (Steele, Lea & Flood 2014) seeded with the
user's 64-bit seed, an unbiased bounded draw by rejection, and a
descending Fisher-Yates shuffle over the ids in ascending order. Every
random plan is a prefix of that one permutation, so plans nest by fraction
and are reproducible in any language.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

MASK64 = (1 << 64) - 1


class SplitMix64:
    def __init__(self, seed: int):
        if not 0 <= seed <= MASK64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        self.state = seed

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)

    def below(self, n: int) -> int:
        """Uniform integer in [0, n)."""
        if n <= 0:
            raise ValueError("n must be positive")
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            x = self.next_u64()
            if x < limit:
                return x % n


def seeded_permutation(ids: Iterable[str], seed: int) -> list[str]:
    out = sorted(ids)
    rng = SplitMix64(seed)
    for i in range(len(out) - 1, 0, -1):
        j = rng.below(i + 1)
        out[i], out[j] = out[j], out[i]
    return out


@dataclass(frozen=True)
class Random:
    seed: int

    def __post_init__(self):
        if not isinstance(self.seed, int) or not 0 <= self.seed <= MASK64:
            raise ValueError("RANDOM needs an explicit unsigned 64-bit seed")


CONTENT_LOW_FIRST = "content-low"
CONTENT_HIGH_FIRST = "content-high"
CONTENT = "content"


@dataclass(frozen=True)
class Plan:
    selected: tuple[str, ...]
    fraction: float

    def __contains__(self, rid: str) -> bool:
        return rid in self.selected


def plan_size(fraction: float, n: int) -> int:
    if not 0 <= fraction <= 1:
        raise ValueError("fraction must be within [0, 1]")
    return min(n, math.floor(fraction * n + 0.5))


def _score(v) -> float:
    return getattr(v, "count", v)


def low_first(scores: Mapping[str, object]) -> list[str]:
    return sorted(scores, key=lambda rid: (_score(scores[rid]), rid))


def high_first(scores: Mapping[str, object]) -> list[str]:
    return sorted(scores, key=lambda rid: (-_score(scores[rid]), rid))


def progressive_plan(scores: Mapping[str, object], fraction: float, strategy) -> Plan:
    """Records to redact for one point of a progressive-redaction curve."""
    k = plan_size(fraction, len(scores))
    if isinstance(strategy, Random):
        order = seeded_permutation(scores, strategy.seed)
    elif strategy == CONTENT_LOW_FIRST:
        order = low_first(scores)
    elif strategy == CONTENT_HIGH_FIRST:
        order = high_first(scores)
    else:
        raise ValueError(f"unknown sampling strategy {strategy!r}")
    return Plan(tuple(order[:k]), fraction)


def repair_subsample(scores: Mapping[str, object], keep_fraction: float, strategy) -> Plan:
    """Records to keep from an already-redacted corpus; CONTENT drops high scorers first."""
    k = plan_size(keep_fraction, len(scores))
    if isinstance(strategy, Random):
        order = seeded_permutation(scores, strategy.seed)
    elif strategy == CONTENT:
        order = low_first(scores)
    else:
        raise ValueError(f"unknown repair strategy {strategy!r}")
    return Plan(tuple(order[:k]), keep_fraction)


def parse_strategy(name: str, seed: int | None = None):
    name = name.lower()
    if name == "random":
        if seed is None:
            raise ValueError("the random strategy requires --seed")
        return Random(seed)
    if name in (CONTENT_LOW_FIRST, CONTENT_HIGH_FIRST, CONTENT):
        return name
    raise ValueError(f"unknown strategy {name!r}")


def strategy_tag(strategy) -> str:
    return "random" if isinstance(strategy, Random) else str(strategy)


def emit_curve(points: Sequence[tuple[float, float, str]]) -> str:
    rows = sorted(points, key=lambda p: (p[2], p[0]))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["fraction", "score", "strategy"])
    for fraction, score, tag in rows:
        if not 0 <= fraction <= 1:
            raise ValueError(f"fraction {fraction} outside [0, 1]")
        w.writerow([f"{fraction:.4f}", f"{score:.4f}", tag])
    return buf.getvalue()
