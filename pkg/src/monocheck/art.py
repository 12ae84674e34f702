"""Adaptive random testing over precondition pairs.

Test cases are pairs (x, x'); the generator spreads them out under a
pair distance that blends how much the pair lengths differ with how far
apart the pair midpoints sit:

    dist(p, q) = |len(p) - len(q)| / 2 + ||mid(p) - mid(q)|| / 2

with len the Euclidean distance within a pair and mid its midpoint.
Swapping a pair or sliding it along its own direction can leave the
distance at zero, so this is a pseudometric; non-negativity, symmetry,
and the triangle inequality hold, positive definiteness does not.

Distances use raw feature units (no normalization), so features on
large scales dominate the spread.

Generation: seed the test set with ini_samples random distinct pairs,
then repeatedly draw a pool of pool_size distinct candidates and keep
the one farthest (max-min distance) from the set so far. Ties keep the
first candidate at the maximum, which also covers the all-zero edge
case. Checking evaluates the model pair by pair in generation order.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .core import (
    VALIDATED,
    ConfigError,
    CounterExample,
    FeatureSpace,
    GenerationError,
    InputError,
    Instance,
    ModelUnderTest,
    MonotonicityConstraint,
    Rng,
    is_violation,
    make_rng,
    predict_checked,
)
from .datasets import sample_successor, sample_uniform
from .reporting import VERDICT_NO_CEX, VERDICT_NON_MONOTONE, TestReport

# retries per generated slot before giving up on a degenerate space
_RETRY_CAP = 1000


class TestPair(NamedTuple):
    x: Instance
    x_prime: Instance

    __test__ = False  # not a test case, despite the name (pytest)


@dataclass(frozen=True)
class ArtConfig:
    seed: int
    ini_samples: int = 100
    pool_size: int = 50
    max_samples: int = 1000
    stop_at_first: bool = True

    def __post_init__(self) -> None:
        if not isinstance(self.seed, int) or isinstance(self.seed, bool) or self.seed < 0:
            raise ConfigError("seed must be a non-negative integer")
        if self.pool_size < 1:
            raise ConfigError("pool_size must be >= 1")
        if self.ini_samples < 1:
            raise ConfigError("ini_samples must be >= 1")
        if self.ini_samples > self.max_samples:
            raise ConfigError("ini_samples cannot exceed max_samples")


def pair_distance(p: TestPair, q: TestPair) -> float:
    """See the module docstring for the formula."""
    n = len(p.x)
    if not len(p.x_prime) == len(q.x) == len(q.x_prime) == n:
        raise InputError("pair instances differ in dimension")
    len_p = math.dist(p.x, p.x_prime)
    len_q = math.dist(q.x, q.x_prime)
    mid_gap = math.dist(
        [(a + b) / 2 for a, b in zip(p.x, p.x_prime)],
        [(a + b) / 2 for a, b in zip(q.x, q.x_prime)],
    )
    return abs(len_p - len_q) / 2 + mid_gap / 2


def min_distance(cand: TestPair, ts) -> float:
    """Distance from cand to its nearest member of ts."""
    best = math.inf
    for t in ts:
        d = pair_distance(cand, t)
        if d < best:
            best = d
    if best is math.inf:
        raise InputError("min_distance needs a non-empty test set")
    return best


def _draw_pair(
    c: MonotonicityConstraint, space: FeatureSpace, rng: Rng,
    seen: set[TestPair],
) -> TestPair:
    """One precondition pair not in seen; bounded retries."""
    for _ in range(_RETRY_CAP):
        x = sample_uniform(space, rng)
        try:
            x_prime = sample_successor(x, c, space, rng)
        except GenerationError:
            continue  # x had no distinct successor; redraw it
        pair = TestPair(x, x_prime)
        if pair not in seen:
            return pair
    raise GenerationError(
        f"no fresh precondition pair after {_RETRY_CAP} draws "
        "(space too small for the requested test count?)"
    )


class _PairArena:
    """Incremental pair-norm and midpoint arrays for fast min-distance."""

    def __init__(self, n_features: int, capacity: int) -> None:
        self._norms = np.empty(capacity)
        self._mids = np.empty((capacity, n_features))
        self._len = 0

    def add(self, pair: TestPair) -> None:
        a = np.asarray(pair.x, dtype=float)
        b = np.asarray(pair.x_prime, dtype=float)
        self._norms[self._len] = np.linalg.norm(a - b)
        self._mids[self._len] = (a + b) / 2
        self._len += 1

    def farthest(self, pool: list[TestPair]) -> int:
        """Index of the pool pair with the largest min-distance to the
        arena; first index on ties."""
        a = np.asarray([p.x for p in pool], dtype=float)
        b = np.asarray([p.x_prime for p in pool], dtype=float)
        norms = np.linalg.norm(a - b, axis=1)
        mids = (a + b) / 2
        tn = self._norms[: self._len]
        tm = self._mids[: self._len]
        gaps = np.linalg.norm(mids[:, None, :] - tm[None, :, :], axis=2)
        dist = np.abs(norms[:, None] - tn[None, :]) / 2 + gaps / 2
        return int(np.argmax(dist.min(axis=1)))


def art_gen(
    c: MonotonicityConstraint, space: FeatureSpace, cfg: ArtConfig, rng: Rng
) -> list[TestPair]:
    """The full max_samples test set, in insertion order."""
    c.check_against(space)
    seen: set[TestPair] = set()
    ts: list[TestPair] = []
    arena = _PairArena(space.n_features, cfg.max_samples)

    def take(pair: TestPair) -> None:
        seen.add(pair)
        ts.append(pair)
        arena.add(pair)

    for _ in range(cfg.ini_samples):
        take(_draw_pair(c, space, rng, seen))
    while len(ts) < cfg.max_samples:
        for _ in range(_RETRY_CAP):
            pool: list[TestPair] = []
            pool_seen: set[TestPair] = set()
            for _ in range(cfg.pool_size):
                cand = _draw_pair(c, space, rng, pool_seen)
                pool_seen.add(cand)
                pool.append(cand)
            chosen = pool[arena.farthest(pool)]
            if chosen not in seen:
                take(chosen)
                break
        else:
            raise GenerationError(
                "candidate selection stagnated; space exhausted?"
            )
    return ts


def art_test(
    m: ModelUnderTest, c: MonotonicityConstraint, space: FeatureSpace,
    cfg: ArtConfig,
) -> TestReport:
    """Generate the diversified test set, then check it in order."""
    started = time.perf_counter()
    rng = make_rng(cfg.seed)
    ts = art_gen(c, space, cfg, rng)
    validated: list[CounterExample] = []
    first_hit: int | None = None
    for i, pair in enumerate(ts):
        y = predict_checked(m, pair.x, space)
        y_prime = predict_checked(m, pair.x_prime, space)
        if is_violation(y, y_prime):
            validated.append(
                CounterExample(pair.x, pair.x_prime, y, y_prime, VALIDATED)
            )
            if first_hit is None:
                first_hit = i
            if cfg.stop_at_first:
                break
    return TestReport(
        method="art",
        verdict=VERDICT_NON_MONOTONE if validated else VERDICT_NO_CEX,
        counter_examples=tuple(validated),
        tests_generated=len(ts),
        failed_attempts=first_hit if first_hit is not None else len(ts),
        wall_time=time.perf_counter() - started,
        seed=cfg.seed,
    )
