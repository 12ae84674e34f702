"""Adaptive random testing: pair distance, diversified generation, checking."""

from __future__ import annotations

import math

import numpy as np
import pytest

from monocheck.art import (
    ArtConfig,
    TestPair,
    _draw_pair,
    _PairArena,
    art_gen,
    art_test,
    min_distance,
    pair_distance,
)
from monocheck.banking import (
    example_constraint,
    example_tree,
    example_tree_space,
)
from monocheck.core import (
    VALIDATED,
    ConfigError,
    InputError,
    MonotonicityConstraint,
    VARIANT_STRONG,
    VARIANT_WEAK,
    is_violation,
    make_rng,
    precondition_holds,
)
from monocheck.reporting import VERDICT_NO_CEX, VERDICT_NON_MONOTONE

from helpers import int_space


class ConstantModel:
    def predict(self, x):
        return 0


# -- config ------------------------------------------------------------------


def test_config_validation():
    with pytest.raises(ConfigError):
        ArtConfig(seed=-3)
    with pytest.raises(ConfigError):
        ArtConfig(seed=0, pool_size=0)
    with pytest.raises(ConfigError):
        ArtConfig(seed=0, ini_samples=0)
    with pytest.raises(ConfigError):
        ArtConfig(seed=0, ini_samples=11, max_samples=10)


# -- distance ----------------------------------------------------------------


def test_pair_distance_worked_example():
    # pair lengths 4 and 2, midpoints (2,0) and (0,1):
    # |4-2|/2 + sqrt(5)/2
    p = TestPair((0.0, 0.0), (4.0, 0.0))
    q = TestPair((0.0, 0.0), (0.0, 2.0))
    expected = 1 + math.sqrt(5) / 2
    assert pair_distance(p, q) == pytest.approx(expected, abs=1e-9)
    assert pair_distance(q, p) == pytest.approx(expected, abs=1e-9)


def test_pair_distance_pseudometric_zero():
    p = TestPair((0.0, 0.0), (2.0, 0.0))
    assert pair_distance(p, p) == 0.0
    # the swapped pair: same length, same midpoint, distance zero
    assert pair_distance(p, TestPair((2.0, 0.0), (0.0, 0.0))) == 0.0


def test_pair_distance_dimension_mismatch():
    with pytest.raises(InputError):
        pair_distance(TestPair((0.0,), (1.0,)), TestPair((0.0, 0.0), (1.0, 1.0)))


def test_min_distance():
    p = TestPair((0.0, 0.0), (4.0, 0.0))
    q = TestPair((0.0, 0.0), (0.0, 2.0))
    r = TestPair((10.0, 10.0), (10.0, 14.0))
    assert min_distance(p, [q]) == pair_distance(p, q)
    assert min_distance(p, [q, r, p]) == 0.0
    with pytest.raises(InputError):
        min_distance(p, [])


def test_arena_matches_scalar_distances():
    rng = make_rng(5)
    for _ in range(20):
        n = int(rng.integers(1, 4))
        ts = [
            TestPair(tuple(rng.normal(size=n)), tuple(rng.normal(size=n)))
            for _ in range(int(rng.integers(1, 8)))
        ]
        pool = [
            TestPair(tuple(rng.normal(size=n)), tuple(rng.normal(size=n)))
            for _ in range(int(rng.integers(1, 6)))
        ]
        arena = _PairArena(n, len(ts))
        for t in ts:
            arena.add(t)
        idx = arena.farthest(pool)
        mins = [min_distance(cand, ts) for cand in pool]
        assert mins[idx] == pytest.approx(max(mins), abs=1e-9)


# -- generation --------------------------------------------------------------


def test_art_gen_size_distinct_precondition():
    c = example_constraint()
    fs = example_tree_space()
    cfg = ArtConfig(seed=1, ini_samples=10, pool_size=5, max_samples=60)
    ts = art_gen(c, fs, cfg, make_rng(cfg.seed))
    assert len(ts) == 60
    assert len(set(ts)) == 60
    for pair in ts:
        assert precondition_holds(pair.x, pair.x_prime, c, fs)


def test_art_gen_strong_variant_pairs():
    c = MonotonicityConstraint(VARIANT_STRONG, frozenset({2}))
    fs = example_tree_space()
    cfg = ArtConfig(seed=2, ini_samples=5, pool_size=4, max_samples=30)
    ts = art_gen(c, fs, cfg, make_rng(cfg.seed))
    for pair in ts:
        assert precondition_holds(pair.x, pair.x_prime, c, fs)
        assert pair.x != pair.x_prime


def test_art_gen_deterministic():
    c = example_constraint()
    fs = example_tree_space()
    cfg = ArtConfig(seed=4, ini_samples=8, pool_size=6, max_samples=40)
    assert art_gen(c, fs, cfg, make_rng(cfg.seed)) == art_gen(
        c, fs, cfg, make_rng(cfg.seed)
    )


def test_art_gen_pool_selection_audit():
    # replay the generator by hand for ini=2, pool=3, max=3: the third
    # element must be the pool candidate farthest from the first two
    c = example_constraint()
    fs = example_tree_space()
    cfg = ArtConfig(seed=3, ini_samples=2, pool_size=3, max_samples=3)
    got = art_gen(c, fs, cfg, make_rng(cfg.seed))

    rng = make_rng(cfg.seed)
    seen: set[TestPair] = set()
    ts: list[TestPair] = []
    for _ in range(2):
        pair = _draw_pair(c, fs, rng, seen)
        seen.add(pair)
        ts.append(pair)
    pool: list[TestPair] = []
    pool_seen: set[TestPair] = set()
    for _ in range(3):
        cand = _draw_pair(c, fs, rng, pool_seen)
        pool_seen.add(cand)
        pool.append(cand)
    mins = [min_distance(cand, ts) for cand in pool]
    best = max(range(len(pool)), key=lambda i: (mins[i], -i))
    ts.append(pool[best])
    assert got == ts


def test_draw_pair_skips_corner_instances():
    # on a 2-point space half the draws land on the successor-free top
    # corner; the helper must keep redrawing rather than give up
    fs = int_space([1], n_classes=2)
    c = MonotonicityConstraint(VARIANT_WEAK, frozenset({0}))
    rng = make_rng(0)
    for _ in range(20):
        pair = _draw_pair(c, fs, rng, set())
        assert pair == TestPair((0,), (1,))


# -- checking ----------------------------------------------------------------


def test_art_test_constant_model():
    cfg = ArtConfig(seed=6, ini_samples=10, pool_size=5, max_samples=50)
    r = art_test(ConstantModel(), example_constraint(), example_tree_space(), cfg)
    assert r.method == "art"
    assert r.verdict == VERDICT_NO_CEX
    assert r.tests_generated == 50
    assert r.failed_attempts == 50
    assert r.retrainings is None and r.oracle_size is None


def test_art_test_detects_example_tree():
    cfg = ArtConfig(seed=0, ini_samples=20, pool_size=10, max_samples=200)
    t = example_tree()
    r = art_test(t, example_constraint(), example_tree_space(), cfg)
    assert r.verdict == VERDICT_NON_MONOTONE
    assert r.tests_generated == 200  # the set is generated up front
    assert r.failed_attempts == 35
    assert len(r.counter_examples) == 1
    cex = r.counter_examples[0]
    assert cex.status == VALIDATED
    assert t.predict(cex.x) == cex.y
    assert t.predict(cex.x_prime) == cex.y_prime
    assert is_violation(cex.y, cex.y_prime)


def test_art_test_collect_all():
    cfg = ArtConfig(
        seed=0, ini_samples=20, pool_size=10, max_samples=200,
        stop_at_first=False,
    )
    t = example_tree()
    r = art_test(t, example_constraint(), example_tree_space(), cfg)
    assert len(r.counter_examples) == 8
    assert r.failed_attempts == 35
    for cex in r.counter_examples:
        assert is_violation(t.predict(cex.x), t.predict(cex.x_prime))


def test_art_test_deterministic():
    cfg = ArtConfig(seed=11, ini_samples=10, pool_size=5, max_samples=80)
    args = (example_tree(), example_constraint(), example_tree_space())
    a = art_test(*args, cfg).to_dict()
    b = art_test(*args, cfg).to_dict()
    a.pop("wall_time")
    b.pop("wall_time")
    assert a == b
