"""Property-based random testing of classifier monotonicity.

The baseline the other two methods are measured against: draw a random
instance, extend it to a random precondition-satisfying pair, check the
pair against the model, repeat. No deduplication, no distance guidance,
no surrogate. Pairs come from the same generators the adaptive method
uses, so the two baselines differ only in how candidates are selected.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

from .core import (
    VALIDATED,
    ConfigError,
    CounterExample,
    FeatureSpace,
    GenerationError,
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

# corner instances (x at the top of every raisable feature) have no
# successor; bound how often we redraw before giving up on the space
_RETRY_CAP = 1000


@dataclass(frozen=True)
class PtConfig:
    """Knobs for :func:`pt_test`."""

    seed: int
    max_samples: int = 1000
    stop_at_first: bool = True

    def __post_init__(self) -> None:
        if isinstance(self.seed, bool) or not isinstance(self.seed, int):
            raise ConfigError("seed must be an int")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")
        if self.max_samples < 1:
            raise ConfigError("max_samples must be >= 1")


def _draw_pair(
    c: MonotonicityConstraint, space: FeatureSpace, rng: Rng
) -> tuple[Instance, Instance]:
    for _ in range(_RETRY_CAP):
        x = sample_uniform(space, rng)
        try:
            x_prime = sample_successor(x, c, space, rng)
        except GenerationError:
            continue
        return x, x_prime
    raise GenerationError(
        "could not draw a precondition-satisfying pair; space exhausted?"
    )


def pt_test(
    m: ModelUnderTest, c: MonotonicityConstraint, space: FeatureSpace,
    cfg: PtConfig,
) -> TestReport:
    """Check up to max_samples independently drawn random pairs."""
    started = time.perf_counter()
    rng = make_rng(cfg.seed)
    validated: list[CounterExample] = []
    first_hit: int | None = None
    generated = 0
    for i in range(cfg.max_samples):
        x, x_prime = _draw_pair(c, space, rng)
        generated += 1
        y = predict_checked(m, x, space)
        y_prime = predict_checked(m, x_prime, space)
        if is_violation(y, y_prime):
            validated.append(CounterExample(x, x_prime, y, y_prime, VALIDATED))
            if first_hit is None:
                first_hit = i
            if cfg.stop_at_first:
                break
    return TestReport(
        method="pt",
        verdict=VERDICT_NON_MONOTONE if validated else VERDICT_NO_CEX,
        counter_examples=tuple(validated),
        tests_generated=generated,
        failed_attempts=first_hit if first_hit is not None else generated,
        wall_time=time.perf_counter() - started,
        seed=cfg.seed,
    )
