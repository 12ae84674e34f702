"""Result type shared by all three test methods."""

from __future__ import annotations

from dataclasses import dataclass

from .core import CounterExample, InputError

VERDICT_NON_MONOTONE = "non-monotone"
VERDICT_NO_CEX = "no-counterexample"


@dataclass(frozen=True)
class TestReport:
    """Outcome of one testing run against one model.

    failed_attempts counts the test pairs generated before the first
    validated counterexample; with no detection it equals
    tests_generated. retrainings and oracle_size are only meaningful for
    the surrogate-based method and stay None elsewhere.
    """

    __test__ = False  # not a test case, despite the name (pytest)

    method: str
    verdict: str
    counter_examples: tuple[CounterExample, ...] = ()
    tests_generated: int = 0
    failed_attempts: int = 0
    wall_time: float = 0.0
    seed: int = 0
    retrainings: int | None = None
    oracle_size: int | None = None

    def __post_init__(self) -> None:
        if self.verdict not in (VERDICT_NON_MONOTONE, VERDICT_NO_CEX):
            raise InputError(f"unknown verdict {self.verdict!r}")
        if not isinstance(self.counter_examples, tuple):
            object.__setattr__(
                self, "counter_examples", tuple(self.counter_examples)
            )
        if self.verdict == VERDICT_NON_MONOTONE and not self.counter_examples:
            raise InputError("non-monotone verdict needs counterexamples")
        if self.verdict == VERDICT_NO_CEX and self.counter_examples:
            raise InputError("no-counterexample verdict carries none")
        if self.failed_attempts > self.tests_generated:
            raise InputError("failed_attempts cannot exceed tests_generated")
        if self.wall_time < 0:
            raise InputError("wall_time must be >= 0")

    @property
    def detected(self) -> bool:
        return self.verdict == VERDICT_NON_MONOTONE

    @property
    def detection_rate(self) -> float:
        """Validated counterexamples per generated test case."""
        if self.tests_generated == 0:
            return 0.0
        return len(self.counter_examples) / self.tests_generated

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "verdict": self.verdict,
            "counter_examples": [
                {
                    "x": list(cex.x),
                    "x_prime": list(cex.x_prime),
                    "y": cex.y,
                    "y_prime": cex.y_prime,
                    "status": cex.status,
                }
                for cex in self.counter_examples
            ],
            "tests_generated": self.tests_generated,
            "failed_attempts": self.failed_attempts,
            "detection_rate": self.detection_rate,
            "wall_time": self.wall_time,
            "seed": self.seed,
            "retrainings": self.retrainings,
            "oracle_size": self.oracle_size,
        }
