"""Monotonicity testing for black-box classifiers.

Three test generators share one vocabulary: property-based sampling (pt),
adaptive random testing (art), and verification-based testing (vbt), which
trains a decision-tree surrogate, extracts candidate counterexample pairs
from it exactly, and validates them against the model under test. The
harness runs method X model matrices and writes JSON reports; the cli module
exposes the same as the `monocheck` command.
"""

from .art import ArtConfig, art_test
from .harness import (
    Budgets,
    CellRecord,
    ExperimentPlan,
    PlanTask,
    RunReport,
    detection_rate_sweep,
    load_plan,
    resolve_model,
    run_plan,
)
from .core import (
    CounterExample,
    FeatureSpace,
    FeatureSpec,
    MonotonicityConstraint,
    ModelUnderTest,
    make_rng,
    is_violation,
    precondition_holds,
)
from .pt import PtConfig, pt_test
from .reporting import TestReport
from .suite import SUITE, suite_plan, suite_task
from .vbt import VbtConfig, veri_test

__version__ = "0.1.0"

__all__ = [
    "ArtConfig",
    "Budgets",
    "CellRecord",
    "CounterExample",
    "ExperimentPlan",
    "FeatureSpace",
    "FeatureSpec",
    "MonotonicityConstraint",
    "ModelUnderTest",
    "PlanTask",
    "PtConfig",
    "RunReport",
    "SUITE",
    "TestReport",
    "VbtConfig",
    "art_test",
    "detection_rate_sweep",
    "load_plan",
    "make_rng",
    "is_violation",
    "precondition_holds",
    "pt_test",
    "resolve_model",
    "run_plan",
    "suite_plan",
    "suite_task",
    "veri_test",
    "__version__",
]
