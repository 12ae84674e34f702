"""Surrogate-and-verify testing.

The method treats the model under test as a labeling oracle: sample
instances, label them with the model, train a decision-tree surrogate,
and ask the exact checker for pairs where the SURROGATE breaks
monotonicity. Each candidate pair is then validated against the real
model; misses reveal where the surrogate diverges, those points are
added to the oracle data with the model's own labels, and the surrogate
is retrained. The loop stops at the first validated counterexample (or
collects all of them with stop_at_first off), when a surrogate comes
back monotone, when a round contributes nothing new, or when the test
budget is spent.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

from .core import (
    CANDIDATE,
    VALIDATED,
    ConfigError,
    CounterExample,
    FeatureSpace,
    Instance,
    ModelUnderTest,
    MonotonicityConstraint,
    Rng,
    is_violation,
    make_rng,
    predict_checked,
)
from .datasets import Dataset, sample_distinct
from .reporting import VERDICT_NO_CEX, VERDICT_NON_MONOTONE, TestReport
from .tree import TreeModel, TreeParams, train
from .verifier import VerifierSession, prune_branches, prune_instances

PRUNE_INSTANCES = "instances"
PRUNE_BRANCHES = "branches"
PRUNE_BOTH = "both"
_PRUNINGS = (PRUNE_INSTANCES, PRUNE_BRANCHES, PRUNE_BOTH)

# the report type veri_test returns; shared with the other methods
VbtReport = TestReport


@dataclass(frozen=True)
class VbtConfig:
    """Knobs for the surrogate loop.

    training_mix is the fraction of oracle rows drawn from
    training_data; leave it None for the default of 0.1 when training
    data is supplied and 0 otherwise. Training labels are never used,
    only the instances: the model under test relabels everything.
    """

    seed: int
    max_orcl: int = 1000
    max_samples: int = 1000
    training_data: Dataset | None = None
    training_mix: float | None = None
    tree_params: TreeParams = field(default_factory=TreeParams)
    stop_at_first: bool = True
    pruning: str = PRUNE_BOTH

    def __post_init__(self) -> None:
        if not isinstance(self.seed, int) or isinstance(self.seed, bool) or self.seed < 0:
            raise ConfigError("seed must be a non-negative integer")
        if self.max_orcl < 1:
            raise ConfigError("max_orcl must be >= 1")
        if self.max_samples < 1:
            raise ConfigError("max_samples must be >= 1")
        if self.pruning not in _PRUNINGS:
            raise ConfigError(f"pruning must be one of {_PRUNINGS}")
        mix = self.training_mix
        if mix is not None and not 0.0 <= mix <= 1.0:
            raise ConfigError("training_mix must lie in [0, 1]")
        if self.training_data is None and mix not in (None, 0.0):
            raise ConfigError("training_mix needs training_data")

    @property
    def mix(self) -> float:
        if self.training_mix is not None:
            return self.training_mix
        return 0.1 if self.training_data is not None else 0.0


def generate_oracle(
    m: ModelUnderTest, space: FeatureSpace, cfg: VbtConfig, rng: Rng
) -> Dataset:
    """Exactly max_orcl distinct instances, each labeled by the model.

    round(mix * max_orcl) rows reuse instances drawn without replacement
    from the training data (fewer if it runs out of distinct instances);
    the rest are uniform samples. Any labels the training data carried
    are discarded.
    """
    want_train = round(cfg.mix * cfg.max_orcl)
    taken: set[Instance] = set()
    instances: list[Instance] = []
    if want_train and cfg.training_data is not None:
        rows = cfg.training_data.rows
        for i in rng.permutation(len(rows)):
            x = rows[int(i)][0]
            if x not in taken:
                taken.add(x)
                instances.append(x)
                if len(instances) == want_train:
                    break
    instances.extend(
        sample_distinct(space, cfg.max_orcl - len(instances), rng, taken=taken)
    )
    return Dataset(
        space, tuple((x, predict_checked(m, x, space)) for x in instances)
    )


def veri_gen(
    tree: TreeModel, c: MonotonicityConstraint, space: FeatureSpace,
    pruning: str = PRUNE_BOTH,
) -> list[CounterExample]:
    """Candidate counterexamples of the TREE: the checker's base witness
    plus its pruning variations, deduplicated, tree-predicted classes
    attached. Empty when the tree is monotone."""
    if pruning not in _PRUNINGS:
        raise ConfigError(f"pruning must be one of {_PRUNINGS}")
    session = VerifierSession(tree, c, space)
    base = session.find()
    if base is None:
        return []
    found = [base]
    if pruning in (PRUNE_INSTANCES, PRUNE_BOTH):
        found.extend(prune_instances(base, tree, c, space, session))
    if pruning in (PRUNE_BRANCHES, PRUNE_BOTH):
        found.extend(prune_branches(base, tree, c, space, session))
    unique = dict.fromkeys((w.x, w.x_prime, w.class1, w.class2) for w in found)
    return [
        CounterExample(x, xp, y, yp, CANDIDATE) for x, xp, y, yp in unique
    ]


def veri_test(
    m: ModelUnderTest, c: MonotonicityConstraint, space: FeatureSpace,
    cfg: VbtConfig,
) -> TestReport:
    """Run the surrogate loop against the model; see module docstring."""
    c.check_against(space)
    started = time.perf_counter()
    rng = make_rng(cfg.seed)
    oracle: dict[Instance, int] = {}
    for x, y in generate_oracle(m, space, cfg, rng).rows:
        oracle[x] = y
    trainings = 0
    ts: dict[tuple[Instance, Instance], None] = {}
    validated: list[CounterExample] = []
    first_hit: int | None = None

    def report() -> TestReport:
        detected = bool(validated)
        return TestReport(
            method="vbt",
            verdict=VERDICT_NON_MONOTONE if detected else VERDICT_NO_CEX,
            counter_examples=tuple(validated),
            tests_generated=len(ts),
            failed_attempts=first_hit if first_hit is not None else len(ts),
            wall_time=time.perf_counter() - started,
            seed=cfg.seed,
            retrainings=trainings - 1,
            oracle_size=len(oracle),
        )

    while len(ts) < cfg.max_samples:
        data = Dataset(space, tuple(oracle.items()))
        tree = train(data, cfg.tree_params)
        trainings += 1
        cs = [
            cex for cex in veri_gen(tree, c, space, cfg.pruning)
            if cex.pair not in ts
        ]
        if not cs:
            # a monotone surrogate, or a round of nothing-but-repeats:
            # either way this round contributed no new tests
            return report()
        for cex in cs:
            ts[cex.pair] = None
        for cex in cs:
            y = predict_checked(m, cex.x, space)
            y_prime = predict_checked(m, cex.x_prime, space)
            if is_violation(y, y_prime):
                validated.append(
                    CounterExample(cex.x, cex.x_prime, y, y_prime, VALIDATED)
                )
                if first_hit is None:
                    first_hit = list(ts).index(cex.pair)
                if cfg.stop_at_first:
                    return report()
            else:
                if y != cex.y:
                    oracle[cex.x] = y
                if y_prime != cex.y_prime:
                    oracle[cex.x_prime] = y_prime
    return report()
