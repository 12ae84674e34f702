"""Shared vocabulary for monotonicity testing of classifiers.

A model under test maps feature vectors (instances) to classes drawn from a
totally ordered label set; the rank of a class is its index in that order.
A monotonicity constraint names a set of feature indices F and a variant:

* weak: raising the F-features of an instance while holding every other
  feature fixed must not lower the predicted rank;
* strong: raising the F-features must not lower the rank no matter how the
  remaining features change.

A counterexample is a pair (x, x') that satisfies the variant's precondition
while the model ranks x strictly above x'. Everything downstream (test
generation, verification, reporting) is phrased in these terms.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol, runtime_checkable

import numpy as np

# Instances are plain tuples so they hash and compare exactly; integer and
# categorical features hold Python ints, real features hold floats.
Instance = tuple[float, ...]

Rng = np.random.Generator

KIND_REAL = "real"
KIND_INTEGER = "integer"
KIND_CATEGORICAL = "categorical"
_KINDS = (KIND_REAL, KIND_INTEGER, KIND_CATEGORICAL)

VARIANT_WEAK = "weak"
VARIANT_STRONG = "strong"

CANDIDATE = "candidate"
VALIDATED = "validated"


class MonocheckError(Exception):
    """Base class for every error raised by this package."""


class InputError(MonocheckError):
    """Malformed arguments: dimension mismatch, bad indices, bad values."""


class ConfigError(MonocheckError):
    """Inconsistent configuration (budgets, mixes, hyperparameters)."""


class GenerationError(MonocheckError):
    """Test generation could not satisfy its constraints within bounds."""


class IngestError(MonocheckError):
    """Structural problem in an input file (CSV, spec, plan, tree dump)."""


class ModelError(MonocheckError):
    """A model under test failed to produce a prediction."""


def make_rng(seed: int) -> Rng:
    """Return the package-wide deterministic generator (PCG64) for a seed.

    Every stochastic operation takes one of these explicitly; nothing in the
    package touches global random state.
    """
    if not isinstance(seed, (int, np.integer)) or isinstance(seed, bool):
        raise InputError(f"seed must be an integer, got {seed!r}")
    if seed < 0:
        raise InputError(f"seed must be non-negative, got {seed}")
    return np.random.Generator(np.random.PCG64(seed))


@dataclass(frozen=True)
class FeatureSpec:
    """One feature: a name, a kind, and an inclusive value range.

    Real features range over [lower, upper] ⊂ R. Integer features hold
    integral values with integral bounds. Categorical features carry an
    ordered value list and are represented as integers in [0, len(values)-1];
    their bounds are derived, so pass lower/upper only for real and integer
    kinds.
    """

    name: str
    kind: str
    lower: float = 0.0
    upper: float = 0.0
    values: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        if not self.name:
            raise InputError("feature name must be non-empty")
        if self.kind not in _KINDS:
            raise InputError(f"unknown feature kind {self.kind!r} for {self.name!r}")
        if self.kind == KIND_CATEGORICAL:
            if not self.values:
                raise InputError(f"categorical feature {self.name!r} needs values")
            vals = tuple(self.values)
            if len(set(vals)) != len(vals):
                raise InputError(f"duplicate values in categorical {self.name!r}")
            object.__setattr__(self, "values", vals)
            object.__setattr__(self, "lower", 0)
            object.__setattr__(self, "upper", len(vals) - 1)
            return
        if self.values is not None:
            raise InputError(f"{self.kind} feature {self.name!r} must not list values")
        lo, hi = self.lower, self.upper
        if not (np.isfinite(lo) and np.isfinite(hi)):
            raise InputError(f"bounds of {self.name!r} must be finite")
        if lo > hi:
            raise InputError(f"lower > upper for feature {self.name!r}")
        if self.kind == KIND_INTEGER:
            if lo != int(lo) or hi != int(hi):
                raise InputError(f"integer feature {self.name!r} needs integral bounds")
            object.__setattr__(self, "lower", int(lo))
            object.__setattr__(self, "upper", int(hi))
        else:
            object.__setattr__(self, "lower", float(lo))
            object.__setattr__(self, "upper", float(hi))

    @property
    def is_discrete(self) -> bool:
        return self.kind != KIND_REAL

    def contains(self, v: float) -> bool:
        if self.is_discrete and v != int(v):
            return False
        return self.lower <= v <= self.upper


@dataclass(frozen=True)
class FeatureSpace:
    """Feature specs plus the ordered class labels (rank = index)."""

    features: tuple[FeatureSpec, ...]
    class_labels: tuple[str, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "features", tuple(self.features))
        object.__setattr__(self, "class_labels", tuple(self.class_labels))
        if not self.features:
            raise InputError("feature space needs at least one feature")
        names = [f.name for f in self.features]
        if len(set(names)) != len(names):
            raise InputError("duplicate feature names")
        if len(self.class_labels) < 2:
            raise InputError("need at least two class labels")
        if len(set(self.class_labels)) != len(self.class_labels):
            raise InputError("duplicate class labels")

    @property
    def n_features(self) -> int:
        return len(self.features)

    @property
    def n_classes(self) -> int:
        return len(self.class_labels)

    def index_of(self, name: str) -> int:
        for i, f in enumerate(self.features):
            if f.name == name:
                return i
        raise InputError(f"unknown feature {name!r}")

    def rank_of(self, label: str) -> int:
        try:
            return self.class_labels.index(label)
        except ValueError:
            raise InputError(f"unknown class label {label!r}") from None

    def validate_instance(self, x: Instance) -> None:
        if len(x) != self.n_features:
            raise InputError(
                f"instance has {len(x)} values, space has {self.n_features} features"
            )
        for spec, v in zip(self.features, x):
            if not spec.contains(v):
                raise InputError(f"value {v!r} outside feature {spec.name!r}")

    def validate_rank(self, y: int) -> None:
        if not isinstance(y, (int, np.integer)) or isinstance(y, bool):
            raise InputError(f"class rank must be an integer, got {y!r}")
        if not 0 <= y < self.n_classes:
            raise InputError(f"class rank {y} outside [0, {self.n_classes - 1}]")


@dataclass(frozen=True)
class MonotonicityConstraint:
    """Which features must act monotonically, and in which variant."""

    variant: str
    monotone_features: frozenset[int]

    def __post_init__(self) -> None:
        if self.variant not in (VARIANT_WEAK, VARIANT_STRONG):
            raise InputError(f"unknown variant {self.variant!r}")
        feats = frozenset(self.monotone_features)
        if not feats:
            raise InputError("monotone feature set must be non-empty")
        for i in feats:
            if not isinstance(i, (int, np.integer)) or isinstance(i, bool) or i < 0:
                raise InputError(f"bad feature index {i!r}")
        object.__setattr__(self, "monotone_features", feats)

    def check_against(self, space: FeatureSpace) -> None:
        for i in self.monotone_features:
            if i >= space.n_features:
                raise InputError(
                    f"monotone feature index {i} outside space of {space.n_features}"
                )


@dataclass(frozen=True)
class CounterExample:
    """A pair (x, x') with predicted ranks, satisfying the precondition.

    status is "candidate" while the ranks come from a surrogate and
    "validated" once the model under test itself produced them.
    """

    x: Instance
    x_prime: Instance
    y: int
    y_prime: int
    status: str = CANDIDATE

    def __post_init__(self) -> None:
        object.__setattr__(self, "x", tuple(self.x))
        object.__setattr__(self, "x_prime", tuple(self.x_prime))
        if self.status not in (CANDIDATE, VALIDATED):
            raise InputError(f"unknown status {self.status!r}")

    @property
    def pair(self) -> tuple[Instance, Instance]:
        return (self.x, self.x_prime)


@runtime_checkable
class ModelUnderTest(Protocol):
    """The black box: anything exposing predict(instance) -> class rank."""

    def predict(self, x: Instance) -> int: ...


def predict_checked(m: ModelUnderTest, x: Instance, space: FeatureSpace) -> int:
    """m.predict(x) with failures wrapped and the rank range enforced."""
    try:
        y = m.predict(x)
    except ModelError:
        raise
    except Exception as exc:
        raise ModelError(f"model failed predicting {x}: {exc}") from exc
    space.validate_rank(y)
    return int(y)


def precondition_holds(
    x: Instance,
    x_prime: Instance,
    c: MonotonicityConstraint,
    space: FeatureSpace | None = None,
) -> bool:
    """Does the pair (x, x') satisfy the constraint's precondition?

    Weak: every monotone feature may only rise, every other feature is equal.
    Strong: every monotone feature may only rise, the rest are unconstrained.
    Equality on the held features is exact value equality, never approximate.
    When a space is given, both instances are validated against it first.
    """
    if len(x) != len(x_prime):
        raise InputError(f"pair length mismatch: {len(x)} vs {len(x_prime)}")
    if space is not None:
        space.validate_instance(x)
        space.validate_instance(x_prime)
        c.check_against(space)
    feats = c.monotone_features
    if max(feats) >= len(x):
        raise InputError("monotone feature index outside instance")
    for i in feats:
        if x[i] > x_prime[i]:
            return False
    if c.variant == VARIANT_WEAK:
        for j in range(len(x)):
            if j not in feats and x[j] != x_prime[j]:
                return False
    return True


def is_violation(y: int, y_prime: int) -> bool:
    """True when the first rank is strictly above the second."""
    return y > y_prime
