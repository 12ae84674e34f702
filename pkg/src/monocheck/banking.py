"""Bundled loan-decision example: the banking table and a hand-built tree.

The CSV reproduces the five-row banking set with loan classes ordered
no < low < medium < high. The hand-built tree is the classic worked example
for this package: it grants "high" to short contracts when income is at
least 30, but only "medium" to longer contracts below income 50, so it is
not monotone in the contract feature. The tree never predicts "low", so it
lives in a three-label space (no < medium < high) where rank("high") = 2.
"""

from __future__ import annotations

from importlib import resources
from pathlib import Path

from .core import FeatureSpace, FeatureSpec, MonotonicityConstraint, VARIANT_WEAK
from .datasets import ConstraintSpecFile, Dataset, load_constraint_spec, load_csv
from .tree import Leaf, Split, TreeModel

_FEATURES = (
    FeatureSpec("income", "real", 0.0, 150.0),
    FeatureSpec("children", "integer", 0, 5),
    FeatureSpec("contract", "integer", 0, 30),
)

INCOME, CHILDREN, CONTRACT = 0, 1, 2


def banking_csv_path() -> Path:
    return Path(resources.files("monocheck").joinpath("data/banking.csv"))


def banking_spec_path() -> Path:
    return Path(resources.files("monocheck").joinpath("data/banking.spec.json"))


def banking_spec() -> ConstraintSpecFile:
    return load_constraint_spec(banking_spec_path())


def load_banking() -> Dataset:
    """The five banking rows in the four-label class order."""
    return load_csv(banking_csv_path(), banking_spec())


def example_tree_space() -> FeatureSpace:
    """Feature space of the hand-built tree (three labels; see module doc)."""
    return FeatureSpace(_FEATURES, ("no", "medium", "high"))


def example_tree() -> TreeModel:
    """The hand-built loan tree.

    contract < 10:  income < 30 -> no,     income >= 30 -> high
    contract >= 10: income < 50 -> medium, income >= 50 -> high
    """
    nodes = (
        Split(CONTRACT, 10.0, 1, 4),
        Split(INCOME, 30.0, 2, 3),
        Leaf(0),
        Leaf(2),
        Split(INCOME, 50.0, 5, 6),
        Leaf(1),
        Leaf(2),
    )
    return TreeModel(nodes, n_features=3, n_classes=3)


def example_constraint() -> MonotonicityConstraint:
    """Weak monotonicity in the contract length."""
    return MonotonicityConstraint(VARIANT_WEAK, frozenset({CONTRACT}))
