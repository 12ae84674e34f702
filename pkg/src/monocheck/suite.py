"""Bundled benchmark: fourteen seeded non-monotone models.

Every task trains a built-in model kind (tree, forest, knn, logreg) on
synthetic integer-grid data. Labels follow a monotone ramp over one or
two driving features, except inside a deliberately dented box where the
rank drops, so the trained model inherits a localized monotonicity
fault. Dent geometry spans the difficulty range: broad dips that any
method hits quickly, down to thin shelves confined to a single slab of
the grid; for the logistic models the band order itself is permuted,
which a linear scorer reproduces as a broad fault. All data generation
is seeded, so the suite is the same set of models on every run, and
each one is verifiably non-monotone by exhaustive grid enumeration.

Grids hold 2500 to 4000 points: wide enough that the default oracle
budget of 1000 draws fits without exhausting the space, small enough
that tests can sweep them exhaustively.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from .core import FeatureSpace, make_rng
from .datasets import ConstraintSpecFile, Dataset, FeatureDecl
from .harness import METHODS, Budgets, ExperimentPlan, PlanTask

_GRID_A = (19, 19, 9)     # 20 x 20 x 10 = 4000 points
_GRID_B = (49, 49)        # 50 x 50     = 2500 points
_GRID_C = (9, 9, 7, 4)    # 10 x 10 x 8 x 5 = 4000 points

_CLASSES = ("low", "mid", "high")


def _ramp_with_dent(drive, t1, t2, box, dent_rank) -> Callable:
    """Rank 0/1/2 by the sum of the driving coords; the box overrides."""
    def label(x) -> int:
        s = sum(x[i] for i in drive)
        r = 0 if s < t1 else (1 if s < t2 else 2)
        if all(lo <= x[i] <= hi for i, (lo, hi) in enumerate(box)):
            r = dent_rank
        return r
    return label


def _swapped_bands(drive, t1, t2) -> Callable:
    """Monotone bands with the top two ranks exchanged."""
    def label(x) -> int:
        s = sum(x[i] for i in drive)
        return 0 if s < t1 else (2 if s < t2 else 1)
    return label


@dataclass(frozen=True)
class SuiteEntry:
    """Recipe for one benchmark model: data distribution plus trainer."""

    name: str
    model: str
    widths: tuple[int, ...]
    monotone: tuple[int, ...]
    labeler: Callable
    n_rows: int
    data_seed: int
    train_seed: int


SUITE: tuple[SuiteEntry, ...] = (
    SuiteEntry("tree-broad-dip", "tree", _GRID_B, (0,),
               _ramp_with_dent((0,), 17, 34, [(22, 27), (10, 29)], 0),
               500, 101, 1),
    SuiteEntry("tree-ridge-notch", "tree", _GRID_A, (0,),
               _ramp_with_dent((0,), 7, 14, [(10, 11), (14, 17), (0, 9)], 0),
               500, 102, 2),
    SuiteEntry("tree-thin-shelf", "tree", _GRID_A, (0,),
               _ramp_with_dent((0,), 7, 14, [(10, 10), (14, 15), (0, 9)], 0),
               800, 103, 3),
    SuiteEntry("tree-corner-slip", "tree", _GRID_C, (0, 1),
               _ramp_with_dent((0, 1), 8, 14,
                               [(6, 6), (6, 6), (2, 5), (1, 3)], 0),
               900, 104, 4),
    SuiteEntry("tree-band-fault", "tree", _GRID_B, (0,),
               _ramp_with_dent((0,), 17, 34, [(40, 49), (5, 8)], 1),
               700, 105, 5),
    SuiteEntry("forest-broad-dip", "forest:n_trees=5", _GRID_B, (0,),
               _ramp_with_dent((0,), 17, 34, [(20, 29), (8, 31)], 0),
               500, 107, 7),
    SuiteEntry("forest-ridge-notch", "forest:n_trees=5", _GRID_A, (0,),
               _ramp_with_dent((0,), 7, 14, [(9, 11), (12, 17), (0, 9)], 0),
               600, 108, 8),
    SuiteEntry("forest-corner-slip", "forest:n_trees=7", _GRID_C, (0, 1),
               _ramp_with_dent((0, 1), 8, 14,
                               [(5, 6), (5, 6), (2, 5), (1, 3)], 0),
               800, 109, 9),
    SuiteEntry("knn-pocket", "knn:k=1", _GRID_B, (0,),
               _ramp_with_dent((0,), 17, 34, [(24, 31), (12, 27)], 0),
               250, 110, 10),
    SuiteEntry("knn-smooth-pocket", "knn:k=3", _GRID_A, (0,),
               _ramp_with_dent((0,), 7, 14, [(9, 12), (10, 16), (0, 9)], 0),
               300, 111, 11),
    SuiteEntry("logreg-swapped-top", "logreg:", _GRID_B, (0,),
               _swapped_bands((0,), 17, 34),
               400, 112, 12),
    SuiteEntry("logreg-swapped-pair", "logreg:", _GRID_A, (0, 1),
               _swapped_bands((0, 1), 13, 26),
               400, 113, 13),
    SuiteEntry("tree-low-shelf", "tree", _GRID_A, (0,),
               _ramp_with_dent((0,), 7, 14, [(10, 10), (4, 5), (0, 9)], 0),
               800, 114, 14),
    SuiteEntry("forest-thin-shelf", "forest:n_trees=5", _GRID_A, (0,),
               _ramp_with_dent((0,), 7, 14, [(10, 10), (13, 16), (0, 9)], 0),
               900, 115, 15),
)


def entry_space(entry: SuiteEntry) -> FeatureSpace:
    return entry_spec(entry).build_space()


def entry_spec(entry: SuiteEntry) -> ConstraintSpecFile:
    return ConstraintSpecFile(
        features=tuple(FeatureDecl(f"f{i}", "integer", 0, w)
                       for i, w in enumerate(entry.widths)),
        class_column="label",
        class_order=_CLASSES,
        monotone_features=tuple(f"f{i}" for i in sorted(entry.monotone)),
        variant="weak",
    )


def entry_dataset(entry: SuiteEntry) -> Dataset:
    """The entry's synthetic training rows; same rows on every call."""
    rng = make_rng(entry.data_seed)
    rows = []
    for _ in range(entry.n_rows):
        x = tuple(float(rng.integers(0, w + 1)) for w in entry.widths)
        rows.append((x, entry.labeler(x)))
    return Dataset(entry_space(entry), tuple(rows))


def suite_task(
    entry: SuiteEntry,
    seeds: tuple[int, ...] = tuple(range(10)),
    budgets: Budgets | None = None,
    methods: tuple[str, ...] = METHODS,
) -> PlanTask:
    return PlanTask(
        name=entry.name,
        model=entry.model,
        constraint=entry_spec(entry),
        data=entry_dataset(entry),
        methods=methods,
        seeds=seeds,
        budgets=budgets if budgets is not None else Budgets(),
        train_seed=entry.train_seed,
    )


def suite_plan(
    seeds: tuple[int, ...] = tuple(range(10)),
    budgets: Budgets | None = None,
    methods: tuple[str, ...] = METHODS,
) -> ExperimentPlan:
    """The whole benchmark as one plan; default budgets are 1000/100/50."""
    return ExperimentPlan(tuple(
        suite_task(e, seeds, budgets, methods) for e in SUITE
    ))
