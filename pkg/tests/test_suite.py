"""The bundled benchmark: construction, determinism, non-monotonicity."""

from __future__ import annotations

import math

import pytest

from helpers import labels_have_weak_violation, model_grid_labels
from monocheck.harness import Budgets, resolve_model, run_plan
from monocheck.suite import (
    SUITE,
    entry_dataset,
    entry_space,
    entry_spec,
    suite_plan,
    suite_task,
)


def test_suite_has_at_least_twelve_models_of_all_kinds():
    assert len(SUITE) >= 12
    names = [e.name for e in SUITE]
    assert len(set(names)) == len(names)
    kinds = {e.model.partition(":")[0] for e in SUITE}
    assert kinds == {"tree", "forest", "knn", "logreg"}


def test_suite_seeds_are_distinct_per_entry():
    assert len({e.data_seed for e in SUITE}) == len(SUITE)
    assert len({e.train_seed for e in SUITE}) == len(SUITE)


@pytest.mark.parametrize("entry", SUITE, ids=lambda e: e.name)
def test_entry_dataset_matches_its_recipe(entry):
    data = entry_dataset(entry)
    assert len(data) == entry.n_rows
    space = entry_space(entry)
    for x, y in data.rows:
        assert len(x) == len(entry.widths)
        for v, w in zip(x, entry.widths):
            assert 0 <= v <= w and float(v).is_integer()
        assert y == entry.labeler(x)
    assert space.n_classes == 3
    # all three ranks appear, otherwise training degenerates
    assert {y for _, y in data.rows} == {0, 1, 2}


def test_entry_dataset_is_reproducible():
    for entry in SUITE[:3]:
        assert entry_dataset(entry).rows == entry_dataset(entry).rows


def test_grids_fit_the_default_oracle_budget():
    for entry in SUITE:
        points = math.prod(w + 1 for w in entry.widths)
        assert points >= 2500  # 2.5x the default max_orcl of 1000


@pytest.mark.parametrize("entry", SUITE, ids=lambda e: e.name)
def test_trained_model_is_weakly_nonmonotone(entry):
    model, _ = resolve_model(entry.model, entry_dataset(entry),
                             entry.train_seed)
    labels = model_grid_labels(model, entry_space(entry))
    assert labels_have_weak_violation(labels, entry.monotone)


def test_suite_plan_composition():
    plan = suite_plan()
    assert len(plan.tasks) == len(SUITE)
    for task, entry in zip(plan.tasks, SUITE):
        assert task.name == entry.name
        assert task.methods == ("vbt", "art", "pt")
        assert task.seeds == tuple(range(10))
        assert task.budgets == Budgets()
        assert task.train_seed == entry.train_seed
        assert len(task.data) == entry.n_rows


def test_suite_plan_accepts_overrides():
    budgets = Budgets(max_samples=200, ini_samples=10, pool_size=10,
                      stop_at_first=False)
    plan = suite_plan(seeds=(3, 4), budgets=budgets, methods=("vbt",))
    for task in plan.tasks:
        assert task.seeds == (3, 4)
        assert task.methods == ("vbt",)
        assert task.budgets.stop_at_first is False
        assert task.budgets.max_samples == 200


def test_easiest_task_detects_quickly_end_to_end():
    from monocheck.harness import ExperimentPlan

    task = suite_task(SUITE[0], seeds=(0,),
                      budgets=Budgets(max_orcl=300, max_samples=100,
                                      ini_samples=10, pool_size=10))
    report = run_plan(ExperimentPlan((task,)))
    assert report.all_ok
    assert report.detected_tasks("vbt") == {"tree-broad-dip"}
    for record in report.records:
        for cex in record.report.counter_examples:
            assert cex.y > cex.y_prime
