"""Experiment orchestration: plans, cells, aggregation, JSON reports.

A plan is a list of tasks; a task names a model source, a constraint,
the methods to run, and one seed per repetition. Every (task, method,
repetition) triple is a cell. Cells are independent: each resolves its
own model, runs one method with one seed, and re-validates every
reported counterexample against the model before the record is
accepted. Model and protocol failures mark the cell failed without
stopping the plan; anything else (unreadable files, bad configuration)
aborts, since it means the plan itself is broken.

Reports keep the raw per-cell records so every aggregate can be
recomputed from them; means and the cross-method detection overlap are
included for convenience.

Model sources are strings (or in-memory model objects, when building
plans programmatically):

    tree-file:PATH        serialized tree, loaded as-is
    tree[:k=v,...]        built-ins, trained on the task's data with
    forest[:k=v,...]      train_seed driving any randomness; the k=v
    knn[:k=v,...]         pairs are train_builtin hyperparameters
    logreg[:k=v,...]
    external:COMMAND      child process speaking the wire protocol
"""

from __future__ import annotations

import json
import shlex
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

from .art import ArtConfig, art_test
from .core import (
    ConfigError,
    FeatureSpace,
    IngestError,
    InputError,
    ModelError,
    ModelUnderTest,
    MonotonicityConstraint,
    is_violation,
    make_rng,
    precondition_holds,
)
from .datasets import ConstraintSpecFile, Dataset, load_constraint_spec, load_csv
from .models import BUILTIN_KINDS, ExternalModel, ProtocolError, train_builtin
from .pt import PtConfig, pt_test
from .reporting import TestReport
from .tree import load_tree
from .vbt import PRUNE_BOTH, PRUNE_BRANCHES, PRUNE_INSTANCES, VbtConfig, veri_test

METHOD_VBT = "vbt"
METHOD_ART = "art"
METHOD_PT = "pt"
METHODS = (METHOD_VBT, METHOD_ART, METHOD_PT)

SCHEMA = "monocheck-report/1"


@dataclass(frozen=True)
class Budgets:
    """Per-task method budgets; defaults match the usual 1000/100/50."""

    max_samples: int = 1000
    max_orcl: int = 1000
    ini_samples: int = 100
    pool_size: int = 50
    stop_at_first: bool = True
    pruning: str = PRUNE_BOTH
    training_mix: float | None = None

    def __post_init__(self) -> None:
        # per-field checks only; couplings like ini_samples <= max_samples
        # concern a single method and are enforced by PlanTask for the
        # methods it actually selects
        for name in ("max_samples", "max_orcl", "ini_samples", "pool_size"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, int) or v < 1:
                raise ConfigError(f"{name} must be a positive int")
        if self.pruning not in (PRUNE_INSTANCES, PRUNE_BRANCHES, PRUNE_BOTH):
            raise ConfigError(f"unknown pruning strategy {self.pruning!r}")
        mix = self.training_mix
        if mix is not None and not 0.0 <= mix <= 1.0:
            raise ConfigError("training_mix must lie in [0, 1]")


@dataclass(frozen=True)
class PlanTask:
    """One model source under one constraint, run by one or more methods."""

    name: str
    model: str | ModelUnderTest
    constraint: str | ConstraintSpecFile
    data: str | Dataset | None = None
    methods: tuple[str, ...] = METHODS
    seeds: tuple[int, ...] = (0,)
    budgets: Budgets = field(default_factory=Budgets)
    train_seed: int = 0

    def __post_init__(self) -> None:
        if not self.name:
            raise ConfigError("task needs a name")
        object.__setattr__(self, "methods", tuple(self.methods))
        object.__setattr__(self, "seeds", tuple(self.seeds))
        if not self.methods:
            raise ConfigError(f"task {self.name}: no methods selected")
        for m in self.methods:
            if m not in METHODS:
                raise ConfigError(f"task {self.name}: unknown method {m!r}")
        if len(set(self.methods)) != len(self.methods):
            raise ConfigError(f"task {self.name}: duplicate methods")
        if not self.seeds:
            raise ConfigError(f"task {self.name}: needs at least one seed")
        if len(set(self.seeds)) != len(self.seeds):
            raise ConfigError(f"task {self.name}: repetition seeds must differ")
        for s in self.seeds:
            if isinstance(s, bool) or not isinstance(s, int) or s < 0:
                raise ConfigError(f"task {self.name}: bad seed {s!r}")
        if isinstance(self.train_seed, bool) or not isinstance(self.train_seed, int) \
                or self.train_seed < 0:
            raise ConfigError(f"task {self.name}: bad train_seed {self.train_seed!r}")
        # budget couplings checked against the methods actually selected
        b = self.budgets
        if METHOD_VBT in self.methods:
            VbtConfig(seed=0, max_orcl=b.max_orcl, max_samples=b.max_samples,
                      pruning=b.pruning, stop_at_first=b.stop_at_first)
        if METHOD_ART in self.methods:
            ArtConfig(seed=0, ini_samples=b.ini_samples, pool_size=b.pool_size,
                      max_samples=b.max_samples, stop_at_first=b.stop_at_first)


@dataclass(frozen=True)
class ExperimentPlan:
    tasks: tuple[PlanTask, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "tasks", tuple(self.tasks))
        names = [t.name for t in self.tasks]
        if len(set(names)) != len(names):
            raise ConfigError("task names must be unique")


@dataclass(frozen=True)
class CellRecord:
    """Outcome of one (task, method, repetition) cell."""

    task: str
    method: str
    repetition: int
    seed: int
    report: TestReport | None = None
    error: str | None = None

    def __post_init__(self) -> None:
        if (self.report is None) == (self.error is None):
            raise InputError("a cell carries either a report or an error")

    @property
    def ok(self) -> bool:
        return self.error is None

    def to_dict(self) -> dict:
        return {
            "task": self.task,
            "method": self.method,
            "repetition": self.repetition,
            "seed": self.seed,
            "report": self.report.to_dict() if self.report else None,
            "error": self.error,
        }


@dataclass(frozen=True)
class RunReport:
    records: tuple[CellRecord, ...]
    schema: str = SCHEMA

    def __post_init__(self) -> None:
        object.__setattr__(self, "records", tuple(self.records))

    @property
    def all_ok(self) -> bool:
        return all(r.ok for r in self.records)

    def cells(self, task: str | None = None, method: str | None = None):
        return [
            r for r in self.records
            if (task is None or r.task == task)
            and (method is None or r.method == method)
        ]

    def task_names(self) -> list[str]:
        seen: dict[str, None] = {}
        for r in self.records:
            seen.setdefault(r.task)
        return list(seen)

    def detected_tasks(self, method: str) -> set[str]:
        """Tasks where any repetition of the method found a violation."""
        return {
            r.task for r in self.records
            if r.method == method and r.ok and r.report.detected
        }

    def aggregates(self) -> dict:
        """Per task and method: detection count and means over ok cells."""
        out: dict = {}
        for task in self.task_names():
            per_method: dict = {}
            methods = {r.method for r in self.cells(task=task)}
            for method in (m for m in METHODS if m in methods):
                ok = [r.report for r in self.cells(task, method) if r.ok]
                failed = len(self.cells(task, method)) - len(ok)
                entry: dict = {
                    "repetitions": len(ok) + failed,
                    "failed_cells": failed,
                    "detections": sum(1 for r in ok if r.detected),
                }
                if ok:
                    entry.update(
                        mean_tests_generated=_mean(r.tests_generated for r in ok),
                        mean_failed_attempts=_mean(r.failed_attempts for r in ok),
                        median_failed_attempts=statistics.median(
                            r.failed_attempts for r in ok
                        ),
                        mean_wall_time=_mean(r.wall_time for r in ok),
                        mean_detection_rate=_mean(r.detection_rate for r in ok),
                    )
                    retrainings = [
                        r.retrainings for r in ok if r.retrainings is not None
                    ]
                    if retrainings:
                        entry["mean_retrainings"] = _mean(retrainings)
                per_method[method] = entry
            out[task] = per_method
        return out

    def overlap(self) -> dict[str, list[str]]:
        """Venn decomposition of detections: every task lands in exactly
        one region, keyed like "vbt+art"; "none" collects the rest."""
        detected = {m: self.detected_tasks(m) for m in METHODS}
        regions = {}
        for task in self.task_names():
            hits = [m for m in METHODS if task in detected[m]]
            key = "+".join(hits) if hits else "none"
            regions.setdefault(key, []).append(task)
        ordered = {}
        for key in _REGION_KEYS:
            ordered[key] = sorted(regions.pop(key, []))
        return ordered

    def to_dict(self) -> dict:
        return {
            "schema": self.schema,
            "records": [r.to_dict() for r in self.records],
            "aggregates": self.aggregates(),
            "overlap": self.overlap(),
        }


_REGION_KEYS = (
    "vbt", "art", "pt", "vbt+art", "vbt+pt", "art+pt", "vbt+art+pt", "none",
)


def _mean(values) -> float:
    vals = list(values)
    return sum(vals) / len(vals)


# -- model and context resolution --------------------------------------------


def resolve_model(
    source: str | ModelUnderTest,
    dataset: Dataset | None,
    train_seed: int = 0,
):
    """The model for a source plus a close() callable (None for built-ins)."""
    if not isinstance(source, str):
        return source, None
    kind, _, arg = source.partition(":")
    if kind == "tree-file":
        if not arg:
            raise ConfigError("tree-file: needs a path")
        try:
            text = Path(arg).read_text(encoding="utf-8")
        except OSError as e:
            raise IngestError(f"cannot read tree file {arg}: {e}") from e
        return load_tree(text), None
    if kind == "external":
        if not arg:
            raise ConfigError("external: needs a command")
        model = ExternalModel(shlex.split(arg))
        return model, model.close
    if kind in BUILTIN_KINDS:
        if dataset is None:
            raise ConfigError(f"model {source!r} needs training data")
        hp = _parse_params(arg)
        return train_builtin(kind, dataset, hp, make_rng(train_seed)), None
    raise ConfigError(f"unknown model source {source!r}")


def _parse_params(text: str) -> dict:
    """"k=3,step=0.1,bootstrap=false" -> typed hyperparameter dict."""
    params: dict = {}
    if not text:
        return params
    for item in text.split(","):
        key, sep, value = item.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ConfigError(f"bad hyperparameter {item!r}; expected key=value")
        params[key] = _parse_value(value.strip())
    return params


def _parse_value(text: str):
    low = text.lower()
    if low in ("true", "false"):
        return low == "true"
    if low in ("none", "null"):
        return None
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def task_context(
    task: PlanTask,
) -> tuple[MonotonicityConstraint, FeatureSpace, Dataset | None]:
    """Resolve the task's constraint, feature space, and training data."""
    spec = task.constraint
    if isinstance(spec, str):
        spec = load_constraint_spec(spec)
    if task.data is None:
        dataset = None
        space = spec.build_space()
    elif isinstance(task.data, Dataset):
        dataset = task.data
        space = dataset.space
    else:
        dataset = load_csv(task.data, spec)
        space = dataset.space
    return spec.constraint(space), space, dataset


# -- running -----------------------------------------------------------------


def check_space_agreement(model: ModelUnderTest, space: FeatureSpace) -> None:
    """External models announce their shape; hold them to the space's."""
    if not isinstance(model, ExternalModel):
        return
    if model.features != space.n_features or model.classes != space.n_classes:
        raise ProtocolError(
            f"external model serves {model.features} features and "
            f"{model.classes} classes; the constraint space has "
            f"{space.n_features} and {space.n_classes}"
        )


def run_cell(task: PlanTask, method: str, repetition: int, seed: int) -> CellRecord:
    """One method, one seed, one freshly resolved model, plus the audit."""
    constraint, space, dataset = task_context(task)
    try:
        model, closer = resolve_model(task.model, dataset, task.train_seed)
        try:
            check_space_agreement(model, space)
            report = _run_method(model, constraint, space, dataset, method,
                                 seed, task.budgets)
            _audit_report(model, constraint, space, report)
        finally:
            if closer is not None:
                closer()
    except ModelError as exc:
        return CellRecord(task.name, method, repetition, seed, error=str(exc))
    return CellRecord(task.name, method, repetition, seed, report=report)


def _run_method(
    model: ModelUnderTest,
    constraint: MonotonicityConstraint,
    space: FeatureSpace,
    dataset: Dataset | None,
    method: str,
    seed: int,
    b: Budgets,
) -> TestReport:
    if method == METHOD_VBT:
        cfg = VbtConfig(
            seed=seed, max_orcl=b.max_orcl, max_samples=b.max_samples,
            training_data=dataset, training_mix=b.training_mix,
            stop_at_first=b.stop_at_first, pruning=b.pruning,
        )
        return veri_test(model, constraint, space, cfg)
    if method == METHOD_ART:
        cfg = ArtConfig(
            seed=seed, ini_samples=b.ini_samples, pool_size=b.pool_size,
            max_samples=b.max_samples, stop_at_first=b.stop_at_first,
        )
        return art_test(model, constraint, space, cfg)
    if method == METHOD_PT:
        cfg = PtConfig(
            seed=seed, max_samples=b.max_samples,
            stop_at_first=b.stop_at_first,
        )
        return pt_test(model, constraint, space, cfg)
    raise ConfigError(f"unknown method {method!r}")


def _audit_report(
    model: ModelUnderTest,
    constraint: MonotonicityConstraint,
    space: FeatureSpace,
    report: TestReport,
) -> None:
    """Re-validate every reported counterexample against the model."""
    for cex in report.counter_examples:
        if not precondition_holds(cex.x, cex.x_prime, constraint, space):
            raise ModelError(f"audit: precondition fails for {cex.pair}")
        y = model.predict(cex.x)
        y_prime = model.predict(cex.x_prime)
        if (y, y_prime) != (cex.y, cex.y_prime):
            raise ModelError(
                f"audit: model answered {(y, y_prime)} for {cex.pair}, "
                f"report says {(cex.y, cex.y_prime)}"
            )
        if not is_violation(y, y_prime):
            raise ModelError(f"audit: {cex.pair} is not a violation")


def _run_cell_args(args) -> CellRecord:
    return run_cell(*args)


def run_plan(plan: ExperimentPlan, workers: int = 1) -> RunReport:
    """Every cell of the plan, optionally on a process pool.

    Cell order (and the report) is deterministic either way: tasks in
    plan order, methods in task order, repetitions in seed order.
    """
    if workers < 1:
        raise ConfigError("workers must be >= 1")
    cells = [
        (task, method, repetition, seed)
        for task in plan.tasks
        for method in task.methods
        for repetition, seed in enumerate(task.seeds)
    ]
    if workers == 1 or len(cells) <= 1:
        records = [run_cell(*c) for c in cells]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_run_cell_args, cells))
    return RunReport(tuple(records))


def detection_rate_sweep(plan: ExperimentPlan, pruning: str) -> dict[str, float]:
    """Validated counterexamples per generated test, per task, with VBT
    running exactly one pruning strategy. Needs stop_at_first=false so
    the rate reflects the whole budget, not the first hit."""
    if pruning not in (PRUNE_INSTANCES, PRUNE_BRANCHES):
        raise ConfigError("sweep pruning must be 'instances' or 'branches'")
    for task in plan.tasks:
        if task.budgets.stop_at_first:
            raise ConfigError(
                f"task {task.name}: the sweep needs stop_at_first=false"
            )
    restricted = ExperimentPlan(tuple(
        replace(task, methods=(METHOD_VBT,),
                budgets=replace(task.budgets, pruning=pruning))
        for task in plan.tasks
    ))
    report = run_plan(restricted)
    rates: dict[str, float] = {}
    for task in plan.tasks:
        ok = [r.report for r in report.cells(task.name, METHOD_VBT) if r.ok]
        tests = sum(r.tests_generated for r in ok)
        hits = sum(len(r.counter_examples) for r in ok)
        rates[task.name] = hits / tests if tests else 0.0
    return rates


# -- plan files ---------------------------------------------------------------


def load_plan(path: str | Path) -> ExperimentPlan:
    """Plan from a JSON file; relative data/constraint paths are taken
    relative to the plan file's directory."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except OSError as e:
        raise IngestError(f"cannot read plan {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise IngestError(f"plan {path} is not valid JSON: {e}") from e
    if not isinstance(raw, dict) or not isinstance(raw.get("tasks"), list):
        raise IngestError(f"plan {path} must be an object with a 'tasks' list")
    base = path.parent
    known = {"name", "model", "constraint", "data", "methods", "seeds",
             "budgets", "train_seed"}
    tasks = []
    for i, entry in enumerate(raw["tasks"]):
        if not isinstance(entry, dict):
            raise IngestError(f"plan task {i} must be an object")
        extra = set(entry) - known
        if extra:
            raise IngestError(f"plan task {i}: unknown keys {sorted(extra)}")
        for key in ("name", "model", "constraint"):
            if key not in entry:
                raise IngestError(f"plan task {i}: missing {key!r}")
        budgets = entry.get("budgets", {})
        if not isinstance(budgets, dict):
            raise IngestError(f"plan task {i}: budgets must be an object")
        try:
            task = PlanTask(
                name=str(entry["name"]),
                model=str(entry["model"]),
                constraint=str(_rebase(base, entry["constraint"])),
                data=(
                    str(_rebase(base, entry["data"]))
                    if entry.get("data") is not None else None
                ),
                methods=tuple(entry.get("methods", METHODS)),
                seeds=tuple(entry.get("seeds", (0,))),
                budgets=Budgets(**budgets),
                train_seed=entry.get("train_seed", 0),
            )
        except TypeError as e:
            raise IngestError(f"plan task {i}: {e}") from e
        tasks.append(task)
    return ExperimentPlan(tuple(tasks))


def _rebase(base: Path, value) -> Path:
    p = Path(str(value))
    return p if p.is_absolute() else base / p
