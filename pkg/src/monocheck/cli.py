"""The monocheck command.

Three subcommands:

    test       one model, one constraint, one method, one seed
    bench      a whole plan file: tasks x methods x repetitions
    surrogate  learn and dump the decision-tree stand-in for a model

Exit codes: 0 when the run completed (whatever the verdict), 1 for
usage, configuration, or input problems, 2 when the model under test
or its wire protocol failed.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .core import ModelError, MonocheckError, make_rng
from .datasets import load_constraint_spec, load_csv
from .harness import (
    METHODS,
    Budgets,
    PlanTask,
    RunReport,
    check_space_agreement,
    load_plan,
    resolve_model,
    run_cell,
    run_plan,
)
from .tree import TreeParams, dump_tree, train
from .vbt import PRUNE_BOTH, PRUNE_BRANCHES, PRUNE_INSTANCES, VbtConfig, generate_oracle
from .verifier import smtlib_dump

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_MODEL = 2

_MAX_PRINTED_CEX = 10


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits the process on errors; surface them as code 1 instead
    def error(self, message):
        raise _UsageError(message)


def _add_model_args(p: argparse.ArgumentParser) -> None:
    p.add_argument(
        "--model", required=True,
        help="model source: tree-file:PATH, tree[:k=v,...], forest[:...], "
             "knn[:...], logreg[:...], or external:COMMAND")
    p.add_argument("--constraint", required=True,
                   help="constraint spec file (JSON)")
    p.add_argument("--data",
                   help="training CSV; needed by the trainable kinds")
    p.add_argument("--train-seed", type=int, default=0,
                   help="seed for model training randomness (default 0)")


def build_parser() -> _Parser:
    p = _Parser(prog="monocheck",
                description="Monotonicity testing for black-box classifiers.")
    p.add_argument("--version", action="version",
                   version=f"monocheck {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser(
        "test", help="run one test method against one model",
        description="Run one method with one seed and report the verdict. "
                    "Every counterexample is validated against the model "
                    "before it is reported.")
    _add_model_args(t)
    t.add_argument("--method", required=True, choices=METHODS)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--max-samples", type=int, default=1000,
                   help="test-pair budget (default 1000)")
    t.add_argument("--max-orcl", type=int, default=1000,
                   help="oracle size for vbt (default 1000)")
    t.add_argument("--ini-samples", type=int, default=100,
                   help="adaptive random warm-up pairs (default 100)")
    t.add_argument("--pool-size", type=int, default=50,
                   help="adaptive random candidate pool (default 50)")
    t.add_argument("--pruning",
                   choices=(PRUNE_INSTANCES, PRUNE_BRANCHES, PRUNE_BOTH),
                   default=PRUNE_BOTH,
                   help="vbt search-space pruning (default both)")
    t.add_argument("--training-mix", type=float, default=None,
                   help="fraction of the vbt oracle drawn from --data rows")
    t.add_argument("--no-stop-at-first", action="store_true",
                   help="keep testing after the first counterexample")
    t.add_argument("--out", help="also write the run record as JSON")
    t.set_defaults(func=_cmd_test)

    b = sub.add_parser(
        "bench", help="run a plan file",
        description="Run every cell of a JSON plan and write one report. "
                    "A model failure marks its cell failed and the run "
                    "continues; the exit code is 2 when any cell failed.")
    b.add_argument("--plan", required=True, help="plan file (JSON)")
    b.add_argument("--workers", type=int, default=1,
                   help="process pool size for plan cells (default 1)")
    b.add_argument("--out", help="write the full report as JSON")
    b.set_defaults(func=_cmd_bench)

    s = sub.add_parser(
        "surrogate", help="learn and dump a model's decision-tree stand-in",
        description="Sample an oracle from the model, fit the tree the "
                    "verification method would search, write its "
                    "serialization to --dump, and print the non-monotonicity "
                    "query as SMT-LIB text.")
    _add_model_args(s)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--max-orcl", type=int, default=1000,
                   help="oracle size (default 1000)")
    s.add_argument("--dump", required=True,
                   help="file for the fitted tree's serialization")
    s.set_defaults(func=_cmd_surrogate)
    return p


def _cmd_test(args) -> int:
    budgets = Budgets(
        max_samples=args.max_samples, max_orcl=args.max_orcl,
        ini_samples=args.ini_samples, pool_size=args.pool_size,
        stop_at_first=not args.no_stop_at_first, pruning=args.pruning,
        training_mix=args.training_mix,
    )
    task = PlanTask(
        name=args.model, model=args.model, constraint=args.constraint,
        data=args.data, methods=(args.method,), seeds=(args.seed,),
        budgets=budgets, train_seed=args.train_seed,
    )
    record = run_cell(task, args.method, 0, args.seed)
    if args.out:
        _write_json(args.out, RunReport((record,)).to_dict())
    if record.error is not None:
        print(f"model failure: {record.error}", file=sys.stderr)
        return EXIT_MODEL

    spec = load_constraint_spec(args.constraint)
    labels = tuple(spec.class_order)
    r = record.report
    print(f"verdict: {r.verdict}")
    print(f"method: {r.method}  seed: {r.seed}")
    print(f"tests generated: {r.tests_generated}  "
          f"failed attempts: {r.failed_attempts}  "
          f"wall time: {r.wall_time:.3f}s")
    if r.retrainings is not None:
        print(f"retrainings: {r.retrainings}  oracle size: {r.oracle_size}")
    for cex in r.counter_examples[:_MAX_PRINTED_CEX]:
        print(f"  {_fmt(cex.x)} -> {labels[cex.y]}  but  "
              f"{_fmt(cex.x_prime)} -> {labels[cex.y_prime]}")
    hidden = len(r.counter_examples) - _MAX_PRINTED_CEX
    if hidden > 0:
        print(f"  ... and {hidden} more")
    return EXIT_OK


def _cmd_bench(args) -> int:
    plan = load_plan(args.plan)
    report = run_plan(plan, workers=args.workers)
    if args.out:
        _write_json(args.out, report.to_dict())
    aggregates = report.aggregates()
    for task_name, per_method in aggregates.items():
        for method, entry in per_method.items():
            line = (f"{task_name}  {method}: "
                    f"{entry['detections']}/{entry['repetitions']} detected")
            if entry["failed_cells"]:
                line += f", {entry['failed_cells']} cells failed"
            print(line)
    for record in report.records:
        if record.error is not None:
            print(f"cell failed: {record.task}/{record.method} "
                  f"seed {record.seed}: {record.error}", file=sys.stderr)
    return EXIT_OK if report.all_ok else EXIT_MODEL


def _cmd_surrogate(args) -> int:
    spec = load_constraint_spec(args.constraint)
    dataset = load_csv(args.data, spec) if args.data else None
    space = dataset.space if dataset is not None else spec.build_space()
    constraint = spec.constraint(space)
    model, closer = resolve_model(args.model, dataset, args.train_seed)
    try:
        check_space_agreement(model, space)
        cfg = VbtConfig(seed=args.seed, max_orcl=args.max_orcl)
        oracle = generate_oracle(model, space, cfg, make_rng(cfg.seed))
        surrogate = train(oracle, TreeParams())
    finally:
        if closer is not None:
            closer()
    Path(args.dump).write_text(dump_tree(surrogate), encoding="utf-8")
    print(smtlib_dump(surrogate, constraint, space))
    return EXIT_OK


def _fmt(x) -> str:
    return "(" + ", ".join(f"{v:g}" for v in x) + ")"


def _write_json(path: str, payload: dict) -> None:
    Path(path).write_text(json.dumps(payload, indent=2) + "\n",
                          encoding="utf-8")


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as e:  # --help and --version
        return int(e.code or 0)
    try:
        return args.func(args)
    except ModelError as e:
        print(f"model failure: {e}", file=sys.stderr)
        return EXIT_MODEL
    except MonocheckError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
