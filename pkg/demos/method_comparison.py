"""Compare the three testing methods on a slice of the benchmark.

Runs verification-based testing, adaptive random testing, and plain
property-based testing on three of the bundled non-monotone models,
three seeds each, and prints detections plus how much work each method
needed before its first hit.

Usage: python method_comparison.py [seed ...]
"""

import sys

from monocheck import Budgets, ExperimentPlan, run_plan
from monocheck.suite import SUITE, suite_task

ENTRIES = ("tree-broad-dip", "forest-ridge-notch", "knn-pocket")


def main() -> None:
    seeds = tuple(int(s) for s in sys.argv[1:]) or (0, 1, 2)
    budgets = Budgets(max_samples=500, max_orcl=500)
    plan = ExperimentPlan(tuple(
        suite_task(e, seeds=seeds, budgets=budgets)
        for e in SUITE if e.name in ENTRIES
    ))
    print(f"{len(plan.tasks)} models x 3 methods x {len(seeds)} seeds ...")
    report = run_plan(plan)

    agg = report.aggregates()
    print()
    print(f"{'task':<22}{'method':<8}{'detected':<10}"
          f"{'mean failed attempts':<22}{'mean tests'}")
    for task, per_method in agg.items():
        for method, row in per_method.items():
            print(f"{task:<22}{method:<8}"
                  f"{row['detections']}/{row['repetitions']:<8}"
                  f"{row['mean_failed_attempts']:<22.1f}"
                  f"{row['mean_tests_generated']:.1f}")

    print()
    print("detection overlap (which methods caught which model):")
    for region, tasks in report.overlap().items():
        if tasks:
            print(f"  {region}: {', '.join(tasks)}")


if __name__ == "__main__":
    main()
