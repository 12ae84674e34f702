"""How many violations does one solver query yield, per pruning strategy?

The surrogate verifier can vary a found witness in two ways: excluding
single witness values (instance pruning) or toggling path conditions
(branch pruning). This sweep runs each strategy alone over part of the
benchmark with stop-at-first disabled and reports validated
counterexamples per generated test.
"""

from monocheck import Budgets, ExperimentPlan
from monocheck.harness import detection_rate_sweep
from monocheck.suite import SUITE, suite_task

ENTRIES = ("tree-broad-dip", "tree-thin-shelf", "forest-ridge-notch",
           "knn-smooth-pocket")


def main() -> None:
    budgets = Budgets(max_samples=500, max_orcl=500, stop_at_first=False)
    plan = ExperimentPlan(tuple(
        suite_task(e, seeds=(0, 1, 2), budgets=budgets)
        for e in SUITE if e.name in ENTRIES
    ))
    rates = {
        pruning: detection_rate_sweep(plan, pruning)
        for pruning in ("instances", "branches")
    }
    print(f"{'task':<22}{'instances':<12}{'branches'}")
    for name in sorted(rates["instances"]):
        print(f"{name:<22}{rates['instances'][name]:<12.4f}"
              f"{rates['branches'][name]:.4f}")
    print()
    print("Rates are validated counterexamples / tests generated; which")
    print("strategy wins depends on the model's shape.")


if __name__ == "__main__":
    main()
