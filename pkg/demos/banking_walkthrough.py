"""Walk through the loan example bundled with the package.

A small decision tree grants loans from income, number of children, and
requested contract length. Intuitively a longer contract should never
IMPROVE the decision, yet this tree is not monotone in the contract
feature: the walkthrough first shows the offending pair directly, then
lets the exact verifier and the surrogate-based tester find it.

Usage: python banking_walkthrough.py
"""

from monocheck import VbtConfig, veri_test
from monocheck.banking import (
    CONTRACT,
    example_constraint,
    example_tree,
    example_tree_space,
)
from monocheck.verifier import find_counterexample


def main() -> None:
    tree = example_tree()
    space = example_tree_space()
    c = example_constraint()
    names = space.class_labels

    print("The model under test:")
    print("  contract < 10:  income < 30 -> no,     income >= 30 -> high")
    print("  contract >= 10: income < 50 -> medium, income >= 50 -> high")
    print()

    a, b = (30.0, 0, 9), (30.0, 0, 10)
    print("Same applicant, one month more contract:")
    for x in (a, b):
        print(f"  income={x[0]}, children={x[1]}, contract={x[2]}"
              f" -> {names[tree.predict(x)]}")
    print()
    print("The longer contract DOWNGRADES the decision, so the tree is not")
    print(f"monotone in feature {CONTRACT} (contract length).")
    print()

    w = find_counterexample(tree, c, space)
    print("The exact verifier searches all leaf pairs and returns the same")
    print("pair as its first witness:")
    print(f"  x  = {w.x}  ({names[w.class1]})")
    print(f"  x' = {w.x_prime}  ({names[w.class2]})")
    print()

    print("The black-box loop (oracle sampling, surrogate tree, exact search")
    print("on the surrogate, validation against the model) finds it too:")
    r = veri_test(tree, c, space, VbtConfig(seed=0, max_orcl=400))
    print(f"  verdict: {r.verdict}")
    print(f"  tests generated: {r.tests_generated},"
          f" failed attempts: {r.failed_attempts},"
          f" retrainings: {r.retrainings}")
    for cex in r.counter_examples:
        print(f"  validated pair: {cex.x} ({names[cex.y]})"
              f" vs {cex.x_prime} ({names[cex.y_prime]})")


if __name__ == "__main__":
    main()
