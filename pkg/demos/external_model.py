"""Test a model that lives in another process.

Any executable speaking the line protocol (one JSON object per line on
stdin/stdout: hello, predict, bye) can be tested without importing it.
This script plays both sides: run without arguments it serializes the
bundled loan tree, starts a copy of itself as the serving process, and
tests the model through the adapter; with --serve FILE it is that
serving process.

The server half deliberately uses nothing but the serialized tree file
and stdlib json, the way an external model wrapper in another stack
would.
"""

import json
import sys
import tempfile
from pathlib import Path


def serve(tree_file: str) -> None:
    lines = Path(tree_file).read_text(encoding="utf-8").splitlines()
    n_features = int(lines[1].split()[1])
    n_classes = int(lines[2].split()[1])
    nodes = []
    for line in lines[4:]:
        parts = line.split()
        if parts[1] == "leaf":
            nodes.append(("leaf", int(parts[2])))
        else:
            nodes.append(("split", int(parts[2]), float(parts[3]),
                          int(parts[4]), int(parts[5])))

    def predict(x):
        i = 0
        while nodes[i][0] == "split":
            _, f, thr, left, right = nodes[i]
            i = left if x[f] < thr else right
        return nodes[i][1]

    for raw in sys.stdin:
        msg = json.loads(raw)
        if msg["op"] == "hello":
            out = {"features": n_features, "classes": n_classes}
        elif msg["op"] == "predict":
            out = {"y": predict(msg["x"])}
        else:
            break
        print(json.dumps(out), flush=True)


def main() -> None:
    from monocheck import VbtConfig, veri_test
    from monocheck.banking import (
        example_constraint,
        example_tree,
        example_tree_space,
    )
    from monocheck.models import ExternalModel
    from monocheck.tree import dump_tree

    with tempfile.NamedTemporaryFile("w", suffix=".tree", delete=False) as f:
        f.write(dump_tree(example_tree()))
        path = f.name

    model = ExternalModel([sys.executable, __file__, "--serve", path])
    try:
        print(f"handshake: {model.features} features,"
              f" {model.classes} classes")
        print(f"predict (30.0, 0, 9)  -> rank {model.predict((30.0, 0, 9))}")
        print(f"predict (30.0, 0, 10) -> rank {model.predict((30.0, 0, 10))}")
        print()
        r = veri_test(model, example_constraint(), example_tree_space(),
                      VbtConfig(seed=0, max_orcl=400))
        print(f"verdict through the adapter: {r.verdict}")
        for cex in r.counter_examples:
            print(f"  {cex.x} -> class {cex.y},"
                  f" {cex.x_prime} -> class {cex.y_prime}")
    finally:
        model.close()
        Path(path).unlink()


if __name__ == "__main__":
    if len(sys.argv) == 3 and sys.argv[1] == "--serve":
        serve(sys.argv[2])
    else:
        main()
