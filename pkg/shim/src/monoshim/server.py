"""Serve a model on stdin/stdout, one JSON object per line.

    monoshim --tree model.tree
    monoshim --module mypackage.mymodel

Requests and responses (UTF-8, newline-delimited, flushed per line):

    -> {"op": "hello"}
    <- {"features": 3, "classes": 4}
    -> {"op": "predict", "x": [30.0, 0, 9]}
    <- {"y": 2}
    -> {"op": "bye"}                   server exits, no response

A malformed request (bad JSON, unknown op, wrong arity, non-numeric
values, a predict call that raises) gets `{"error": "<message>"}` and
the loop continues; EOF is a clean exit. The loop is single-threaded,
one request in flight.

--tree reads the line-oriented tree format: a `treemodel 1` header,
`features`/`classes`/`nodes` counts, then one node per line, either
`<i> split <feature> <threshold> <left> <right>` or `<i> leaf <rank>`.
Instances go left when x[feature] < threshold. --module imports the
named module, which must expose predict(x) -> int plus integer
FEATURES and CLASSES attributes. No training happens here and nothing
beyond the standard library is used, so the file doubles as a template
for wrapping real models from any ML stack.
"""

from __future__ import annotations

import argparse
import importlib
import json
import math
import operator
import sys
from pathlib import Path


class ShimError(Exception):
    """Startup problem: unreadable model source."""


class TreeFile:
    """A parsed tree file: predict plus the two handshake counts."""

    def __init__(self, features: int, classes: int, nodes: list[tuple]):
        self.features = features
        self.classes = classes
        self.nodes = nodes

    def predict(self, x) -> int:
        node = self.nodes[0]
        while node[0] == "split":
            _, feature, threshold, left, right = node
            node = self.nodes[left if x[feature] < threshold else right]
        return node[1]


def load_tree_file(path: str) -> TreeFile:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ShimError(f"cannot read {path}: {exc}") from exc
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if len(lines) < 5 or lines[0].split() != ["treemodel", "1"]:
        raise ShimError(f"{path}: not a treemodel-v1 file")

    def count(i: int, key: str) -> int:
        parts = lines[i].split()
        if len(parts) != 2 or parts[0] != key or not parts[1].isdigit():
            raise ShimError(f"{path}: expected '{key} <n>' on line {i + 1}")
        return int(parts[1])

    features = count(1, "features")
    classes = count(2, "classes")
    n = count(3, "nodes")
    if features < 1 or classes < 2:
        raise ShimError(f"{path}: bad feature or class count")
    body = lines[4:]
    if len(body) != n:
        raise ShimError(f"{path}: expected {n} nodes, found {len(body)}")

    nodes: list[tuple] = []
    children: list[int] = []
    for i, line in enumerate(body):
        parts = line.split()
        try:
            if int(parts[0]) != i:
                raise ValueError
            if parts[1] == "leaf" and len(parts) == 3:
                rank = int(parts[2])
                if not 0 <= rank < classes:
                    raise ValueError
                nodes.append(("leaf", rank))
            elif parts[1] == "split" and len(parts) == 6:
                feature, threshold = int(parts[2]), float(parts[3])
                left, right = int(parts[4]), int(parts[5])
                if not (0 <= feature < features and math.isfinite(threshold)
                        and 0 <= left < n and 0 <= right < n):
                    raise ValueError
                nodes.append(("split", feature, threshold, left, right))
                children += [left, right]
            else:
                raise ValueError
        except (ValueError, IndexError):
            raise ShimError(f"{path}: bad node line {i + 5}: {line!r}") from None
    # each node has at most one parent and the root is node 0, so every
    # predict walk visits fresh nodes and must terminate
    if len(children) != len(set(children)) or 0 in children:
        raise ShimError(f"{path}: node links do not form a tree")
    return TreeFile(features, classes, nodes)


def load_module(name: str):
    try:
        mod = importlib.import_module(name)
    except ImportError as exc:
        raise ShimError(f"cannot import {name}: {exc}") from exc
    predict = getattr(mod, "predict", None)
    features = getattr(mod, "FEATURES", None)
    classes = getattr(mod, "CLASSES", None)
    if not callable(predict):
        raise ShimError(f"{name} has no predict(x) function")
    if not isinstance(features, int) or isinstance(features, bool) \
            or features < 1:
        raise ShimError(f"{name}.FEATURES must be a positive int")
    if not isinstance(classes, int) or isinstance(classes, bool) \
            or classes < 2:
        raise ShimError(f"{name}.CLASSES must be an int >= 2")
    return mod


def _checked_x(msg: dict, features: int) -> list:
    x = msg.get("x")
    if not isinstance(x, list):
        raise ValueError("predict needs an 'x' list")
    if len(x) != features:
        raise ValueError(f"expected {features} values, got {len(x)}")
    for v in x:
        if isinstance(v, bool) or not isinstance(v, (int, float)) \
                or not math.isfinite(v):
            raise ValueError(f"non-numeric value {v!r} in x")
    return x


def serve(model, stdin=None, stdout=None) -> None:
    """Answer requests until bye or EOF; never dies on a bad line."""
    stdin = stdin if stdin is not None else sys.stdin
    stdout = stdout if stdout is not None else sys.stdout

    def reply(obj: dict) -> None:
        stdout.write(json.dumps(obj) + "\n")
        stdout.flush()

    for raw in stdin:
        try:
            msg = json.loads(raw)
            if not isinstance(msg, dict):
                raise ValueError("request must be a JSON object")
            op = msg.get("op")
            if op == "bye":
                return
            if op == "hello":
                reply({"features": model.features, "classes": model.classes})
            elif op == "predict":
                x = _checked_x(msg, model.features)
                reply({"y": operator.index(model.predict(x))})
            else:
                raise ValueError(f"unknown op {op!r}")
        except Exception as exc:  # keep serving whatever came in
            reply({"error": str(exc)})


class _ModuleModel:
    def __init__(self, mod):
        self.features = mod.FEATURES
        self.classes = mod.CLASSES
        self.predict = mod.predict


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="monoshim",
        description="Serve a model over newline-delimited JSON on stdio.",
    )
    source = parser.add_mutually_exclusive_group(required=True)
    source.add_argument("--tree", metavar="FILE",
                        help="serialized decision tree to serve")
    source.add_argument("--module", metavar="NAME",
                        help="module exposing predict, FEATURES, CLASSES")
    args = parser.parse_args(argv)
    try:
        if args.tree:
            model = load_tree_file(args.tree)
        else:
            model = _ModuleModel(load_module(args.module))
    except ShimError as exc:
        print(f"monoshim: {exc}", file=sys.stderr)
        return 1
    serve(model)
    return 0


if __name__ == "__main__":
    sys.exit(main())
