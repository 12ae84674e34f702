"""Axis-aligned binary decision trees: CART learner, predictor, paths.

Trees serve double duty: as the surrogate model the verification-based
tester searches, and as a built-in model under test. Split semantics are
strictly `value < threshold` to the left, `value >= threshold` to the
right; thresholds are midpoints between consecutive distinct sorted values
of the training column, so integer features get x.5 thresholds.

Determinism: the learner contains no randomness unless per-node feature
subsampling is switched on, and ties are broken by lowest Gini, then lowest
feature index, then lowest threshold. Leaves predict the majority rank,
ties resolved toward the lowest rank.

Serialized form (one tree per file, line-oriented text):

    treemodel 1
    features <n_features>
    classes <n_classes>
    nodes <count>
    <idx> split <feature> <threshold> <left-idx> <right-idx>
    <idx> leaf <rank>
    ...

Node 0 is the root; indices are contiguous; thresholds use shortest
round-trip float form.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import IngestError, InputError, Instance, Rng
from .datasets import Dataset


@dataclass(frozen=True)
class Split:
    feature: int
    threshold: float
    left: int
    right: int


@dataclass(frozen=True)
class Leaf:
    rank: int


Node = Split | Leaf


@dataclass(frozen=True)
class PathCondition:
    """One edge of a root-to-leaf path: value < t (geq=False) or >= t."""

    feature: int
    threshold: float
    geq: bool

    def holds(self, x: Instance) -> bool:
        return (x[self.feature] >= self.threshold) == self.geq

    def __str__(self) -> str:
        op = ">=" if self.geq else "<"
        return f"f{self.feature} {op} {self.threshold!r}"


@dataclass(frozen=True)
class TreeParams:
    """Learner knobs. max_features enables per-node feature subsampling."""

    max_depth: int = 20
    min_samples_leaf: int = 1
    max_features: int | None = None

    def __post_init__(self) -> None:
        if self.max_depth < 1:
            raise InputError("max_depth must be >= 1")
        if self.min_samples_leaf < 1:
            raise InputError("min_samples_leaf must be >= 1")
        if self.max_features is not None and self.max_features < 1:
            raise InputError("max_features must be >= 1")


@dataclass(frozen=True)
class TreeModel:
    """Immutable node-array tree; node 0 is the root."""

    nodes: tuple[Node, ...]
    n_features: int
    n_classes: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "nodes", tuple(self.nodes))
        if not self.nodes:
            raise InputError("tree needs at least one node")
        if self.n_features < 1 or self.n_classes < 2:
            raise InputError("tree needs >= 1 feature and >= 2 classes")
        seen = set()
        stack = [0]
        while stack:
            i = stack.pop()
            if i in seen:
                raise InputError(f"node {i} reachable twice (tree not a tree)")
            if not 0 <= i < len(self.nodes):
                raise InputError(f"child index {i} out of range")
            seen.add(i)
            node = self.nodes[i]
            if isinstance(node, Split):
                if not 0 <= node.feature < self.n_features:
                    raise InputError(f"node {i}: bad feature {node.feature}")
                if not np.isfinite(node.threshold):
                    raise InputError(f"node {i}: non-finite threshold")
                stack.extend((node.left, node.right))
            elif isinstance(node, Leaf):
                if not 0 <= node.rank < self.n_classes:
                    raise InputError(f"node {i}: rank {node.rank} out of range")
            else:
                raise InputError(f"node {i}: unknown node type {node!r}")
        if len(seen) != len(self.nodes):
            raise InputError("tree has unreachable nodes")

    def predict(self, x: Instance) -> int:
        if len(x) != self.n_features:
            raise InputError(
                f"instance has {len(x)} values, tree expects {self.n_features}"
            )
        node = self.nodes[0]
        while isinstance(node, Split):
            node = self.nodes[node.left if x[node.feature] < node.threshold
                              else node.right]
        return node.rank

    def leaf_index(self, x: Instance) -> int:
        """Node index of the leaf x falls into."""
        if len(x) != self.n_features:
            raise InputError(
                f"instance has {len(x)} values, tree expects {self.n_features}"
            )
        i = 0
        node = self.nodes[0]
        while isinstance(node, Split):
            i = node.left if x[node.feature] < node.threshold else node.right
            node = self.nodes[i]
        return i

    def get_path(self, x: Instance) -> tuple[PathCondition, ...]:
        """Conditions satisfied along x's traversal, in root-first order."""
        if len(x) != self.n_features:
            raise InputError(
                f"instance has {len(x)} values, tree expects {self.n_features}"
            )
        path = []
        node = self.nodes[0]
        while isinstance(node, Split):
            geq = x[node.feature] >= node.threshold
            path.append(PathCondition(node.feature, node.threshold, geq))
            node = self.nodes[node.right if geq else node.left]
        return tuple(path)

    def leaves(self) -> list[tuple[int, int]]:
        """(node index, rank) for every leaf, in node-index order."""
        return [
            (i, n.rank) for i, n in enumerate(self.nodes) if isinstance(n, Leaf)
        ]

    def depth(self) -> int:
        def walk(i: int) -> int:
            n = self.nodes[i]
            if isinstance(n, Leaf):
                return 0
            return 1 + max(walk(n.left), walk(n.right))

        return walk(0)


def _best_split(
    X: np.ndarray, y: np.ndarray, features: np.ndarray, n_classes: int, msl: int
) -> tuple[float, int, float] | None:
    """Lowest-Gini (feature, threshold) over candidate midpoints, or None.

    Candidates are midpoints between consecutive distinct sorted values
    with both sides >= msl rows. Ties: lowest feature, lowest threshold.
    """
    m = len(y)
    best: tuple[float, int, float] | None = None
    for f in features:
        vals = X[:, f]
        order = np.argsort(vals, kind="stable")
        sv = vals[order]
        sy = y[order]
        if sv[0] == sv[-1]:
            continue
        onehot = np.zeros((m, n_classes))
        onehot[np.arange(m), sy] = 1.0
        cum = onehot.cumsum(axis=0)
        total = cum[-1]
        sizes = np.arange(1, m)
        left = cum[:-1]
        right = total[None, :] - left
        gini_l = 1.0 - ((left / sizes[:, None]) ** 2).sum(axis=1)
        gini_r = 1.0 - ((right / (m - sizes)[:, None]) ** 2).sum(axis=1)
        weighted = (sizes * gini_l + (m - sizes) * gini_r) / m
        mask = (sv[1:] != sv[:-1]) & (sizes >= msl) & ((m - sizes) >= msl)
        if not mask.any():
            continue
        cand = np.flatnonzero(mask)
        pick = cand[int(np.argmin(weighted[cand]))]
        gini = float(weighted[pick])
        if best is None or gini < best[0]:
            thr = float((sv[pick] + sv[pick + 1]) / 2.0)
            best = (gini, int(f), thr)
    return best


def train(data: Dataset, params: TreeParams = TreeParams(),
          rng: Rng | None = None) -> TreeModel:
    """Greedy CART with Gini impurity; see the module docstring for rules."""
    if len(data) == 0:
        raise InputError("cannot train a tree on an empty dataset")
    if params.max_features is not None and rng is None:
        raise InputError("feature subsampling needs an rng")
    space = data.space
    n_features = space.n_features
    n_classes = space.n_classes
    X = np.array([list(x) for x, _ in data.rows], dtype=np.float64)
    y = np.array([label for _, label in data.rows], dtype=np.intp)
    msl = params.min_samples_leaf
    sub = params.max_features
    if sub is not None:
        sub = min(sub, n_features)
    nodes: list[Node | None] = []

    def build(idx: np.ndarray, depth: int) -> int:
        labels = y[idx]
        counts = np.bincount(labels, minlength=n_classes)
        majority = int(np.argmax(counts))
        pure = int((counts > 0).sum()) <= 1
        if pure or depth >= params.max_depth or len(idx) < 2 * msl:
            nodes.append(Leaf(majority))
            return len(nodes) - 1
        if sub is None:
            feats = np.arange(n_features)
        else:
            feats = np.sort(rng.choice(n_features, size=sub, replace=False))
        found = _best_split(X[idx], labels, feats, n_classes, msl)
        if found is None:
            nodes.append(Leaf(majority))
            return len(nodes) - 1
        _, f, thr = found
        here = len(nodes)
        nodes.append(None)
        go_left = X[idx, f] < thr
        left = build(idx[go_left], depth + 1)
        right = build(idx[~go_left], depth + 1)
        nodes[here] = Split(f, thr, left, right)
        return here

    build(np.arange(len(y), dtype=np.intp), 0)
    return TreeModel(tuple(nodes), n_features, n_classes)


def predict(tree: TreeModel, x: Instance) -> int:
    return tree.predict(x)


def get_path(tree: TreeModel, x: Instance) -> tuple[PathCondition, ...]:
    return tree.get_path(x)


def dump_tree(tree: TreeModel) -> str:
    """Serialize to the line-oriented text format (module docstring)."""
    lines = [
        "treemodel 1",
        f"features {tree.n_features}",
        f"classes {tree.n_classes}",
        f"nodes {len(tree.nodes)}",
    ]
    for i, node in enumerate(tree.nodes):
        if isinstance(node, Split):
            lines.append(
                f"{i} split {node.feature} {float(node.threshold)!r} "
                f"{node.left} {node.right}"
            )
        else:
            lines.append(f"{i} leaf {node.rank}")
    return "\n".join(lines) + "\n"


def load_tree(text: str) -> TreeModel:
    """Parse the dump_tree format; malformed input raises IngestError."""
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0].split() != ["treemodel", "1"]:
        raise IngestError("not a treemodel-v1 dump")

    def header(i: int, key: str) -> int:
        parts = lines[i].split()
        if len(parts) != 2 or parts[0] != key:
            raise IngestError(f"expected '{key} <n>' on line {i + 1}")
        try:
            return int(parts[1])
        except ValueError:
            raise IngestError(f"bad count on line {i + 1}") from None

    n_features = header(1, "features")
    n_classes = header(2, "classes")
    count = header(3, "nodes")
    body = lines[4:]
    if len(body) != count:
        raise IngestError(f"expected {count} node lines, found {len(body)}")
    nodes: list[Node] = []
    for ln, line in enumerate(body, start=5):
        parts = line.split()
        try:
            idx = int(parts[0])
            if idx != len(nodes):
                raise ValueError
            if parts[1] == "split" and len(parts) == 6:
                nodes.append(
                    Split(int(parts[2]), float(parts[3]),
                          int(parts[4]), int(parts[5]))
                )
            elif parts[1] == "leaf" and len(parts) == 3:
                nodes.append(Leaf(int(parts[2])))
            else:
                raise ValueError
        except (ValueError, IndexError):
            raise IngestError(f"bad node on line {ln}: {line!r}") from None
    try:
        return TreeModel(tuple(nodes), n_features, n_classes)
    except InputError as e:
        raise IngestError(f"inconsistent tree dump: {e}") from e
