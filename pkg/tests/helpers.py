"""Shared test utilities: tiny spaces, random trees, brute-force oracles.

The oracles here are written independently of the library internals on
purpose: grid enumeration decides monotonicity questions by exhaustive
dynamic programming, and the split-search oracle recomputes Gini the slow
way. Library results are checked against these, never the other way round.
"""

from __future__ import annotations

import numpy as np

from monocheck.core import FeatureSpace, FeatureSpec, MonotonicityConstraint
from monocheck.tree import Leaf, Node, Split, TreeModel


def int_space(widths: list[int], n_classes: int = 3) -> FeatureSpace:
    """All-integer space with feature i ranging over [0, widths[i]]."""
    feats = tuple(
        FeatureSpec(f"f{i}", "integer", 0, w) for i, w in enumerate(widths)
    )
    labels = tuple(f"c{i}" for i in range(n_classes))
    return FeatureSpace(feats, labels)


def random_int_tree(
    space: FeatureSpace, rng: np.random.Generator, max_depth: int = 5,
    leaf_prob: float = 0.3, in_box: bool = True,
) -> TreeModel:
    """Random tree over an all-integer space.

    With in_box=True (default), split thresholds are half-integers chosen
    inside the remaining box of the branch, so both children always
    contain grid points. With in_box=False thresholds range over the full
    feature domain, which can leave some leaves without any grid point.
    """
    n_classes = space.n_classes
    boxes = [(int(f.lower), int(f.upper)) for f in space.features]
    nodes: list[Node | None] = []

    def build(box: list[tuple[int, int]], depth: int) -> int:
        if in_box:
            splittable = [i for i, (lo, hi) in enumerate(box) if hi > lo]
        else:
            splittable = [i for i, (lo, hi) in enumerate(boxes) if hi > lo]
        if depth >= max_depth or not splittable or rng.random() < leaf_prob:
            nodes.append(Leaf(int(rng.integers(n_classes))))
            return len(nodes) - 1
        f = int(splittable[rng.integers(len(splittable))])
        lo, hi = box[f] if in_box else boxes[f]
        k = int(rng.integers(lo, hi))  # threshold between k and k+1
        thr = k + 0.5
        here = len(nodes)
        nodes.append(None)
        left_box = list(box)
        left_box[f] = (box[f][0], k)
        right_box = list(box)
        right_box[f] = (k + 1, box[f][1])
        left = build(left_box, depth + 1)
        right = build(right_box, depth + 1)
        nodes[here] = Split(f, thr, left, right)
        return here

    build(list(boxes), 0)
    return TreeModel(tuple(nodes), space.n_features, n_classes)


def grid_predictions(tree: TreeModel, space: FeatureSpace) -> np.ndarray:
    """Model predictions over the full integer grid, as an nd-array."""
    axes = [
        np.arange(int(f.lower), int(f.upper) + 1) for f in space.features
    ]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=-1).astype(np.float64)
    out = np.empty(pts.shape[0], dtype=np.intp)

    def fill(node_idx: int, rows: np.ndarray) -> None:
        node = tree.nodes[node_idx]
        if isinstance(node, Leaf):
            out[rows] = node.rank
            return
        mask = pts[rows, node.feature] < node.threshold
        fill(node.left, rows[mask])
        fill(node.right, rows[~mask])

    fill(0, np.arange(pts.shape[0]))
    return out.reshape([len(a) for a in axes])


def brute_force_has_violation(
    tree: TreeModel, c: MonotonicityConstraint, space: FeatureSpace
) -> bool:
    """Exhaustive check: does ANY precondition pair on the grid violate?

    Weak: prefix-max along each monotone axis within fixed other coords;
    a violation exists iff the prefix-max somewhere exceeds the label.
    Strong: other coords are free, so collapse them with max (for x) and
    min (for x') before the prefix-max comparison.
    """
    labels = grid_predictions(tree, space)
    feats = sorted(c.monotone_features)
    if c.variant == "weak":
        cone = labels.copy()
        for ax in feats:
            cone = np.maximum.accumulate(cone, axis=ax)
        return bool((cone > labels).any())
    non_f = tuple(i for i in range(labels.ndim) if i not in c.monotone_features)
    upper = labels.max(axis=non_f, keepdims=True) if non_f else labels.copy()
    lower = labels.min(axis=non_f, keepdims=True) if non_f else labels
    cone = upper.copy()
    for ax in feats:
        cone = np.maximum.accumulate(cone, axis=ax)
    return bool((cone > lower).any())


def model_grid_labels(model, space: FeatureSpace) -> np.ndarray:
    """Any model's predictions over the full integer grid, as an nd-array.

    Unlike grid_predictions this calls predict point by point, so it works
    for every model kind, not just trees.
    """
    axes = [
        np.arange(int(f.lower), int(f.upper) + 1) for f in space.features
    ]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=-1).astype(np.float64)
    out = np.array([model.predict(tuple(p)) for p in pts], dtype=np.intp)
    return out.reshape([len(a) for a in axes])


def labels_have_weak_violation(labels: np.ndarray, feats) -> bool:
    """Prefix-max check on a label grid: some pair raising only the given
    axes lowers the label."""
    cone = labels.copy()
    for ax in sorted(feats):
        cone = np.maximum.accumulate(cone, axis=ax)
    return bool((cone > labels).any())


def grid_points(space: FeatureSpace) -> np.ndarray:
    """Every integer grid point, shape (N, n_features), C order."""
    axes = [
        np.arange(int(f.lower), int(f.upper) + 1) for f in space.features
    ]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack(mesh, axis=-1).reshape(-1, len(axes))


def enumerate_violation_exists(
    tree: TreeModel, c: MonotonicityConstraint, space: FeatureSpace
) -> bool:
    """Literally test every ordered grid pair (x, x') for a violation.

    Quadratic in grid size; the independent second opinion next to
    brute_force_has_violation's prefix-max formulation.
    """
    pts = grid_points(space)
    labels = grid_predictions(tree, space).ravel()
    ok = labels[:, None] > labels[None, :]
    for f in range(space.n_features):
        if not ok.any():
            return False
        col = pts[:, f]
        if f in c.monotone_features:
            ok &= col[:, None] <= col[None, :]
        elif c.variant == "weak":
            ok &= col[:, None] == col[None, :]
    return bool(ok.any())


def brute_force_best_split(
    X: np.ndarray, y: np.ndarray, n_classes: int, msl: int = 1
) -> tuple[int, float] | None:
    """Slow exhaustive split search mirroring the documented CART rules."""

    def gini(labels: np.ndarray) -> float:
        if len(labels) == 0:
            return 0.0
        _, counts = np.unique(labels, return_counts=True)
        p = counts / len(labels)
        return 1.0 - float((p**2).sum())

    best = None
    m = len(y)
    for f in range(X.shape[1]):
        vals = sorted(set(X[:, f].tolist()))
        for a, b in zip(vals, vals[1:]):
            thr = (a + b) / 2.0
            left = y[X[:, f] < thr]
            right = y[X[:, f] >= thr]
            if len(left) < msl or len(right) < msl:
                continue
            w = (len(left) * gini(left) + len(right) * gini(right)) / m
            if best is None or w < best[0]:
                best = (w, f, thr)
    return None if best is None else (best[1], best[2])
