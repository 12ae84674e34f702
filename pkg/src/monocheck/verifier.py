"""Exact monotonicity checking for decision trees.

A tree plus a monotonicity constraint compiles into a disjunction, over
ordered leaf pairs (L1, L2) with rank(L1) > rank(L2), of conjunctions of
per-feature interval constraints on the pair (x, x'). Each disjunct is
decided by closed-form interval reasoning, so no external solver is
needed; for axis-aligned trees this is equivalent to solving the full
logical query.

Feasibility per feature depends on how the pair is linked:

  LE   (monotone feature)          min-attainable(box1) <= max-attainable(box2)
  EQ   (held feature, weak)        box1 and box2 intersect
  FREE (unconstrained, strong)     both boxes non-empty

"attainable" respects open ends, exclusion sets, and integrality. Open
real bounds are realized at offset delta = min(0.5, width/2) from the
bound (halved until clear of exclusions); integer bounds are snapped to
the nearest integer inside. Witness values are chosen deterministically:
an LE feature puts x at the largest attainable value of box1 that does
not exceed max-attainable(box2) and x' at the smallest attainable value
of box2 at or above it, which lands witnesses right at decision
boundaries; EQ features take the minimum attainable of the intersection;
FREE features take each box's own minimum.

Note the delta rule makes real-valued LE feasibility decide "can we emit
a concrete pair", which on razor-thin open overlaps is slightly stricter
than pure real arithmetic. Integer features are decided exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .core import (
    FeatureSpace,
    InputError,
    Instance,
    MonotonicityConstraint,
    VARIANT_STRONG,
)
from .tree import Leaf, Split, TreeModel

LINK_LE = "le"
LINK_EQ = "eq"
LINK_FREE = "free"

# retry budget for dodging excluded points by halving delta
_DODGE_STEPS = 64


@dataclass(frozen=True)
class Interval:
    """A set of feature values: an interval minus finitely many points.

    Discrete intervals are normalized at construction: bounds snap to
    the integers inside, end up closed on both sides, and keep only the
    integral excluded points that remain in range.
    """

    lo: float
    hi: float
    lo_closed: bool = True
    hi_closed: bool = True
    excluded: frozenset = frozenset()
    discrete: bool = False

    def __post_init__(self) -> None:
        if not self.discrete:
            if self.excluded and not isinstance(self.excluded, frozenset):
                object.__setattr__(self, "excluded", frozenset(self.excluded))
            return
        lo = math.ceil(self.lo) if self.lo_closed else math.floor(self.lo) + 1
        hi = math.floor(self.hi) if self.hi_closed else math.ceil(self.hi) - 1
        ex = frozenset(
            int(v) for v in self.excluded
            if float(v).is_integer() and lo <= v <= hi
        )
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        object.__setattr__(self, "lo_closed", True)
        object.__setattr__(self, "hi_closed", True)
        object.__setattr__(self, "excluded", ex)

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def is_empty(self) -> bool:
        if self.lo > self.hi:
            return True
        if self.discrete:
            # bounds are normalized ints and excluded is clipped to range
            return int(self.hi) - int(self.lo) + 1 <= len(self.excluded)
        if self.lo == self.hi:
            return (
                not (self.lo_closed and self.hi_closed)
                or self.lo in self.excluded
            )
        return False

    def min_attainable(self) -> float | int | None:
        if self.is_empty():
            return None
        if self.discrete:
            v = int(self.lo)
            while v in self.excluded:
                v += 1
            return v
        if self.lo_closed and self.lo not in self.excluded:
            return self.lo
        delta = min(0.5, self.width / 2)
        for _ in range(_DODGE_STEPS):
            v = self.lo + delta
            if v not in self.excluded and self._holds(v):
                return v
            delta /= 2
        return None

    def max_attainable(self) -> float | int | None:
        if self.is_empty():
            return None
        if self.discrete:
            v = int(self.hi)
            while v in self.excluded:
                v -= 1
            return v
        if self.hi_closed and self.hi not in self.excluded:
            return self.hi
        delta = min(0.5, self.width / 2)
        for _ in range(_DODGE_STEPS):
            v = self.hi - delta
            if v not in self.excluded and self._holds(v):
                return v
            delta /= 2
        return None

    def min_attainable_geq(self, v: float) -> float | int | None:
        """Smallest attainable value that is >= v, or None."""
        return self.with_lower(v, closed=True).min_attainable()

    def max_attainable_leq(self, v: float) -> float | int | None:
        """Largest attainable value that is <= v, or None."""
        return self.with_upper(v, closed=True).max_attainable()

    def _holds(self, v: float) -> bool:
        if v < self.lo or (v == self.lo and not self.lo_closed):
            return False
        if v > self.hi or (v == self.hi and not self.hi_closed):
            return False
        return True

    def contains(self, v: float) -> bool:
        if self.discrete and not float(v).is_integer():
            return False
        return self._holds(v) and v not in self.excluded

    def with_lower(self, v: float, closed: bool = True) -> "Interval":
        if v > self.lo:
            return replace(self, lo=v, lo_closed=closed)
        if v == self.lo and self.lo_closed and not closed:
            return replace(self, lo_closed=False)
        return self

    def with_upper(self, v: float, closed: bool = True) -> "Interval":
        if v < self.hi:
            return replace(self, hi=v, hi_closed=closed)
        if v == self.hi and self.hi_closed and not closed:
            return replace(self, hi_closed=False)
        return self

    def exclude(self, v: float) -> "Interval":
        return replace(self, excluded=self.excluded | {v})

    def intersect(self, other: "Interval") -> "Interval":
        if self.discrete != other.discrete:
            raise InputError("cannot intersect discrete with continuous interval")
        if other.lo > self.lo:
            lo, lo_c = other.lo, other.lo_closed
        elif other.lo < self.lo:
            lo, lo_c = self.lo, self.lo_closed
        else:
            lo, lo_c = self.lo, self.lo_closed and other.lo_closed
        if other.hi < self.hi:
            hi, hi_c = other.hi, other.hi_closed
        elif other.hi > self.hi:
            hi, hi_c = self.hi, self.hi_closed
        else:
            hi, hi_c = self.hi, self.hi_closed and other.hi_closed
        return Interval(
            lo, hi, lo_c, hi_c, self.excluded | other.excluded, self.discrete
        )


Box = tuple[Interval, ...]


@dataclass(frozen=True)
class BoxPair:
    """A candidate leaf pair as per-feature intervals plus link relations.

    link[i] says how x_i and x'_i relate: LE for monotone features, EQ
    for features the weak variant holds fixed, FREE under strong.
    """

    box1: Box
    box2: Box
    link: tuple[str, ...]
    class1: int
    class2: int

    def __post_init__(self) -> None:
        n = len(self.link)
        if len(self.box1) != n or len(self.box2) != n:
            raise InputError("box/link lengths differ")
        for l in self.link:
            if l not in (LINK_LE, LINK_EQ, LINK_FREE):
                raise InputError(f"unknown link {l!r}")


@dataclass(frozen=True)
class Witness:
    """A concrete pair with x going to a strictly higher class than x'."""

    x: Instance
    x_prime: Instance
    class1: int
    class2: int


@dataclass(frozen=True)
class Exclusion:
    """Extra constraint: the given side's feature must differ from value."""

    side: int  # 1 for x, 2 for x'
    feature: int
    value: float

    def __post_init__(self) -> None:
        if self.side not in (1, 2):
            raise InputError("side must be 1 or 2")


@dataclass(frozen=True)
class Negation:
    """Extra constraint: a toggled path condition on one side.

    geq=True asserts feature >= threshold, geq=False asserts feature <
    threshold, mirroring how split conditions read.
    """

    side: int
    feature: int
    threshold: float
    geq: bool

    def __post_init__(self) -> None:
        if self.side not in (1, 2):
            raise InputError("side must be 1 or 2")


def links_for(c: MonotonicityConstraint, n_features: int) -> tuple[str, ...]:
    free = c.variant == VARIANT_STRONG
    return tuple(
        LINK_LE if i in c.monotone_features
        else (LINK_FREE if free else LINK_EQ)
        for i in range(n_features)
    )


def _domain_interval(spec) -> Interval:
    return Interval(spec.lower, spec.upper, True, True, frozenset(), spec.is_discrete)


def _all_leaf_boxes(tree: TreeModel, space: FeatureSpace) -> dict[int, Box]:
    """Per-feature intervals for every leaf, keyed by node index."""
    out: dict[int, Box] = {}
    root_box = tuple(_domain_interval(f) for f in space.features)
    stack: list[tuple[int, Box]] = [(0, root_box)]
    while stack:
        idx, box = stack.pop()
        node = tree.nodes[idx]
        if isinstance(node, Leaf):
            out[idx] = box
            continue
        f, t = node.feature, node.threshold
        left = list(box)
        left[f] = box[f].with_upper(t, closed=False)
        right = list(box)
        right[f] = box[f].with_lower(t, closed=True)
        stack.append((node.left, tuple(left)))
        stack.append((node.right, tuple(right)))
    return out


def leaf_box(tree: TreeModel, leaf: int, space: FeatureSpace) -> Box:
    """Intervals a point must lie in to reach the given leaf node.

    Path conditions intersect with the declared feature bounds (closed
    at both ends); features the path never tests keep their full domain.
    """
    if space.n_features != tree.n_features:
        raise InputError("space and tree disagree on feature count")
    if not 0 <= leaf < len(tree.nodes) or not isinstance(tree.nodes[leaf], Leaf):
        raise InputError(f"node {leaf} is not a leaf")
    return _all_leaf_boxes(tree, space)[leaf]


def solve_pair(b: BoxPair, space: FeatureSpace) -> Witness | None:
    """Exact feasibility of one box pair; a concrete witness on SAT.

    Values follow the deterministic selection rule in the module
    docstring. Returns None when the pair is infeasible.
    """
    xs: list[float] = []
    xps: list[float] = []
    for i, link in enumerate(b.link):
        b1, b2 = b.box1[i], b.box2[i]
        if link == LINK_EQ:
            v = b1.intersect(b2).min_attainable()
            if v is None:
                return None
            xs.append(v)
            xps.append(v)
        elif link == LINK_FREE:
            v1 = b1.min_attainable()
            v2 = b2.min_attainable()
            if v1 is None or v2 is None:
                return None
            xs.append(v1)
            xps.append(v2)
        else:
            m2 = b2.max_attainable()
            if m2 is None:
                return None
            v1 = b1.max_attainable_leq(m2)
            if v1 is None:
                return None
            v2 = b2.min_attainable_geq(v1)
            if v2 is None:
                return None
            xs.append(v1)
            xps.append(v2)
    return Witness(tuple(xs), tuple(xps), b.class1, b.class2)


def _apply_extra(box: Box, side: int, extra) -> Box:
    out = list(box)
    for e in extra:
        if e.side != side:
            continue
        if not 0 <= e.feature < len(out):
            raise InputError(f"extra constraint names feature {e.feature}")
        if isinstance(e, Exclusion):
            out[e.feature] = out[e.feature].exclude(e.value)
        elif isinstance(e, Negation):
            if e.geq:
                out[e.feature] = out[e.feature].with_lower(e.threshold, closed=True)
            else:
                out[e.feature] = out[e.feature].with_upper(e.threshold, closed=False)
        else:
            raise InputError(f"unknown extra constraint {e!r}")
    return tuple(out)


class VerifierSession:
    """Reusable query state for one (tree, constraint, space) triple.

    Precomputes leaf boxes and a vectorized feasibility prefilter so
    that repeated queries (pruning runs many) stay cheap. The prefilter
    ignores exclusion sets, which only ever over-approximates; every
    candidate pair is confirmed by solve_pair before being returned.
    """

    def __init__(
        self, tree: TreeModel, c: MonotonicityConstraint,
        space: FeatureSpace,
    ) -> None:
        if space.n_features != tree.n_features:
            raise InputError("space and tree disagree on feature count")
        c.check_against(space)
        self.tree = tree
        self.constraint = c
        self.space = space
        self.link = links_for(c, space.n_features)
        boxes = _all_leaf_boxes(tree, space)
        leaves = tree.leaves()
        self._boxes = [boxes[idx] for idx, _ in leaves]
        self._ranks = np.array([r for _, r in leaves], dtype=np.intp)
        n = space.n_features
        m = len(leaves)
        self._lo = np.empty((m, n))
        self._hi = np.empty((m, n))
        self._hi_cl = np.empty((m, n), dtype=bool)
        for k, box in enumerate(self._boxes):
            for f, iv in enumerate(box):
                self._lo[k, f] = iv.lo
                self._hi[k, f] = iv.hi
                self._hi_cl[k, f] = iv.hi_closed
        self._viol = self._ranks[:, None] > self._ranks[None, :]

    def find(self, extra=()) -> Witness | None:
        """First satisfiable leaf pair's witness, scanning pairs in
        ascending (node index of L1, node index of L2) order."""
        lo1, hi1, cl1 = self._tightened(1, extra)
        lo2, hi2, cl2 = self._tightened(2, extra)
        ne1 = self._nonempty(lo1, hi1, cl1)
        ne2 = self._nonempty(lo2, hi2, cl2)
        feas = self._viol & ne1.all(axis=1)[:, None] & ne2.all(axis=1)[None, :]
        for f, link in enumerate(self.link):
            if not feas.any():
                return None
            if link == LINK_FREE:
                continue
            le = _cross_le(lo1[:, f], hi2[:, f], cl2[:, f])
            if link == LINK_EQ:
                feas &= le & _cross_le(lo2[:, f], hi1[:, f], cl1[:, f]).T
            else:
                feas &= le
        for i, j in np.argwhere(feas):
            box1 = _apply_extra(self._boxes[i], 1, extra)
            box2 = _apply_extra(self._boxes[j], 2, extra)
            bp = BoxPair(
                box1, box2, self.link,
                int(self._ranks[i]), int(self._ranks[j]),
            )
            w = solve_pair(bp, self.space)
            if w is not None:
                return w
        return None

    def _tightened(self, side: int, extra):
        lo, hi, cl = self._lo, self._hi, self._hi_cl
        negs = [e for e in extra if isinstance(e, Negation) and e.side == side]
        if not negs:
            return lo, hi, cl
        lo, hi, cl = lo.copy(), hi.copy(), cl.copy()
        for e in negs:
            if not 0 <= e.feature < lo.shape[1]:
                raise InputError(f"extra constraint names feature {e.feature}")
            f = e.feature
            discrete = self.space.features[f].is_discrete
            if e.geq:
                t = math.ceil(e.threshold) if discrete else e.threshold
                np.maximum(lo[:, f], t, out=lo[:, f])
            elif discrete:
                t = math.ceil(e.threshold) - 1
                np.minimum(hi[:, f], t, out=hi[:, f])
            else:
                t = e.threshold
                shrink = t < hi[:, f]
                cl[shrink, f] = False
                cl[t == hi[:, f], f] = False
                hi[shrink, f] = t
        return lo, hi, cl

    @staticmethod
    def _nonempty(lo, hi, cl):
        return (lo < hi) | ((lo == hi) & cl)


def _cross_le(lo_a, hi_b, cl_b):
    """[i, j] true iff some value of box_a[i] can sit <= some of box_b[j],
    comparing the closed/open bound arrays only (exclusions ignored)."""
    return (lo_a[:, None] < hi_b[None, :]) | (
        (lo_a[:, None] == hi_b[None, :]) & cl_b[None, :]
    )


def find_counterexample(
    tree: TreeModel, c: MonotonicityConstraint, space: FeatureSpace,
    extra=(),
) -> Witness | None:
    """First witness of non-monotonicity in the tree itself, or None.

    None means the tree is monotone with respect to the constraint
    (over the declared feature space, with `extra` applied).
    """
    return VerifierSession(tree, c, space).find(extra)


def prune_instances(
    w: Witness, tree: TreeModel, c: MonotonicityConstraint,
    space: FeatureSpace, session: VerifierSession | None = None,
) -> list[Witness]:
    """Variations of w: re-query excluding one witness coordinate at a
    time, every feature of x first, then of x'. Up to 2n results."""
    s = session if session is not None else VerifierSession(tree, c, space)
    out = []
    for side, inst in ((1, w.x), (2, w.x_prime)):
        for f, v in enumerate(inst):
            got = s.find((Exclusion(side, f, v),))
            if got is not None:
                out.append(got)
    return out


def prune_branches(
    w: Witness, tree: TreeModel, c: MonotonicityConstraint,
    space: FeatureSpace, session: VerifierSession | None = None,
) -> list[Witness]:
    """Variations of w: re-query with one path condition of x toggled at
    a time, then likewise for x'."""
    s = session if session is not None else VerifierSession(tree, c, space)
    out = []
    for side, inst in ((1, w.x), (2, w.x_prime)):
        for cond in tree.get_path(inst):
            neg = Negation(side, cond.feature, cond.threshold, geq=not cond.geq)
            got = s.find((neg,))
            if got is not None:
                out.append(got)
    return out


def _smt_name(name: str, side: int) -> str:
    safe = "".join(ch if ch.isalnum() or ch == "_" else "_" for ch in name)
    return f"{safe}{side}"


def _smt_atom(space: FeatureSpace, f: int, side: int, geq: bool, t: float) -> str:
    var = _smt_name(space.features[f].name, side)
    if space.features[f].is_discrete:
        k = math.ceil(t)  # "< 9.5" over ints is "< 10"; ">= 9.5" is ">= 10"
        return f"({'>=' if geq else '<'} {var} {k})"
    return f"({'>=' if geq else '<'} {var} {float(t)!r})"


def smtlib_dump(
    tree: TreeModel, c: MonotonicityConstraint, space: FeatureSpace
) -> str:
    """The non-monotonicity query as SMT-LIB2 text, for inspection.

    Debug output only; nothing parses it back. Features the tree never
    splits on get no variables. The queries the checker actually decides
    are the leaf-pair boxes, which are equivalent for axis-aligned trees.
    """
    c.check_against(space)
    used = sorted(
        {n.feature for n in tree.nodes if isinstance(n, Split)}
        | set(c.monotone_features)
    )
    lines = ["; variables for the input pair and its predicted classes"]
    for f in used:
        sort = "Int" if space.features[f].is_discrete else "Real"
        lines.append(
            f"(declare-fun {_smt_name(space.features[f].name, 1)} () {sort})"
            f"  (declare-fun {_smt_name(space.features[f].name, 2)} () {sort})"
        )
    lines.append("(declare-fun class1 () Int) (declare-fun class2 () Int)")

    lines.append("; declared feature ranges")
    for f in used:
        spec = space.features[f]
        for side in (1, 2):
            var = _smt_name(spec.name, side)
            if spec.is_discrete:
                lines.append(
                    f"(assert (and (>= {var} {int(spec.lower)})"
                    f" (<= {var} {int(spec.upper)})))"
                )
            else:
                lines.append(
                    f"(assert (and (>= {var} {float(spec.lower)!r})"
                    f" (<= {var} {float(spec.upper)!r})))"
                )

    lines.append("; how the tree assigns classes")

    def path_formulas(side: int) -> list[str]:
        out = []
        stack: list[tuple[int, tuple[str, ...]]] = [(0, ())]
        while stack:
            idx, conds = stack.pop()
            node = tree.nodes[idx]
            if isinstance(node, Leaf):
                if not conds:
                    out.append(f"(assert (= class{side} {node.rank}))")
                elif len(conds) == 1:
                    out.append(f"(assert (=> {conds[0]} (= class{side} {node.rank})))")
                else:
                    out.append(
                        f"(assert (=> (and {' '.join(conds)})"
                        f" (= class{side} {node.rank})))"
                    )
                continue
            lt = _smt_atom(space, node.feature, side, False, node.threshold)
            ge = _smt_atom(space, node.feature, side, True, node.threshold)
            stack.append((node.right, conds + (ge,)))
            stack.append((node.left, conds + (lt,)))
        return out

    lines.extend(path_formulas(1))
    lines.extend(path_formulas(2))

    lines.append("; the pair must satisfy the precondition yet invert classes")
    terms = []
    for f in sorted(c.monotone_features):
        n1 = _smt_name(space.features[f].name, 1)
        n2 = _smt_name(space.features[f].name, 2)
        terms.append(f"(<= {n1} {n2})")
    if c.variant != VARIANT_STRONG:
        for f in used:
            if f in c.monotone_features:
                continue
            n1 = _smt_name(space.features[f].name, 1)
            n2 = _smt_name(space.features[f].name, 2)
            terms.append(f"(= {n1} {n2})")
    if len(terms) == 1:
        lines.append(f"(assert {terms[0]})")
    else:
        lines.append(f"(assert (and {' '.join(terms)}))")
    lines.append("(assert (not (<= class1 class2)))")
    lines.append("(check-sat)")
    lines.append("(get-model)")
    return "\n".join(lines) + "\n"
