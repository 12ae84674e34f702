"""CSV ingestion, constraint-spec files, and random instance generation.

Constraint-spec file schema (JSON, one object):

    {
      "features": [
        {"name": "income",   "kind": "real",    "lower": 0, "upper": 150},
        {"name": "children", "kind": "integer", "lower": 0, "upper": 5},
        {"name": "contract", "kind": "integer"},
        {"name": "region",   "kind": "categorical", "values": ["n", "s"]}
      ],
      "class_column": "loan",
      "class_order": ["no", "low", "medium", "high"],
      "monotone_features": ["contract"],
      "variant": "weak"
    }

`lower`/`upper` may be omitted for real and integer features, in which case
load_csv infers them as the column's min/max; categorical features derive
their bounds from the ordered `values` list. `class_order` lists every class
label from lowest to highest rank. `monotone_features` names the feature
group the monotonicity constraint ranges over.

CSV files are RFC-4180-style with a mandatory header naming every declared
column. Rows whose numeric cells do not parse are dropped (and counted in a
log message); structural problems (a missing column, an unknown categorical
or class label, a value outside declared bounds, an empty table) raise
IngestError naming the row and column.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path

from .core import (
    FeatureSpace,
    FeatureSpec,
    GenerationError,
    IngestError,
    Instance,
    InputError,
    KIND_CATEGORICAL,
    KIND_INTEGER,
    KIND_REAL,
    MonotonicityConstraint,
    Rng,
    VARIANT_STRONG,
)

log = logging.getLogger(__name__)

# Resampling bounds. Strong-variant successor draws and distinct-instance
# draws must terminate on (near-)degenerate spaces; see the module functions.
STRONG_RESAMPLE_CAP = 1000
DISTINCT_STREAK_CAP = 10_000


@dataclass(frozen=True)
class Dataset:
    """Labeled instances in a feature space; every row is validated."""

    space: FeatureSpace
    rows: tuple[tuple[Instance, int], ...]

    def __post_init__(self) -> None:
        rows = tuple((tuple(x), int(y)) for x, y in self.rows)
        object.__setattr__(self, "rows", rows)
        for x, y in rows:
            self.space.validate_instance(x)
            self.space.validate_rank(y)

    def __len__(self) -> int:
        return len(self.rows)

    def instances(self) -> list[Instance]:
        return [x for x, _ in self.rows]

    def labels(self) -> list[int]:
        return [y for _, y in self.rows]


@dataclass(frozen=True)
class FeatureDecl:
    """One feature line of a constraint-spec file; bounds may be deferred."""

    name: str
    kind: str
    lower: float | None = None
    upper: float | None = None
    values: tuple[str, ...] | None = None

    def resolved(self) -> bool:
        return self.kind == KIND_CATEGORICAL or (
            self.lower is not None and self.upper is not None
        )

    def to_spec(self) -> FeatureSpec:
        if self.kind == KIND_CATEGORICAL:
            return FeatureSpec(self.name, self.kind, values=self.values)
        if not self.resolved():
            raise IngestError(
                f"feature {self.name!r} has no bounds; load data to infer them"
            )
        return FeatureSpec(self.name, self.kind, self.lower, self.upper)


@dataclass(frozen=True)
class ConstraintSpecFile:
    """Parsed constraint-spec file: features, class order, constraint."""

    features: tuple[FeatureDecl, ...]
    class_column: str
    class_order: tuple[str, ...]
    monotone_features: tuple[str, ...]
    variant: str

    def __post_init__(self) -> None:
        names = [f.name for f in self.features]
        if len(set(names)) != len(names):
            raise IngestError("duplicate feature names in spec")
        for m in self.monotone_features:
            if m not in names:
                raise IngestError(f"monotone feature {m!r} not declared")
        if not self.monotone_features:
            raise IngestError("spec declares no monotone features")
        if len(set(self.class_order)) != len(self.class_order):
            raise IngestError("duplicate labels in class_order")

    def feature_names(self) -> list[str]:
        return [f.name for f in self.features]

    def build_space(self) -> FeatureSpace:
        """Feature space from the declarations alone; every bound must
        be explicit (no CSV to infer from)."""
        return FeatureSpace(
            tuple(f.to_spec() for f in self.features), tuple(self.class_order)
        )

    def constraint(self, space: FeatureSpace) -> MonotonicityConstraint:
        idx = frozenset(space.index_of(m) for m in self.monotone_features)
        return MonotonicityConstraint(self.variant, idx)


def load_constraint_spec(path: str | Path) -> ConstraintSpecFile:
    """Parse a constraint-spec file (schema in the module docstring)."""
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as e:
        raise IngestError(f"cannot read spec {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise IngestError(f"spec {path} is not valid JSON: {e}") from e
    if not isinstance(raw, dict):
        raise IngestError(f"spec {path} must be a JSON object")
    return parse_constraint_spec(raw)


def parse_constraint_spec(raw: dict) -> ConstraintSpecFile:
    for key in ("features", "class_column", "class_order",
                "monotone_features", "variant"):
        if key not in raw:
            raise IngestError(f"spec is missing {key!r}")
    decls = []
    for i, f in enumerate(raw["features"]):
        if not isinstance(f, dict) or "name" not in f or "kind" not in f:
            raise IngestError(f"feature entry {i} needs 'name' and 'kind'")
        values = f.get("values")
        decls.append(
            FeatureDecl(
                name=str(f["name"]),
                kind=str(f["kind"]),
                lower=f.get("lower"),
                upper=f.get("upper"),
                values=tuple(str(v) for v in values) if values else None,
            )
        )
    for d in decls:
        if d.kind not in (KIND_REAL, KIND_INTEGER, KIND_CATEGORICAL):
            raise IngestError(f"feature {d.name!r} has unknown kind {d.kind!r}")
        if d.kind == KIND_CATEGORICAL and not d.values:
            raise IngestError(f"categorical feature {d.name!r} needs values")
    return ConstraintSpecFile(
        features=tuple(decls),
        class_column=str(raw["class_column"]),
        class_order=tuple(str(v) for v in raw["class_order"]),
        monotone_features=tuple(str(v) for v in raw["monotone_features"]),
        variant=str(raw["variant"]),
    )


def _parse_cell(decl: FeatureDecl, cell: str) -> float | None:
    # None signals an unparseable cell; the caller drops the row.
    text = cell.strip()
    if decl.kind == KIND_REAL:
        try:
            v = float(text)
        except ValueError:
            return None
        return v if math.isfinite(v) else None
    try:
        return int(text)
    except ValueError:
        pass
    try:
        v = float(text)
    except ValueError:
        return None
    if math.isfinite(v) and v == int(v):
        return int(v)
    return None


def load_csv(path: str | Path, spec: ConstraintSpecFile) -> Dataset:
    """Ingest a CSV against a constraint spec.

    Categorical cells map to their declared rank; bounds omitted from the
    spec are inferred as the column min/max; rows with unparseable numeric
    cells are dropped. Missing columns, unknown categorical or class labels,
    out-of-bounds values, and empty results are ingestion errors.
    """
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            table = [row for row in reader if row and any(c.strip() for c in row)]
    except OSError as e:
        raise IngestError(f"cannot read {path}: {e}") from e
    if not table:
        raise IngestError(f"{path}: empty file")
    header = [h.strip() for h in table[0]]
    col = {}
    for name in spec.feature_names() + [spec.class_column]:
        if name not in header:
            raise IngestError(f"{path}: missing column {name!r}")
        col[name] = header.index(name)
    if len(table) == 1:
        raise IngestError(f"{path}: empty dataset (header only)")

    raw_rows: list[tuple[list[float], int]] = []
    dropped = 0
    for lineno, row in enumerate(table[1:], start=2):
        if len(row) < len(header):
            raise IngestError(f"{path}:{lineno}: expected {len(header)} cells")
        values: list[float] = []
        ok = True
        for decl in spec.features:
            cell = row[col[decl.name]].strip()
            if decl.kind == KIND_CATEGORICAL:
                if cell not in decl.values:
                    raise IngestError(
                        f"{path}:{lineno}: unknown value {cell!r} "
                        f"in column {decl.name!r}"
                    )
                values.append(decl.values.index(cell))
                continue
            v = _parse_cell(decl, cell)
            if v is None:
                ok = False
                break
            if decl.lower is not None and (v < decl.lower or v > decl.upper):
                raise IngestError(
                    f"{path}:{lineno}: value {cell} outside declared bounds "
                    f"of column {decl.name!r}"
                )
            values.append(v)
        if not ok:
            dropped += 1
            continue
        label = row[col[spec.class_column]].strip()
        if label not in spec.class_order:
            raise IngestError(
                f"{path}:{lineno}: unknown class label {label!r} "
                f"in column {spec.class_column!r}"
            )
        raw_rows.append((values, spec.class_order.index(label)))
    if dropped:
        log.warning("%s: dropped %d rows with unparseable cells", path, dropped)
    if not raw_rows:
        raise IngestError(f"{path}: empty dataset (no usable rows)")

    specs = []
    for j, decl in enumerate(spec.features):
        if decl.kind == KIND_CATEGORICAL:
            specs.append(decl.to_spec())
            continue
        if decl.resolved():
            lower, upper = decl.lower, decl.upper
        else:
            column = [r[0][j] for r in raw_rows]
            lower, upper = min(column), max(column)
        specs.append(FeatureSpec(decl.name, decl.kind, lower, upper))
    space = FeatureSpace(tuple(specs), tuple(spec.class_order))
    return Dataset(space, tuple((tuple(v), y) for v, y in raw_rows))


def write_csv(data: Dataset, path: str | Path, class_column: str = "class") -> None:
    """Write a Dataset back to CSV; inverse of load_csv under the same spec.

    Categorical codes are decoded to their labels, class ranks to class
    labels; floats use shortest round-trip form.
    """
    space = data.space
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([f.name for f in space.features] + [class_column])
        for x, y in data.rows:
            cells = []
            for f, v in zip(space.features, x):
                if f.kind == KIND_CATEGORICAL:
                    cells.append(f.values[int(v)])
                elif f.kind == KIND_INTEGER:
                    cells.append(str(int(v)))
                else:
                    cells.append(repr(float(v)))
            writer.writerow(cells + [space.class_labels[y]])


def _draw_value(f: FeatureSpec, lo: float, rng: Rng) -> float:
    # One component, uniform over [lo, upper]; real draws are half-open
    # [lo, upper) unless the interval is degenerate.
    if f.kind == KIND_REAL:
        if lo >= f.upper:
            return float(lo)
        return float(rng.uniform(lo, f.upper))
    return int(rng.integers(int(lo), int(f.upper) + 1))


def sample_uniform(space: FeatureSpace, rng: Rng) -> Instance:
    """One instance, each component independently uniform over its domain.

    Components are drawn in feature order, one rng call each, so streams
    are reproducible across runs and platforms.
    """
    return tuple(_draw_value(f, f.lower, rng) for f in space.features)


def sample_successor(
    x: Instance, c: MonotonicityConstraint, space: FeatureSpace, rng: Rng
) -> Instance:
    """A random x' != x with x ⪯ x' under the constraint's precondition.

    Weak: monotone features are drawn uniformly from [x_i, upper_i], the
    rest are copied verbatim. Strong: monotone features likewise, every
    other feature is redrawn over its full domain. Both resample until
    x' differs from x (capped, then a generation error).
    """
    space.validate_instance(x)
    c.check_against(space)
    feats = c.monotone_features
    strong = c.variant == VARIANT_STRONG
    # x pinned at the top of every feature that may move has no distinct
    # successor; burning the retry cap on it would also waste rng draws
    movable = any(x[i] < space.features[i].upper for i in feats)
    if strong and not movable:
        movable = any(
            f.lower < f.upper
            for j, f in enumerate(space.features) if j not in feats
        )
    if not movable:
        raise GenerationError(f"no successor distinct from {x} exists")
    for _ in range(STRONG_RESAMPLE_CAP):
        out = []
        for i, f in enumerate(space.features):
            if i in feats:
                out.append(_draw_value(f, x[i], rng))
            elif strong:
                out.append(_draw_value(f, f.lower, rng))
            else:
                out.append(x[i])
        candidate = tuple(out)
        if candidate != tuple(x):
            return candidate
    raise GenerationError(
        f"could not draw a successor distinct from {x} "
        f"after {STRONG_RESAMPLE_CAP} attempts (degenerate space?)"
    )


def sample_distinct(
    space: FeatureSpace, count: int, rng: Rng, taken: set[Instance] | None = None
) -> list[Instance]:
    """count distinct uniform instances, also distinct from `taken`.

    Errors out once DISTINCT_STREAK_CAP consecutive draws were duplicates,
    which only happens when the space has too few points left.
    """
    if count < 0:
        raise InputError("count must be non-negative")
    seen: set[Instance] = set(taken) if taken else set()
    out: list[Instance] = []
    streak = 0
    while len(out) < count:
        x = sample_uniform(space, rng)
        if x in seen:
            streak += 1
            if streak >= DISTINCT_STREAK_CAP:
                raise GenerationError(
                    f"feature space too small: {len(out)} of {count} distinct "
                    f"instances found before {DISTINCT_STREAK_CAP} stale draws"
                )
            continue
        streak = 0
        seen.add(x)
        out.append(x)
    return out
