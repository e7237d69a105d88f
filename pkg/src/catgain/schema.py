"""Feature schemas for categorical tabular data.

A schema is an ordered list of feature descriptors.  Each feature is either
multiclass (exactly one of q mutually exclusive categories), multilabel (any
subset of q categories), or numeric (a single value already normalized to
[0, 1]).  The schema fixes the block structure of every coded vector: feature
j owns a contiguous block of q_j columns, and the total coded width is
Q = sum(q_j).
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import SchemaError

MULTICLASS = "multiclass"
MULTILABEL = "multilabel"
NUMERIC = "numeric"
KINDS = (MULTICLASS, MULTILABEL, NUMERIC)


@dataclass(frozen=True)
class FeatureSpec:
    """One feature: its name, kind, and number of categories (1 for numeric)."""

    name: str
    kind: str
    cardinality: int

    def __post_init__(self):
        if not self.name or any(c in self.name for c in ",\n\r"):
            raise SchemaError(f"invalid feature name {self.name!r}")
        if self.kind not in KINDS:
            raise SchemaError(f"feature {self.name!r}: unknown kind {self.kind!r}")
        q = self.cardinality
        if not isinstance(q, (int, np.integer)) or q < 1:
            raise SchemaError(f"feature {self.name!r}: cardinality must be a positive int")
        if self.kind == MULTICLASS and q < 2:
            raise SchemaError(f"feature {self.name!r}: multiclass needs cardinality >= 2")
        if self.kind == NUMERIC and q != 1:
            raise SchemaError(f"feature {self.name!r}: numeric features have cardinality 1")


class FeatureSchema:
    """Ordered collection of features with precomputed block offsets."""

    def __init__(self, features: Sequence[FeatureSpec]):
        features = tuple(features)
        if not features:
            raise SchemaError("schema needs at least one feature")
        names = [f.name for f in features]
        if len(set(names)) != len(names):
            dupes = sorted({n for n in names if names.count(n) > 1})
            raise SchemaError(f"duplicate feature names: {dupes}")
        self.features = features
        cards = np.array([f.cardinality for f in features], dtype=np.int64)
        self.offsets = np.concatenate(([0], np.cumsum(cards)))  # length p + 1
        # column -> owning feature index, used to expand per-feature vectors to width Q
        self.feature_of_column = np.repeat(np.arange(len(features), dtype=np.int64), cards)

    @property
    def p(self) -> int:
        """Number of features."""
        return len(self.features)

    @property
    def total_width(self) -> int:
        """Width Q of the coded representation."""
        return int(self.offsets[-1])

    def block(self, j: int) -> slice:
        """Column slice of feature ``j`` in a coded vector."""
        return slice(int(self.offsets[j]), int(self.offsets[j + 1]))

    def index(self, name: str) -> int:
        for j, f in enumerate(self.features):
            if f.name == name:
                return j
        raise SchemaError(f"no feature named {name!r}")

    def canonical_text(self) -> str:
        return "".join(f"{f.name},{f.kind},{f.cardinality}\n" for f in self.features)

    @property
    def hash(self) -> str:
        """Stable content hash, embedded in saved models and reports."""
        return hashlib.sha256(self.canonical_text().encode("utf-8")).hexdigest()[:16]

    def __eq__(self, other):
        return isinstance(other, FeatureSchema) and self.features == other.features

    def __repr__(self):
        return f"FeatureSchema({self.p} features, Q={self.total_width})"


def parse_schema(lines: Iterable[str]) -> FeatureSchema:
    """Parse schema text: one ``name,kind,cardinality`` line per feature, in order."""
    features = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = [p.strip() for p in line.split(",")]
        if len(parts) != 3:
            raise SchemaError(f"schema line {lineno}: expected 'name,kind,cardinality', got {raw!r}")
        name, kind, card = parts
        try:
            cardinality = int(card)
        except ValueError:
            raise SchemaError(f"schema line {lineno}: cardinality {card!r} is not an integer") from None
        features.append(FeatureSpec(name, kind, cardinality))
    return FeatureSchema(features)


def read_schema(path) -> FeatureSchema:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_schema(fh)


def write_schema(path, schema: FeatureSchema) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(schema.canonical_text())
