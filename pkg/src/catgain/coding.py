"""Binary and fuzzy-binary coding of categorical records.

Multiclass features are one-hot coded, multilabel features multi-hot.  The
fuzzy transformation re-codes those 0/1 blocks as reals in [0, 1] while
retaining the category information exactly:

* multiclass: every inactive entry is drawn uniformly from [0, 1/q) and the
  active entry is set to 1 minus their sum, so the block sums to 1 and the
  active entry is guaranteed to stay the strict maximum;
* multilabel: inactive entries are drawn from [0, 0.5), active ones from
  [0.5, 1], so thresholding at 0.5 recovers the code.

Missing features are represented by zero blocks plus a per-feature
missingness indicator mu (1 = observed), whose per-column expansion mbar
repeats mu_j across the q_j columns of block j.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EncodingError, SchemaError
from .schema import MULTICLASS, MULTILABEL, NUMERIC, FeatureSchema, FeatureSpec

MISSING = None

Record = tuple  # one value per feature: int | set[int] | float | MISSING


@dataclass
class FuzzyDataset:
    """A coded dataset: n x Q value matrix plus missingness masks.

    ``xbar`` holds fuzzy (or plain binary) codes with zero blocks at missing
    features; ``mu`` is the n x p per-feature missingness matrix and ``mbar``
    its n x Q per-column expansion.
    """

    xbar: np.ndarray
    mu: np.ndarray
    mbar: np.ndarray
    schema: FeatureSchema

    @property
    def n(self) -> int:
        return self.xbar.shape[0]

    def copy(self) -> "FuzzyDataset":
        return FuzzyDataset(self.xbar.copy(), self.mu.copy(), self.mbar.copy(), self.schema)


def encode_binary(record, schema: FeatureSchema):
    """One-/multi-hot code one record; returns (z, mu) of widths Q and p."""
    if len(record) != schema.p:
        raise SchemaError(f"record has {len(record)} values, schema has {schema.p} features")
    z = np.zeros(schema.total_width)
    mu = np.zeros(schema.p)
    for j, (spec, value) in enumerate(zip(schema.features, record)):
        if value is MISSING:
            continue
        mu[j] = 1.0
        block = schema.block(j)
        q = spec.cardinality
        if spec.kind == MULTICLASS:
            idx = int(value)
            if not 0 <= idx < q:
                raise SchemaError(f"feature {spec.name!r}: category {idx} out of range [0, {q})")
            z[block.start + idx] = 1.0
        elif spec.kind == MULTILABEL:
            for idx in value:
                idx = int(idx)
                if not 0 <= idx < q:
                    raise SchemaError(f"feature {spec.name!r}: category {idx} out of range [0, {q})")
                z[block.start + idx] = 1.0
        else:  # numeric
            v = float(value)
            if not 0.0 <= v <= 1.0:
                raise SchemaError(f"feature {spec.name!r}: numeric value {v} outside [0, 1]")
            z[block.start] = v
    return z, mu


def fuzzify_multiclass(z: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Fuzzy-code a one-hot vector; the active entry stays the strict maximum."""
    z = np.asarray(z, dtype=float)
    q = z.shape[0]
    active = np.flatnonzero(z == 1.0)
    if active.shape[0] != 1 or np.any((z != 0.0) & (z != 1.0)):
        raise EncodingError("fuzzify_multiclass expects a one-hot vector")
    x = rng.uniform(0.0, 1.0 / q, size=q)
    x[active[0]] = 0.0
    x[active[0]] = 1.0 - x.sum()
    return x


def fuzzify_multilabel(z: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Fuzzy-code a binary vector; thresholding at 0.5 recovers it."""
    z = np.asarray(z, dtype=float)
    if np.any((z != 0.0) & (z != 1.0)):
        raise EncodingError("fuzzify_multilabel expects a binary vector")
    u = rng.uniform(0.0, 0.5, size=z.shape[0])
    return np.where(z == 1.0, 0.5 + u, u)


def decode(x: np.ndarray, spec: FeatureSpec):
    """Recover the category value from one coded block.

    Multiclass decodes to the argmax index (lowest index on ties), multilabel
    to the set of entries >= 0.5, numeric to the value itself.
    """
    x = np.asarray(x, dtype=float)
    if x.shape[0] != spec.cardinality:
        raise SchemaError(f"feature {spec.name!r}: block length {x.shape[0]} != {spec.cardinality}")
    if spec.kind == MULTICLASS:
        return int(np.argmax(x))
    if spec.kind == MULTILABEL:
        return set(np.flatnonzero(x >= 0.5).tolist())
    return float(x[0])


def decode_row(xrow: np.ndarray, mu_row: np.ndarray, schema: FeatureSchema) -> Record:
    """Decode one coded row back to a record; missing features decode to MISSING."""
    values = []
    for j, spec in enumerate(schema.features):
        if mu_row[j] == 0:
            values.append(MISSING)
        else:
            values.append(decode(xrow[schema.block(j)], spec))
    return tuple(values)


def decode_dataset(dataset: FuzzyDataset) -> list[Record]:
    return [decode_row(dataset.xbar[i], dataset.mu[i], dataset.schema) for i in range(dataset.n)]


def build_masks(mu_row: np.ndarray, schema: FeatureSchema) -> np.ndarray:
    """Expand a per-feature missingness row to per-column width Q."""
    mu_row = np.asarray(mu_row, dtype=float)
    if mu_row.shape[0] != schema.p:
        raise SchemaError(f"mask row has {mu_row.shape[0]} entries, schema has {schema.p} features")
    return mu_row[schema.feature_of_column]


def expand_mask(mu: np.ndarray, schema: FeatureSchema) -> np.ndarray:
    """Matrix version of :func:`build_masks`."""
    return np.asarray(mu, dtype=float)[:, schema.feature_of_column]


def collapse_mask(mbar: np.ndarray, schema: FeatureSchema) -> np.ndarray:
    """Inverse of :func:`expand_mask` (any entry of a block represents it)."""
    return np.asarray(mbar, dtype=float)[..., schema.offsets[:-1]]


def fuzzify_matrix(z: np.ndarray, mu: np.ndarray, schema: FeatureSchema,
                   rng: np.random.Generator) -> np.ndarray:
    """Apply the fuzzy transformation to a whole binary-coded matrix at once.

    Missing blocks stay zero.  Semantics per block match the single-vector
    fuzzify functions (the draws differ: one uniform matrix is consumed).
    """
    z = np.asarray(z, dtype=float)
    n = z.shape[0]
    u = rng.uniform(0.0, 1.0, size=z.shape)
    x = np.zeros_like(z)
    for j, spec in enumerate(schema.features):
        block = schema.block(j)
        zb = z[:, block]
        if spec.kind == MULTICLASS:
            inact = u[:, block] * (1.0 / spec.cardinality)
            xb = np.where(zb == 1.0, 0.0, inact)
            xb[zb == 1.0] = (1.0 - xb.sum(axis=1))[np.any(zb == 1.0, axis=1)]
        elif spec.kind == MULTILABEL:
            xb = np.where(zb == 1.0, 0.5 + 0.5 * u[:, block], 0.5 * u[:, block])
        else:
            xb = zb.copy()
        xb *= mu[:, j : j + 1]
        x[:, block] = xb
    return x


def fuzzify_dataset(hard: FuzzyDataset, rng: np.random.Generator) -> FuzzyDataset:
    """Fuzzy-coded sibling of a binary-coded dataset (same missingness)."""
    xbar = fuzzify_matrix(hard.xbar, hard.mu, hard.schema, rng)
    return FuzzyDataset(xbar, hard.mu.copy(), hard.mbar.copy(), hard.schema)


def encode_dataset(records, schema: FeatureSchema, rng: np.random.Generator | None = None,
                   fuzzy: bool = True) -> FuzzyDataset:
    """Code a list of records into a :class:`FuzzyDataset`.

    Fuzzification is applied once, here; pass ``fuzzy=False`` for plain
    one-/multi-hot codes (the ablation mode).  Per-record schema violations
    are aggregated into one error listing the offending row indices.
    """
    if fuzzy and rng is None:
        raise ValueError("fuzzy encoding needs an rng")
    n = len(records)
    z = np.zeros((n, schema.total_width))
    mu = np.zeros((n, schema.p))
    failures = []
    for i, record in enumerate(records):
        try:
            z[i], mu[i] = encode_binary(record, schema)
        except (SchemaError, EncodingError) as exc:
            failures.append(f"row {i}: {exc}")
    if failures:
        raise SchemaError("; ".join(failures))
    xbar = fuzzify_matrix(z, mu, schema, rng) if fuzzy else z
    return FuzzyDataset(xbar, mu, expand_mask(mu, schema), schema)


def harden(xbar: np.ndarray, schema: FeatureSchema) -> np.ndarray:
    """Matrix form of decode-then-binary-recode for fully observed rows.

    Multiclass blocks become one-hot at their argmax (lowest index on ties),
    multilabel entries threshold at 0.5, numeric values pass through.
    """
    xbar = np.atleast_2d(np.asarray(xbar, dtype=float))
    out = np.zeros_like(xbar)
    for j, spec in enumerate(schema.features):
        block = schema.block(j)
        if spec.kind == MULTICLASS:
            winners = np.argmax(xbar[:, block], axis=1)
            out[np.arange(xbar.shape[0]), block.start + winners] = 1.0
        elif spec.kind == MULTILABEL:
            out[:, block] = (xbar[:, block] >= 0.5).astype(float)
        else:
            out[:, block] = xbar[:, block]
    return out


def refuzzify(dataset: FuzzyDataset, rng: np.random.Generator) -> FuzzyDataset:
    """Re-draw the fuzzy codes of a dataset (optional per-epoch re-sampling)."""
    records = decode_dataset(dataset)
    return encode_dataset(records, dataset.schema, rng, fuzzy=True)


def validate_dataset(dataset: FuzzyDataset, fuzzy: bool = True, atol: float = 1e-12) -> None:
    """Check the structural invariants of a coded dataset; raises on violation.

    Observed multiclass blocks must sum to 1 with their maximum above 1/q,
    observed multilabel blocks must threshold-decode cleanly, missing blocks
    must be zero, and mbar must equal the expansion of mu.
    """
    xbar, mu, mbar, schema = dataset.xbar, dataset.mu, dataset.mbar, dataset.schema
    if not np.array_equal(mbar, expand_mask(mu, schema)):
        raise EncodingError("mbar is not the block expansion of mu")
    for j, spec in enumerate(schema.features):
        block = xbar[:, schema.block(j)]
        obs = mu[:, j] == 1.0
        if np.any(np.abs(block[~obs]) > 0):
            raise EncodingError(f"feature {spec.name!r}: missing blocks must be zero")
        if not np.all((block >= 0.0) & (block <= 1.0)):
            raise EncodingError(f"feature {spec.name!r}: entries outside [0, 1]")
        if not np.any(obs):
            continue
        if spec.kind == MULTICLASS:
            sums = block[obs].sum(axis=1)
            if np.any(np.abs(sums - 1.0) > atol):
                raise EncodingError(f"feature {spec.name!r}: observed blocks must sum to 1")
            if fuzzy and np.any(block[obs].max(axis=1) <= 1.0 / spec.cardinality + 0.0):
                raise EncodingError(f"feature {spec.name!r}: max entry must exceed 1/q")
