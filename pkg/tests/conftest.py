import numpy as np
import pytest

from catgain.schema import FeatureSchema, FeatureSpec


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def mixed_schema():
    """One of each feature kind; Q = 3 + 4 + 1 = 8."""
    return FeatureSchema(
        [
            FeatureSpec("color", "multiclass", 3),
            FeatureSpec("tags", "multilabel", 4),
            FeatureSpec("score", "numeric", 1),
        ]
    )


@pytest.fixture
def multiclass_schema():
    return FeatureSchema(
        [
            FeatureSpec("a", "multiclass", 3),
            FeatureSpec("b", "multiclass", 2),
        ]
    )


def random_records(schema, n, rng, missing_rate=0.0):
    """Schema-conforming random records, optionally with missing cells."""
    records = []
    for _ in range(n):
        values = []
        for spec in schema.features:
            if missing_rate and rng.random() < missing_rate:
                values.append(None)
            elif spec.kind == "multiclass":
                values.append(int(rng.integers(spec.cardinality)))
            elif spec.kind == "multilabel":
                values.append(set(np.flatnonzero(rng.random(spec.cardinality) < 0.5).tolist()))
            else:
                values.append(float(rng.random()))
        records.append(tuple(values))
    return records
