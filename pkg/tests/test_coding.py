import itertools

import numpy as np
import pytest

from catgain.coding import (
    MISSING,
    build_masks,
    collapse_mask,
    decode,
    decode_dataset,
    decode_row,
    encode_binary,
    encode_dataset,
    expand_mask,
    fuzzify_dataset,
    fuzzify_matrix,
    fuzzify_multiclass,
    fuzzify_multilabel,
    harden,
    refuzzify,
    validate_dataset,
)
from catgain.errors import EncodingError, SchemaError
from catgain.schema import FeatureSchema, FeatureSpec
from conftest import random_records


class TestEncodeBinary:
    def test_multiclass_one_hot(self, multiclass_schema):
        z, mu = encode_binary((1, 0), multiclass_schema)
        assert z.tolist() == [0, 1, 0, 1, 0]
        assert mu.tolist() == [1, 1]

    def test_missing_gives_zero_block(self, multiclass_schema):
        z, mu = encode_binary((MISSING, 1), multiclass_schema)
        assert z.tolist() == [0, 0, 0, 0, 1]
        assert mu.tolist() == [0, 1]

    def test_multilabel_multi_hot(self, mixed_schema):
        z, mu = encode_binary((2, {0, 2}, 0.25), mixed_schema)
        assert z.tolist() == [0, 0, 1, 1, 0, 1, 0, 0.25]
        assert mu.tolist() == [1, 1, 1]

    def test_category_out_of_range(self, multiclass_schema):
        with pytest.raises(SchemaError, match="out of range"):
            encode_binary((3, 0), multiclass_schema)
        with pytest.raises(SchemaError, match="out of range"):
            encode_binary((0, -1), multiclass_schema)

    def test_numeric_out_of_range(self, mixed_schema):
        with pytest.raises(SchemaError, match="outside"):
            encode_binary((0, set(), 1.5), mixed_schema)

    def test_wrong_length(self, multiclass_schema):
        with pytest.raises(SchemaError, match="2 features"):
            encode_binary((0,), multiclass_schema)


class TestFuzzifyMulticlass:
    def test_fuzzy_block_structure(self, rng):
        x = fuzzify_multiclass(np.array([0.0, 1.0, 0.0]), rng)
        assert x[0] < 1 / 3 and x[2] < 1 / 3
        assert x[1] == pytest.approx(1.0 - x[0] - x[2])
        assert abs(x.sum() - 1.0) < 1e-12
        assert np.argmax(x) == 1

    def test_degenerate_single_category(self, rng):
        assert fuzzify_multiclass(np.array([1.0]), rng).tolist() == [1.0]

    def test_rejects_non_one_hot(self, rng):
        with pytest.raises(EncodingError):
            fuzzify_multiclass(np.array([1.0, 1.0]), rng)
        with pytest.raises(EncodingError):
            fuzzify_multiclass(np.array([0.0, 0.5]), rng)

    def test_retention_exhaustive(self, rng):
        # every active index, q = 2..4, repeated draws: argmax always recovers
        for q in range(2, 5):
            for active in range(q):
                z = np.zeros(q)
                z[active] = 1.0
                for _ in range(200):
                    x = fuzzify_multiclass(z, rng)
                    assert np.argmax(x) == active
                    assert abs(x.sum() - 1.0) < 1e-12
                    assert x[active] > 1.0 / q


class TestFuzzifyMultilabel:
    def test_branch_bounds(self, rng):
        x = fuzzify_multilabel(np.array([1.0, 0.0, 1.0]), rng)
        assert x[0] >= 0.5 and x[2] >= 0.5 and x[1] < 0.5

    def test_all_zero(self, rng):
        assert np.all(fuzzify_multilabel(np.zeros(4), rng) < 0.5)

    def test_rejects_non_binary(self, rng):
        with pytest.raises(EncodingError):
            fuzzify_multilabel(np.array([0.2, 1.0]), rng)

    def test_retention_exhaustive(self, rng):
        for bits in itertools.product((0.0, 1.0), repeat=4):
            z = np.array(bits)
            for _ in range(200):
                x = fuzzify_multilabel(z, rng)
                assert np.array_equal((x >= 0.5).astype(float), z)


class TestDecode:
    def test_multiclass_argmax(self):
        assert decode(np.array([0.1, 0.8, 0.1]), FeatureSpec("f", "multiclass", 3)) == 1

    def test_multilabel_boundary_is_active(self):
        spec = FeatureSpec("f", "multilabel", 3)
        assert decode(np.array([0.5, 0.49, 1.0]), spec) == {0, 2}

    def test_tie_breaks_to_lowest_index(self):
        assert decode(np.array([0.4, 0.4, 0.2]), FeatureSpec("f", "multiclass", 3)) == 0

    def test_numeric_passthrough(self):
        assert decode(np.array([0.3]), FeatureSpec("f", "numeric", 1)) == 0.3

    def test_wrong_block_length(self):
        with pytest.raises(SchemaError):
            decode(np.array([0.1, 0.9]), FeatureSpec("f", "multiclass", 3))


class TestMasks:
    def test_expansion_repeats_per_cardinality(self, multiclass_schema):
        assert build_masks(np.array([1.0, 0.0]), multiclass_schema).tolist() == [1, 1, 1, 0, 0]

    def test_all_ones_and_all_zeros(self, multiclass_schema):
        assert build_masks(np.ones(2), multiclass_schema).tolist() == [1] * 5
        assert build_masks(np.zeros(2), multiclass_schema).tolist() == [0] * 5

    def test_wrong_length(self, multiclass_schema):
        with pytest.raises(SchemaError):
            build_masks(np.ones(3), multiclass_schema)

    def test_expand_collapse_round_trip(self, mixed_schema, rng):
        mu = (rng.random((20, 3)) < 0.5).astype(float)
        assert np.array_equal(collapse_mask(expand_mask(mu, mixed_schema), mixed_schema), mu)


class TestEncodeDataset:
    def test_single_observed_record(self, rng):
        schema = FeatureSchema([FeatureSpec("a", "multiclass", 3)])
        ds = encode_dataset([(1,)], schema, rng)
        assert ds.xbar.shape == (1, 3)
        assert abs(ds.xbar.sum() - 1.0) < 1e-12
        assert ds.mu.tolist() == [[1.0]]
        assert ds.mbar.tolist() == [[1.0, 1.0, 1.0]]

    def test_all_missing_record(self, mixed_schema, rng):
        ds = encode_dataset([(MISSING, MISSING, MISSING)], mixed_schema, rng)
        assert not ds.xbar.any()
        assert not ds.mu.any()
        assert not ds.mbar.any()

    def test_round_trip_on_random_corpus(self, mixed_schema, rng):
        records = random_records(mixed_schema, 50, rng)
        ds = encode_dataset(records, mixed_schema, rng)
        assert decode_dataset(ds) == records

    def test_row_errors_are_aggregated_with_indices(self, multiclass_schema, rng):
        with pytest.raises(SchemaError, match="row 1.*row 3"):
            encode_dataset([(0, 0), (9, 0), (1, 1), (0, 5)], multiclass_schema, rng)

    def test_rng_required_for_fuzzy(self, multiclass_schema):
        with pytest.raises(ValueError):
            encode_dataset([(0, 0)], multiclass_schema)

    def test_hard_mode_gives_plain_codes(self, multiclass_schema):
        ds = encode_dataset([(2, 1)], multiclass_schema, fuzzy=False)
        assert ds.xbar.tolist() == [[0, 0, 1, 0, 1]]

    def test_invariants_validate(self, mixed_schema, rng):
        records = random_records(mixed_schema, 30, rng, missing_rate=0.3)
        ds = encode_dataset(records, mixed_schema, rng)
        validate_dataset(ds)
        broken = ds.copy()
        broken.mbar[0, 0] = 1.0 - broken.mbar[0, 0]
        with pytest.raises(EncodingError):
            validate_dataset(broken)


class TestMatrixHelpers:
    def test_fuzzify_matrix_matches_per_vector_semantics(self, mixed_schema, rng):
        records = random_records(mixed_schema, 40, rng, missing_rate=0.2)
        hard = encode_dataset(records, mixed_schema, fuzzy=False)
        fuzzy = fuzzify_dataset(hard, rng)
        validate_dataset(fuzzy)
        assert decode_dataset(fuzzy) == records
        # numeric values are left untouched by fuzzification
        num_col = mixed_schema.block(2).start
        obs = hard.mu[:, 2] == 1.0
        assert np.array_equal(fuzzy.xbar[obs, num_col], hard.xbar[obs, num_col])

    def test_harden_equals_decode_then_encode(self, mixed_schema, rng):
        records = random_records(mixed_schema, 25, rng)
        fuzzy = encode_dataset(records, mixed_schema, rng)
        via_records = encode_dataset(decode_dataset(fuzzy), mixed_schema, fuzzy=False)
        assert np.array_equal(harden(fuzzy.xbar, mixed_schema), via_records.xbar)

    def test_refuzzify_preserves_decoding(self, mixed_schema, rng):
        records = random_records(mixed_schema, 20, rng, missing_rate=0.2)
        ds = encode_dataset(records, mixed_schema, rng)
        again = refuzzify(ds, np.random.default_rng(7))
        assert decode_dataset(again) == records
        assert np.array_equal(again.mu, ds.mu)


def test_decode_row_keeps_missing(mixed_schema, rng):
    ds = encode_dataset([(1, {0}, MISSING)], mixed_schema, rng)
    assert decode_row(ds.xbar[0], ds.mu[0], mixed_schema) == (1, {0}, MISSING)
