import math

import numpy as np
import pytest

from catgain.coding import encode_dataset, fuzzify_dataset
from catgain.errors import ConfigError, DivergenceError, SchemaError
from catgain.gain import (
    GainConfig,
    build_gain,
    discriminator_forward,
    generator_forward,
    impute,
    load_gain,
    loss_d,
    loss_g,
    loss_sim,
    sample_hints,
    sample_seeds,
    save_gain,
    train,
)
from catgain.harness import MaskingPlan, mask_dataset
from catgain.net import Mlp
from catgain.rng import substream
from catgain.schema import FeatureSchema, FeatureSpec
from _oracles import finite_diff, mlp_forward_reference, rel_err
from conftest import random_records


@pytest.fixture
def toy_model(mixed_schema):
    cfg = GainConfig(gen_hidden=(6, 6, 6), disc_hidden=(5, 5), seed=11)
    return build_gain(mixed_schema, cfg)


class TestBuild:
    def test_architecture_widths(self, mixed_schema):
        model = build_gain(mixed_schema, GainConfig(seed=0))
        q, p = mixed_schema.total_width, mixed_schema.p
        assert list(model.generator.sizes) == [2 * q, 2 * q, 2 * q, 2 * q, q]
        assert list(model.discriminator.sizes) == [2 * q, 2 * q, 2 * q, p]
        assert list(model.generator.head_starts) == [0, 3, 7, 8]

    def test_config_validation(self):
        with pytest.raises(ConfigError):
            GainConfig(hint_rate=1.5)
        with pytest.raises(ConfigError):
            GainConfig(seed_low=0.9, seed_high=0.1)
        with pytest.raises(ConfigError):
            GainConfig(epochs=-1)


class TestSeeds:
    def test_observed_rows_ignore_seeds(self, toy_model, mixed_schema, rng):
        ds = encode_dataset(random_records(mixed_schema, 6, rng), mixed_schema, rng)
        assert np.all(ds.mu == 1.0)
        out = generator_forward(toy_model, ds.xbar, ds.mbar, rng.random(ds.xbar.shape))
        np.testing.assert_array_equal(out, ds.xbar)

    def test_range_contract(self, rng):
        seeds = sample_seeds(np.zeros((4, 5)), 0.0, 1.0, rng)
        assert seeds.shape == (4, 5)
        assert np.all((seeds >= 0.0) & (seeds < 1.0))

    def test_law_of_large_numbers(self):
        seeds = sample_seeds(np.zeros(100_000), 0.0, 1.0, np.random.default_rng(3))
        assert abs(seeds.mean() - 0.5) < 0.01


class TestGeneratorForward:
    def test_passthrough_is_exact(self, toy_model, mixed_schema, rng):
        records = random_records(mixed_schema, 8, rng, missing_rate=0.4)
        ds = encode_dataset(records, mixed_schema, rng)
        out = generator_forward(toy_model, ds.xbar, ds.mbar, rng.random(ds.xbar.shape))
        obs = ds.mbar == 1.0
        np.testing.assert_array_equal(out[obs], ds.xbar[obs])

    def test_observed_block_kept_bitwise(self, toy_model, mixed_schema, rng):
        xbar = np.zeros(mixed_schema.total_width)
        xbar[:3] = [0.1, 0.8, 0.1]
        mbar = np.zeros(mixed_schema.total_width)
        mbar[:3] = 1.0
        out = generator_forward(toy_model, xbar, mbar, rng.random(xbar.shape))
        assert out[:3].tolist() == [0.1, 0.8, 0.1]

    def test_zero_weights_give_uniform_heads(self, toy_model, mixed_schema, rng):
        toy_model.generator.params[:] = 0.0
        xbar = np.zeros((2, mixed_schema.total_width))
        mbar = np.zeros_like(xbar)
        out = generator_forward(toy_model, xbar, mbar, rng.random(xbar.shape))
        np.testing.assert_allclose(out[:, 0:3], 1.0 / 3.0)  # multiclass block
        np.testing.assert_allclose(out[:, 3:], 0.5)  # sigmoid blocks

    def test_missing_multiclass_blocks_sum_to_one(self, toy_model, mixed_schema, rng):
        records = random_records(mixed_schema, 10, rng, missing_rate=0.6)
        ds = encode_dataset(records, mixed_schema, rng)
        out = generator_forward(toy_model, ds.xbar, ds.mbar, rng.random(ds.xbar.shape))
        np.testing.assert_allclose(np.atleast_2d(out)[:, 0:3].sum(axis=1), 1.0, atol=1e-12)

    def test_width_mismatch(self, toy_model, rng):
        with pytest.raises(SchemaError):
            generator_forward(toy_model, np.zeros(5), np.zeros(5), np.zeros(5))


class TestHints:
    def test_exact_count_per_row(self, rng):
        schema = FeatureSchema([FeatureSpec(f"f{j}", "multiclass", 2) for j in range(10)])
        mbar = (rng.random((50, 20)) < 0.5).astype(float)
        mbar = mbar[:, schema.feature_of_column][:, :20]  # keep blocks consistent
        mbar = (rng.random((50, 10)) < 0.5).astype(float)[:, schema.feature_of_column]
        hbar = sample_hints(mbar, 0.1, schema, rng)
        neutral = (hbar == 0.5) & (mbar != 0.5)
        per_row_features = neutral[:, schema.offsets[:-1]].sum(axis=1)
        np.testing.assert_array_equal(per_row_features, 1)
        untouched = ~neutral
        np.testing.assert_array_equal(hbar[untouched], mbar[untouched])

    def test_blocks_neutralized_wholly(self, mixed_schema, rng):
        mbar = np.ones((30, mixed_schema.total_width))
        hbar = sample_hints(mbar, 0.4, mixed_schema, rng)  # round(1.2) = 1 feature
        for i in range(30):
            for j in range(mixed_schema.p):
                block = hbar[i, mixed_schema.block(j)]
                assert np.all(block == 0.5) or np.all(block == 1.0)

    def test_rate_zero_copies_mask(self, mixed_schema, rng):
        mbar = (rng.random((9, mixed_schema.total_width)) < 0.5).astype(float)
        np.testing.assert_array_equal(sample_hints(mbar, 0.0, mixed_schema, rng), mbar)

    def test_rate_one_neutralizes_everything(self, mixed_schema, rng):
        mbar = np.ones((4, mixed_schema.total_width))
        np.testing.assert_array_equal(sample_hints(mbar, 1.0, mixed_schema, rng), 0.5)


class TestDiscriminatorForward:
    def test_zero_weights_give_half(self, toy_model, mixed_schema, rng):
        toy_model.discriminator.params[:] = 0.0
        q = mixed_schema.total_width
        out = discriminator_forward(toy_model, rng.random((3, q)), rng.random((3, q)))
        np.testing.assert_array_equal(out, 0.5)

    def test_output_is_per_feature(self, rng):
        schema = FeatureSchema(
            [
                FeatureSpec("a", "multiclass", 3),
                FeatureSpec("b", "multiclass", 2),
                FeatureSpec("c", "multiclass", 7),
            ]
        )
        model = build_gain(schema, GainConfig(seed=1))
        out = discriminator_forward(
            model, rng.random(schema.total_width), rng.random(schema.total_width)
        )
        assert out.shape == (3,)

    def test_matches_reference_recomputation(self, toy_model, mixed_schema, rng):
        q = mixed_schema.total_width
        gbar, hbar = rng.random((4, q)), rng.random((4, q))
        out = discriminator_forward(toy_model, gbar, hbar)
        d = toy_model.discriminator
        ref = mlp_forward_reference(
            d.params, d.sizes, d.acts, d.head_starts, d.head_kinds, np.concatenate([gbar, hbar], axis=1)
        )
        assert rel_err(out, ref) < 1e-10


class TestLosses:
    def test_d_oracle_values(self):
        assert loss_d([1, 0], [0.5, 0.5]) == pytest.approx(2 * math.log(2), abs=1e-9)
        assert loss_d([0], [0.5]) == pytest.approx(math.log(2), abs=1e-9)
        assert loss_d([1], [1 - 1e-7]) == pytest.approx(0.0, abs=1e-6)

    def test_g_oracle_values(self):
        assert loss_g([1, 1, 1], [0.2, 0.9, 0.5]) == 0.0
        assert loss_g([0], [0.5]) == pytest.approx(math.log(2), abs=1e-9)
        assert loss_g([0], [1.0]) == pytest.approx(0.0, abs=1e-6)

    def test_sim_oracle_values(self, multiclass_schema):
        schema = FeatureSchema([FeatureSpec("a", "multiclass", 3)])
        x = [0.1, 0.8, 0.1]
        same = loss_sim(x, x, [1, 1, 1], schema)
        expected = -(0.1 * math.log(0.1) + 0.8 * math.log(0.8) + 0.1 * math.log(0.1))
        assert same == pytest.approx(expected, abs=1e-9)
        uniform = loss_sim(x, [1 / 3] * 3, [1, 1, 1], schema)
        assert uniform == pytest.approx(math.log(3), abs=1e-9)
        assert loss_sim(x, [0.5, 0.2, 0.3], [0, 0, 0], schema) == 0.0

    def test_sim_numeric_blocks_use_squared_error(self, mixed_schema):
        x = np.zeros(8)
        g = np.zeros(8)
        x[7], g[7] = 0.2, 0.9
        mbar = np.zeros(8)
        mbar[7] = 1.0
        assert loss_sim(x, g, mbar, mixed_schema) == pytest.approx(0.7**2, abs=1e-12)


class TestCompositionGradients:
    """Analytic gradients of the three losses through the full
    generator-to-discriminator composition vs central finite differences."""

    def _setup(self, seed=0):
        rng = np.random.default_rng(seed)
        schema = FeatureSchema(
            [
                FeatureSpec("a", "multiclass", 3),
                FeatureSpec("b", "multilabel", 2),
                FeatureSpec("c", "numeric", 1),
            ]
        )
        cfg = GainConfig(gen_hidden=(5, 5, 5), disc_hidden=(4, 4), seed=seed)
        model = build_gain(schema, cfg)
        records = random_records(schema, 4, rng, missing_rate=0.4)
        ds = encode_dataset(records, schema, rng)
        if np.all(ds.mu == 1.0):  # need at least one missing cell
            ds.mu[0, 0] = 0.0
            ds.mbar[0, 0:3] = 0.0
            ds.xbar[0, 0:3] = 0.0
        rbar = rng.random(ds.xbar.shape)
        hbar = sample_hints(ds.mbar, 0.34, schema, rng)
        return model, schema, ds, rbar, hbar

    @staticmethod
    def _gen_objective(model, schema, ds, rbar, hbar, sim_weight):
        from catgain.gain import _clamp, _generator_raw

        g_raw, _ = _generator_raw(model, ds.xbar, ds.mbar, rbar)
        gbar = ds.mbar * ds.xbar + (1.0 - ds.mbar) * g_raw
        muhat = discriminator_forward(model, gbar, hbar)
        total = 0.0
        for i in range(ds.n):
            total += loss_g(ds.mu[i], muhat[i]) + sim_weight * loss_sim(
                ds.xbar[i], g_raw[i], ds.mbar[i], schema
            )
        return total

    @pytest.mark.parametrize("seed", range(3))
    def test_generator_objective_gradient(self, seed):
        from catgain.gain import _clamp, _generator_raw, _numeric_columns

        model, schema, ds, rbar, hbar = self._setup(seed)
        sim_weight = 0.7
        gen = model.generator

        def objective(params):
            probe_gen = Mlp(gen.sizes, gen.acts, gen.head_starts, gen.head_kinds, params)
            probe = type(model)(
                probe_gen, model.discriminator, schema,
                model.hint_rate, sim_weight, model.seed_low, model.seed_high,
            )
            return self._gen_objective(probe, schema, ds, rbar, hbar, sim_weight)

        # analytic gradient, same path as the training step
        g_raw, g_cache = _generator_raw(model, ds.xbar, ds.mbar, rbar)
        gbar = ds.mbar * ds.xbar + (1.0 - ds.mbar) * g_raw
        d_in = np.concatenate([gbar, hbar], axis=1)
        muhat, d_cache = model.discriminator.forward(d_in)
        mc = _clamp(muhat)
        d_mu = -(1.0 - ds.mu) / mc
        _, d_input = model.discriminator.backward(d_cache, d_mu)
        d_graw = d_input[:, : schema.total_width] * (1.0 - ds.mbar)
        numeric = _numeric_columns(schema)
        d_sim = np.where(numeric, 2.0 * (g_raw - ds.xbar), -ds.xbar / _clamp(g_raw))
        d_graw += sim_weight * ds.mbar * d_sim
        grads, _ = model.generator.backward(g_cache, d_graw)

        assert rel_err(grads, finite_diff(objective, gen.params)) < 1e-4

    @pytest.mark.parametrize("seed", range(3))
    def test_discriminator_objective_gradient(self, seed):
        from catgain.gain import _clamp, _generator_raw

        model, schema, ds, rbar, hbar = self._setup(seed)
        g_raw, _ = _generator_raw(model, ds.xbar, ds.mbar, rbar)
        gbar = ds.mbar * ds.xbar + (1.0 - ds.mbar) * g_raw
        disc = model.discriminator

        def objective(params):
            probe = Mlp(disc.sizes, disc.acts, disc.head_starts, disc.head_kinds, params)
            muhat, _ = probe.forward(np.concatenate([gbar, hbar], axis=1))
            return float(sum(loss_d(ds.mu[i], muhat[i]) for i in range(ds.n)))

        muhat, d_cache = disc.forward(np.concatenate([gbar, hbar], axis=1))
        mc = _clamp(muhat)
        d_mu = -(ds.mu / mc) + (1.0 - ds.mu) / (1.0 - mc)
        grads, _ = disc.backward(d_cache, d_mu)

        assert rel_err(grads, finite_diff(objective, disc.params)) < 1e-4


class TestTrain:
    def test_zero_epochs_is_identity(self, toy_model, mixed_schema, rng):
        ds = encode_dataset(random_records(mixed_schema, 10, rng), mixed_schema, rng)
        before_g = toy_model.generator.params.copy()
        before_d = toy_model.discriminator.params.copy()
        model, trace = train(toy_model, ds, GainConfig(epochs=0, seed=1))
        assert trace.epochs == 0
        np.testing.assert_array_equal(model.generator.params, before_g)
        np.testing.assert_array_equal(model.discriminator.params, before_d)

    def test_bitwise_determinism(self, mixed_schema, rng):
        records = random_records(mixed_schema, 40, rng, missing_rate=0.3)
        results = []
        for _ in range(2):
            cfg = GainConfig(epochs=5, gen_hidden=(8, 8, 8), disc_hidden=(6, 6), seed=21)
            ds = encode_dataset(records, mixed_schema, np.random.default_rng(5))
            model, trace = train(build_gain(mixed_schema, cfg), ds, cfg)
            results.append((model.generator.params.copy(), trace.loss_g[:]))
        np.testing.assert_array_equal(results[0][0], results[1][0])
        assert results[0][1] == results[1][1]

    def test_trace_lengths_and_finiteness(self, toy_model, mixed_schema, rng):
        records = random_records(mixed_schema, 30, rng, missing_rate=0.3)
        ds = encode_dataset(records, mixed_schema, rng)
        _, trace = train(toy_model, ds, GainConfig(epochs=4, seed=2))
        assert trace.epochs == 4
        for series in (trace.loss_d, trace.loss_g, trace.loss_sim):
            assert len(series) == 4
            assert all(np.isfinite(v) and v >= 0 for v in series)

    def test_divergence_error_carries_trace(self, toy_model, mixed_schema, rng):
        records = random_records(mixed_schema, 20, rng, missing_rate=0.3)
        ds = encode_dataset(records, mixed_schema, rng)
        toy_model.generator.params[:] = np.inf
        with pytest.raises(DivergenceError) as exc:
            train(toy_model, ds, GainConfig(epochs=3, seed=0))
        assert exc.value.epoch == 0
        assert exc.value.trace.epochs == 1

    def test_schema_mismatch(self, toy_model, multiclass_schema, rng):
        ds = encode_dataset(random_records(multiclass_schema, 5, rng), multiclass_schema, rng)
        with pytest.raises(SchemaError):
            train(toy_model, ds, GainConfig(epochs=1))

    def test_learns_deterministic_rule(self):
        # feature b always equals feature a; a observed, b masked half the time
        rng = np.random.default_rng(9)
        schema = FeatureSchema(
            [FeatureSpec("a", "multiclass", 2), FeatureSpec("b", "multiclass", 2)]
        )
        records = []
        hidden = []
        for i in range(400):
            a = int(rng.integers(2))
            masked = rng.random() < 0.5
            records.append((a, None if masked else a))
            hidden.append((i, a) if masked else None)
        ds = encode_dataset(records, schema, rng)
        cfg = GainConfig(epochs=300, batch_size=64, seed=4)
        model, _ = train(build_gain(schema, cfg), ds, cfg)
        result = impute(model, ds, 1, substream(0, "imp"))
        completion = result.completions[0]
        checks = [completion[i][1] == a for i, a in filter(None, hidden)]
        assert np.mean(checks) > 0.9


class TestImpute:
    def test_complete_data_identity(self, toy_model, mixed_schema, rng):
        records = random_records(mixed_schema, 12, rng)
        ds = encode_dataset(records, mixed_schema, rng)
        result = impute(toy_model, ds, 4, substream(1, "imp"))
        for completion in result.completions:
            assert completion == records
        assert result.agreement == []

    def test_same_seed_identical(self, toy_model, mixed_schema, rng):
        records = random_records(mixed_schema, 10, rng, missing_rate=0.4)
        ds = encode_dataset(records, mixed_schema, rng)
        r1 = impute(toy_model, ds, 2, substream(7, "imp"))
        r2 = impute(toy_model, ds, 2, substream(7, "imp"))
        assert r1.completions == r2.completions

    def test_agreement_bounds_and_high_confidence_rule(self):
        rng = np.random.default_rng(13)
        schema = FeatureSchema(
            [FeatureSpec("a", "multiclass", 2), FeatureSpec("b", "multiclass", 2)]
        )
        records = []
        for _ in range(300):
            a = int(rng.integers(2))
            records.append((a, None if rng.random() < 0.5 else a))
        ds = encode_dataset(records, schema, rng)
        cfg = GainConfig(epochs=300, batch_size=64, seed=6)
        model, _ = train(build_gain(schema, cfg), ds, cfg)
        result = impute(model, ds, 20, substream(2, "imp"))
        freqs = [cell.frequency for cell in result.agreement]
        assert all(0.0 < f <= 1.0 for f in freqs)
        assert np.mean(freqs) >= 0.95

    def test_k_validation(self, toy_model, mixed_schema, rng):
        ds = encode_dataset(random_records(mixed_schema, 4, rng), mixed_schema, rng)
        with pytest.raises(ConfigError):
            impute(toy_model, ds, 0, rng)


class TestPersistence:
    def test_save_load_round_trip(self, toy_model, mixed_schema, tmp_path, rng):
        path = tmp_path / "gain.bin"
        save_gain(path, toy_model)
        loaded = load_gain(path, mixed_schema)
        np.testing.assert_array_equal(loaded.generator.params, toy_model.generator.params)
        np.testing.assert_array_equal(loaded.discriminator.params, toy_model.discriminator.params)
        assert loaded.hint_rate == toy_model.hint_rate
        ds = encode_dataset(random_records(mixed_schema, 5, rng, missing_rate=0.5), mixed_schema, rng)
        rbar = rng.random(ds.xbar.shape)
        np.testing.assert_array_equal(
            generator_forward(loaded, ds.xbar, ds.mbar, rbar),
            generator_forward(toy_model, ds.xbar, ds.mbar, rbar),
        )

    def test_wrong_schema_rejected(self, toy_model, multiclass_schema, tmp_path):
        path = tmp_path / "gain.bin"
        save_gain(path, toy_model)
        with pytest.raises(SchemaError):
            load_gain(path, multiclass_schema)
