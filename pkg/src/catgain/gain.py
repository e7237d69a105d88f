"""Adversarial imputation of coded categorical data.

The generator receives the coded row with random seeds filled into missing
positions plus the expanded mask, and produces per-feature head outputs
(softmax over each multiclass block, sigmoid elsewhere).  Observed positions
of its output are always replaced by the real values, so only generated
values are ever exposed downstream.  The discriminator receives the mixed
row together with a hint vector (the mask with a sampled subset of feature
blocks neutralized to 0.5) and emits one probability per feature - an
estimate of that feature's missingness, not one per category.

Training alternates one discriminator update and one generator update per
minibatch.  The discriminator minimizes the per-feature log-loss against the
true missingness; the generator minimizes the adversarial fooling loss plus
a weighted similarity loss that ties its raw head outputs to the observed
coded values (cross-entropy for categorical blocks, squared error for
numeric ones).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .coding import FuzzyDataset, decode_row, refuzzify
from .errors import ConfigError, DivergenceError, NumericError, SchemaError
from .net import (
    ACT_HEAD,
    ACT_RELU,
    ACT_SIGMOID,
    HEAD_SIGMOID,
    HEAD_SOFTMAX,
    Adam,
    Mlp,
    load_model,
    make_mlp,
    save_model,
)
from .rng import substream
from .schema import MULTICLASS, NUMERIC, FeatureSchema

PROB_EPS = 1e-7  # probabilities are clamped to [eps, 1-eps] before any log


@dataclass
class GainConfig:
    """Training hyperparameters; the architecture depths are fixed (3+2 hidden)."""

    epochs: int = 500
    batch_size: int = 64
    hint_rate: float = 0.1
    sim_weight: float = 1.0
    learning_rate: float = 1e-3
    seed_low: float = 0.0
    seed_high: float = 1.0
    gen_hidden: tuple[int, int, int] | None = None  # defaults to 2Q each
    disc_hidden: tuple[int, int] | None = None
    refuzzify_each_epoch: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 0 or self.batch_size < 1:
            raise ConfigError("epochs must be >= 0 and batch_size >= 1")
        if not 0.0 <= self.hint_rate <= 1.0:
            raise ConfigError("hint_rate must lie in [0, 1]")
        if not (0.0 <= self.seed_low <= self.seed_high <= 1.0):
            raise ConfigError("seed bounds must satisfy 0 <= low <= high <= 1")
        if self.sim_weight < 0 or self.learning_rate <= 0:
            raise ConfigError("sim_weight must be >= 0 and learning_rate > 0")


@dataclass
class GainModel:
    generator: Mlp
    discriminator: Mlp
    schema: FeatureSchema
    hint_rate: float
    sim_weight: float
    seed_low: float
    seed_high: float


@dataclass
class TrainTrace:
    """Per-epoch mean losses of the adversarial training."""

    loss_d: list[float] = field(default_factory=list)
    loss_g: list[float] = field(default_factory=list)
    loss_sim: list[float] = field(default_factory=list)

    @property
    def epochs(self) -> int:
        return len(self.loss_d)

    def rows(self):
        for e in range(self.epochs):
            yield e, self.loss_d[e], self.loss_g[e], self.loss_sim[e]


def _head_layout(schema: FeatureSchema):
    kinds = np.array(
        [HEAD_SOFTMAX if f.kind == MULTICLASS else HEAD_SIGMOID for f in schema.features],
        dtype=np.int64,
    )
    return schema.offsets.astype(np.int64), kinds


def build_gain(schema: FeatureSchema, config: GainConfig) -> GainModel:
    """Initialize generator and discriminator for a schema."""
    q = schema.total_width
    p = schema.p
    gh = config.gen_hidden or (2 * q, 2 * q, 2 * q)
    dh = config.disc_hidden or (2 * q, 2 * q)
    head_starts, head_kinds = _head_layout(schema)
    gen = make_mlp(
        [2 * q, *gh, q],
        [ACT_RELU, ACT_RELU, ACT_RELU, ACT_HEAD],
        substream(config.seed, "init", "generator"),
        head_starts=head_starts,
        head_kinds=head_kinds,
    )
    disc = make_mlp(
        [2 * q, *dh, p],
        [ACT_RELU, ACT_RELU, ACT_SIGMOID],
        substream(config.seed, "init", "discriminator"),
    )
    return GainModel(
        generator=gen,
        discriminator=disc,
        schema=schema,
        hint_rate=config.hint_rate,
        sim_weight=config.sim_weight,
        seed_low=config.seed_low,
        seed_high=config.seed_high,
    )


def sample_seeds(mbar: np.ndarray, low: float, high: float, rng: np.random.Generator) -> np.ndarray:
    """Uniform seed values, one per coded position; only the positions with
    mask 0 ever reach the generator."""
    return rng.uniform(low, high, size=np.asarray(mbar).shape)


def _generator_raw(model: GainModel, xbar, mbar, rbar):
    xin = np.concatenate([xbar + (1.0 - mbar) * rbar, mbar], axis=-1)
    return model.generator.forward(np.atleast_2d(xin))


def generator_forward(model: GainModel, xbar, mbar, rbar) -> np.ndarray:
    """Impute one row or a batch: head outputs at missing positions, the real
    values everywhere observed."""
    was_row = np.asarray(xbar).ndim == 1
    xbar = np.atleast_2d(np.asarray(xbar, dtype=float))
    mbar = np.atleast_2d(np.asarray(mbar, dtype=float))
    rbar = np.atleast_2d(np.asarray(rbar, dtype=float))
    if xbar.shape[1] != model.schema.total_width:
        raise SchemaError(f"row width {xbar.shape[1]} != schema width {model.schema.total_width}")
    g_raw, _ = _generator_raw(model, xbar, mbar, rbar)
    gbar = mbar * xbar + (1.0 - mbar) * g_raw
    return gbar[0] if was_row else gbar


def _sample_hints(mbar: np.ndarray, hint_rate: float, schema: FeatureSchema,
                  rng: np.random.Generator):
    """Hint matrix plus the (rows, p) indicator of the neutralized features."""
    mbar = np.atleast_2d(np.asarray(mbar, dtype=float))
    n, p = mbar.shape[0], schema.p
    n_hidden = int(np.floor(hint_rate * p + 0.5))
    hbar = mbar.copy()
    neutral = np.zeros((n, p), dtype=bool)
    if n_hidden > 0:
        chosen = np.argsort(rng.random((n, p)), axis=1)[:, :n_hidden]
        np.put_along_axis(neutral, chosen, True, axis=1)
        hbar[neutral[:, schema.feature_of_column]] = 0.5
    return hbar, neutral


def sample_hints(mbar: np.ndarray, hint_rate: float, schema: FeatureSchema,
                 rng: np.random.Generator) -> np.ndarray:
    """Copy the mask and neutralize a sampled subset of feature blocks to 0.5.

    Exactly round(hint_rate * p) features per row are chosen uniformly
    without replacement; their whole blocks become 0.5.
    """
    was_row = np.asarray(mbar).ndim == 1
    hbar, _ = _sample_hints(mbar, hint_rate, schema, rng)
    return hbar[0] if was_row else hbar


def discriminator_forward(model: GainModel, gbar, hbar) -> np.ndarray:
    """One missingness probability per feature (length p, not Q)."""
    was_row = np.asarray(gbar).ndim == 1
    gbar = np.atleast_2d(np.asarray(gbar, dtype=float))
    hbar = np.atleast_2d(np.asarray(hbar, dtype=float))
    muhat, _ = model.discriminator.forward(np.concatenate([gbar, hbar], axis=-1))
    return muhat[0] if was_row else muhat


def _clamp(p: np.ndarray) -> np.ndarray:
    return np.clip(p, PROB_EPS, 1.0 - PROB_EPS)


def _loss_d_terms(mu, muhat) -> np.ndarray:
    muhat = _clamp(muhat)
    return -(mu * np.log(muhat) + (1.0 - mu) * np.log(1.0 - muhat))


def _loss_d_rows(mu, muhat) -> np.ndarray:
    return _loss_d_terms(mu, muhat).sum(axis=-1)


def _loss_g_terms(mu, muhat) -> np.ndarray:
    return -((1.0 - mu) * np.log(_clamp(muhat)))


def _loss_g_rows(mu, muhat) -> np.ndarray:
    return _loss_g_terms(mu, muhat).sum(axis=-1)


def _numeric_columns(schema: FeatureSchema) -> np.ndarray:
    return np.array([f.kind == NUMERIC for f in schema.features])[schema.feature_of_column]


def _loss_sim_rows(xbar, g_raw, mbar, schema: FeatureSchema) -> np.ndarray:
    num = _numeric_columns(schema)
    ce = -xbar * np.log(_clamp(g_raw))
    sq = (g_raw - xbar) ** 2
    return (mbar * np.where(num, sq, ce)).sum(axis=-1)


def loss_d(mu, muhat) -> float:
    """Discriminator log-loss against the true per-feature missingness."""
    return float(_loss_d_rows(np.asarray(mu, float), np.asarray(muhat, float)))


def loss_g(mu, muhat) -> float:
    """Adversarial generator loss; only missing features contribute."""
    return float(_loss_g_rows(np.asarray(mu, float), np.asarray(muhat, float)))


def loss_sim(xbar, g_raw, mbar, schema: FeatureSchema) -> float:
    """Similarity of raw head outputs to the observed coded values."""
    return float(
        _loss_sim_rows(
            np.asarray(xbar, float), np.asarray(g_raw, float), np.asarray(mbar, float), schema
        )
    )


def train(model: GainModel, dataset: FuzzyDataset, config: GainConfig):
    """Alternating adversarial training; returns (model, TrainTrace).

    The adversarial losses are accounted over the hint-neutralized features
    only: everywhere else the hint vector hands the discriminator the answer
    outright, so no fooling is possible there and those terms would swamp
    the trainable signal.  The similarity loss covers all observed features.

    Deterministic under ``config.seed``: shuffling, seeds, hints (and the
    optional per-epoch re-fuzzification) each draw from named substreams.
    """
    if dataset.n == 0:
        raise SchemaError("cannot train on an empty dataset")
    if dataset.schema != model.schema:
        raise SchemaError("dataset schema does not match model schema")
    q = model.schema.total_width
    numeric = _numeric_columns(model.schema)
    adam_g = Adam.for_params(model.generator.params, lr=config.learning_rate)
    adam_d = Adam.for_params(model.discriminator.params, lr=config.learning_rate)
    trace = TrainTrace()

    for epoch in range(config.epochs):
        if config.refuzzify_each_epoch:
            dataset = refuzzify(dataset, substream(config.seed, "fuzz", epoch))
        perm = substream(config.seed, "shuffle", epoch).permutation(dataset.n)
        seeds = sample_seeds(
            dataset.mbar, config.seed_low, config.seed_high, substream(config.seed, "seeds", epoch)
        )
        hint_rng = substream(config.seed, "hints", epoch)

        sums = np.zeros(3)
        seen = 0
        for start in range(0, dataset.n, config.batch_size):
            ids = perm[start : start + config.batch_size]
            nb = ids.shape[0]
            xb = dataset.xbar[ids]
            mb = dataset.mbar[ids]
            mu_b = dataset.mu[ids]
            rb = seeds[ids]

            g_raw, g_cache = _generator_raw(model, xb, mb, rb)
            gbar = mb * xb + (1.0 - mb) * g_raw
            hb, neutral = _sample_hints(mb, config.hint_rate, model.schema, hint_rng)
            w_adv = neutral.astype(float)

            try:
                # discriminator step: log-loss against the true missingness
                # of the neutralized features
                d_in = np.concatenate([gbar, hb], axis=1)
                muhat, d_cache = model.discriminator.forward(d_in)
                mc = _clamp(muhat)
                batch_ld = float((w_adv * _loss_d_terms(mu_b, muhat)).sum())
                d_mu = w_adv * (-(mu_b / mc) + (1.0 - mu_b) / (1.0 - mc)) / nb
                d_grads, _ = model.discriminator.backward(d_cache, d_mu)
                adam_d.update(model.discriminator.params, d_grads)

                # generator step against the updated discriminator
                muhat2, d_cache2 = model.discriminator.forward(d_in)
                mc2 = _clamp(muhat2)
                batch_lg = float((w_adv * _loss_g_terms(mu_b, muhat2)).sum())
                batch_ls = float(_loss_sim_rows(xb, g_raw, mb, model.schema).sum())
                d_mu2 = w_adv * (-(1.0 - mu_b) / mc2) / nb
                _, d_input = model.discriminator.backward(d_cache2, d_mu2)
                d_graw = d_input[:, :q] * (1.0 - mb)
                gc = _clamp(g_raw)
                d_sim = np.where(numeric, 2.0 * (g_raw - xb), -xb / gc)
                d_graw += config.sim_weight * mb * d_sim / nb
                g_grads, _ = model.generator.backward(g_cache, d_graw)
                adam_g.update(model.generator.params, g_grads)
            except NumericError as exc:
                means = sums / seen if seen else np.full(3, np.nan)
                trace.loss_d.append(float(means[0]))
                trace.loss_g.append(float(means[1]))
                trace.loss_sim.append(float(means[2]))
                raise DivergenceError(str(exc), epoch=epoch, trace=trace) from exc

            sums += (batch_ld, batch_lg, batch_ls)
            seen += nb

        means = sums / dataset.n
        trace.loss_d.append(float(means[0]))
        trace.loss_g.append(float(means[1]))
        trace.loss_sim.append(float(means[2]))
        if not np.all(np.isfinite(means)):
            raise DivergenceError("non-finite training loss", epoch=epoch, trace=trace)
    return model, trace


@dataclass
class CellAgreement:
    row: int
    feature: str
    value: object  # modal imputed value across the draws
    frequency: float


@dataclass
class ImputationResult:
    """k stochastic completions plus per-missing-cell agreement statistics."""

    completions: list  # k lists of decoded records
    agreement: list[CellAgreement]
    schema: FeatureSchema
    mu: np.ndarray  # original missingness of the imputed dataset


def _freeze(value):
    return frozenset(value) if isinstance(value, set) else value


def _thaw(value):
    return set(value) if isinstance(value, frozenset) else value


def impute(model: GainModel, dataset: FuzzyDataset, k: int, rng: np.random.Generator) -> ImputationResult:
    """Multiple imputation: k independent seed draws, decoded to records.

    Observed cells are identical across draws and equal to the input.  The
    modal value of numeric cells is the most frequent exact draw, which is
    informative only when the generator is (near-)deterministic there.
    """
    if k < 1:
        raise ConfigError("k must be >= 1")
    if dataset.schema != model.schema:
        raise SchemaError("dataset schema does not match model schema")
    ones = np.ones(model.schema.p)
    completions = []
    for _ in range(k):
        rbar = sample_seeds(dataset.mbar, model.seed_low, model.seed_high, rng)
        gbar = generator_forward(model, dataset.xbar, dataset.mbar, rbar)
        gbar = np.atleast_2d(gbar)
        completions.append([decode_row(gbar[i], ones, dataset.schema) for i in range(dataset.n)])

    agreement = []
    for i, j in zip(*np.nonzero(dataset.mu == 0.0)):
        counts: dict = {}
        for draw in completions:
            key = _freeze(draw[i][j])
            counts[key] = counts.get(key, 0) + 1
        best = max(sorted(counts, key=repr), key=counts.get)
        agreement.append(
            CellAgreement(
                row=int(i),
                feature=dataset.schema.features[j].name,
                value=_thaw(best),
                frequency=counts[best] / k,
            )
        )
    return ImputationResult(completions, agreement, dataset.schema, dataset.mu.copy())


def save_gain(path, model: GainModel) -> None:
    save_model(
        path,
        {"generator": model.generator, "discriminator": model.discriminator},
        schema_hash=model.schema.hash,
        meta={
            "kind": "gain",
            "hint_rate": model.hint_rate,
            "sim_weight": model.sim_weight,
            "seed_low": model.seed_low,
            "seed_high": model.seed_high,
        },
    )


def load_gain(path, schema: FeatureSchema) -> GainModel:
    nets, _, meta = load_model(path, expect_schema_hash=schema.hash)
    if meta.get("kind") != "gain" or set(nets) != {"generator", "discriminator"}:
        raise SchemaError(f"{path}: not a saved imputation model")
    return GainModel(
        generator=nets["generator"],
        discriminator=nets["discriminator"],
        schema=schema,
        hint_rate=meta["hint_rate"],
        sim_weight=meta["sim_weight"],
        seed_low=meta["seed_low"],
        seed_high=meta["seed_high"],
    )
