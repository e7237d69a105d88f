"""Benchmark protocol: MCAR masking, k-fold cross-validation, ridge logistic
regression on imputed features, accuracy/AUROC, and sanity baselines.

For every fold x masking-proportion cell, each observed feature cell of the
whole dataset is masked independently; every imputer is fitted on the masked
training fold only and applied to both splits; the downstream classifier is
fitted on the imputed training fold and scored on the imputed test fold.
The adversarial imputer contributes k stochastic completions whose downstream
metrics are averaged within the fold.  All randomness is derived from one
master seed through named substreams, so cells are independent jobs.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import baselines
from .coding import FuzzyDataset, encode_dataset, expand_mask, fuzzify_dataset, harden
from .errors import ConfigError, SchemaError
from .gain import GainConfig, build_gain, generator_forward, sample_seeds
from .gain import train as gain_train
from .logreg import fit_logreg_ridge, predict_logreg
from .metrics import accuracy, auroc
from .rng import substream
from .schema import FeatureSchema

IMPUTATION_METHODS = ("none", "avg", "svd", "ae", "gain")
SANITY_METHODS = ("complete", "random", "most-popular")
METRICS = ("accuracy", "auroc")


@dataclass(frozen=True)
class MaskingPlan:
    """Feature-level MCAR masking: each observed feature cell of a record is
    masked independently with the given probability."""

    proportion: float
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.proportion <= 1.0:
            raise ConfigError(f"masking proportion {self.proportion} outside [0, 1]")


@dataclass
class MaskGroundTruth:
    """Audit record of a masking pass: which cells were newly hidden."""

    masked_cells: np.ndarray  # (n, p) bool
    original_mu: np.ndarray


def mask_dataset(dataset: FuzzyDataset, plan: MaskingPlan):
    """Apply a masking plan to the observed cells of a coded dataset.

    The Bernoulli draw covers every cell (so it is independent of the data
    values) but only observed cells can become missing.
    """
    rng = np.random.default_rng(plan.seed)
    draw = rng.random(dataset.mu.shape) < plan.proportion
    newly = draw & (dataset.mu == 1.0)
    mu = dataset.mu * (1.0 - newly)
    mbar = expand_mask(mu, dataset.schema)
    masked = FuzzyDataset(dataset.xbar * mbar, mu, mbar, dataset.schema)
    return masked, MaskGroundTruth(masked_cells=newly, original_mu=dataset.mu.copy())


def kfold_split(n: int, k: int = 5, seed: int = 0) -> list[np.ndarray]:
    """Disjoint index folds covering range(n), sizes differing by at most 1."""
    if n < k:
        raise ConfigError(f"cannot split {n} rows into {k} folds")
    perm = np.random.default_rng(seed).permutation(n)
    return [np.asarray(f) for f in np.array_split(perm, k)]


def subset(dataset: FuzzyDataset, ids: np.ndarray) -> FuzzyDataset:
    return FuzzyDataset(
        dataset.xbar[ids].copy(), dataset.mu[ids].copy(), dataset.mbar[ids].copy(), dataset.schema
    )


@dataclass
class ProtocolConfig:
    proportions: tuple = (0.1, 0.2, 0.3, 0.4, 0.5)
    methods: tuple = SANITY_METHODS + IMPUTATION_METHODS
    folds: int = 5
    ridge_lambda: float = 1.0
    k_impute: int = 100
    ranks: tuple = ()  # empty -> 4, 8, 16, 32, plus 64 for coded widths >= 64
    gain: GainConfig = field(default_factory=GainConfig)
    ae_epochs: int = 500
    master_seed: int = 0
    jobs: int = 1

    def __post_init__(self):
        for prop in self.proportions:
            if not 0.0 <= prop <= 1.0:
                raise ConfigError(f"proportion {prop} outside [0, 1]")
        unknown = set(self.methods) - set(IMPUTATION_METHODS) - set(SANITY_METHODS)
        if unknown:
            raise ConfigError(f"unknown methods: {sorted(unknown)}")
        if not self.methods:
            raise ConfigError("at least one method is required")
        if self.k_impute < 1 or self.folds < 2:
            raise ConfigError("k_impute must be >= 1 and folds >= 2")


def default_ranks(total_width: int, n_train: int) -> tuple:
    ranks = [4, 8, 16, 32]
    if total_width >= 64:
        ranks.append(64)
    return tuple(r for r in ranks if r <= min(total_width, n_train))


@dataclass
class ReportRow:
    method: str
    proportion: float
    metric: str
    mean: float
    sd: float
    fold_values: list[float]


@dataclass
class CellError:
    method: str
    proportion: float
    fold: int
    message: str


@dataclass
class EvalReport:
    rows: list[ReportRow]
    errors: list[CellError]
    metadata: dict

    def row(self, method: str, proportion: float, metric: str) -> ReportRow:
        for r in self.rows:
            if r.method == method and r.proportion == proportion and r.metric == metric:
                return r
        raise KeyError((method, proportion, metric))


def _binarize(scores: np.ndarray) -> np.ndarray:
    return (np.asarray(scores) >= 0.5).astype(float)


def _downstream(x_train, y_train, x_test, y_test, ridge):
    w, b = fit_logreg_ridge(x_train, y_train, ridge=ridge)
    scores = predict_logreg(x_test, w, b)
    return {"accuracy": accuracy(scores, y_test), "auroc": auroc(scores, y_test)}


def _pct(proportion: float) -> int:
    return int(round(100 * proportion))


def _select_rank(fit_one, score_split, ranks, train_hard, y_train, cfg, pct, fold):
    """Pick the rank whose imputations score the best AUROC on an inner
    validation split of the training fold (never the test fold)."""
    if len(ranks) == 1:
        return ranks[0]
    rng = substream(cfg.master_seed, "rank-val", pct, fold)
    n = train_hard.n
    perm = rng.permutation(n)
    n_val = max(1, n // 5)
    val_ids, fit_ids = perm[:n_val], perm[n_val:]
    inner_train = subset(train_hard, fit_ids)
    inner_val = subset(train_hard, val_ids)
    best_rank, best_auc = None, -np.inf
    for rank in ranks:
        try:
            model = fit_one(inner_train, rank)
            x_fit = score_split(model, inner_train, is_train=True)
            x_val = score_split(model, inner_val, is_train=False)
            w, b = fit_logreg_ridge(x_fit, y_train[fit_ids], ridge=cfg.ridge_lambda)
            auc = auroc(predict_logreg(x_val, w, b), y_train[val_ids])
        except ValueError:
            continue  # inner split may be single-class on tiny folds
        if auc > best_auc:
            best_rank, best_auc = rank, auc
    return best_rank if best_rank is not None else ranks[0]


def _gain_completions(model, hard: FuzzyDataset, fuzzy: FuzzyDataset, k, rng):
    """k hard-coded completions of a split; observed cells keep their codes."""
    out = []
    for _ in range(k):
        rbar = sample_seeds(fuzzy.mbar, model.seed_low, model.seed_high, rng)
        gbar = generator_forward(model, fuzzy.xbar, fuzzy.mbar, rbar)
        z = harden(gbar, fuzzy.schema)
        out.append(hard.mbar * hard.xbar + (1.0 - hard.mbar) * z)
    return out


def evaluate_cell(records, labels, schema: FeatureSchema, method: str, proportion: float,
                  fold: int, cfg: ProtocolConfig) -> dict:
    """Metrics of one (method, proportion, fold) cell of the protocol."""
    y = np.asarray(labels, dtype=float)
    folds = kfold_split(len(records), cfg.folds, seed=_fold_seed(cfg))
    test_ids = folds[fold]
    train_ids = np.concatenate([folds[i] for i in range(cfg.folds) if i != fold])
    y_train, y_test = y[train_ids], y[test_ids]

    if method in SANITY_METHODS:
        if method == "most-popular":
            scores = np.full(test_ids.shape[0], float(y_train.mean()))
        elif method == "random":
            scores = substream(cfg.master_seed, "random-pred", fold).uniform(size=test_ids.shape[0])
        else:  # complete
            hard = encode_dataset(records, schema, fuzzy=False)
            return _downstream(
                hard.xbar[train_ids], y_train, hard.xbar[test_ids], y_test, cfg.ridge_lambda
            )
        return {"accuracy": accuracy(scores, y_test), "auroc": auroc(scores, y_test)}

    pct = _pct(proportion)
    hard = encode_dataset(records, schema, fuzzy=False)
    mask_seed = int(substream(cfg.master_seed, "mask", pct, fold).integers(2**63))
    masked, _ = mask_dataset(hard, MaskingPlan(proportion, mask_seed))
    train_hard = subset(masked, train_ids)
    test_hard = subset(masked, test_ids)

    if method == "none":
        x_train, x_test = baselines.no_impute(train_hard), baselines.no_impute(test_hard)
    elif method == "avg":
        x_train = baselines.avg_impute(train_hard, train_hard)
        x_test = baselines.avg_impute(train_hard, test_hard)
    elif method == "svd":
        ranks = cfg.ranks or default_ranks(schema.total_width, train_hard.n)

        def fit_one(ds, rank):
            return baselines.svd_fit(ds, rank)

        def score_split(model, ds, is_train):
            return baselines.svd_impute_train(model, ds) if is_train else baselines.svd_impute_test(model, ds)

        rank = _select_rank(fit_one, score_split, ranks, train_hard, y_train, cfg, pct, fold)
        imp = baselines.svd_fit(train_hard, rank)
        x_train = baselines.svd_impute_train(imp, train_hard)
        x_test = baselines.svd_impute_test(imp, test_hard)
    elif method == "ae":
        ranks = cfg.ranks or default_ranks(schema.total_width, train_hard.n)
        ae_seed = int(substream(cfg.master_seed, "ae", pct, fold).integers(2**63))

        def fit_one(ds, rank):
            return baselines.ae_fit(ds, rank, baselines.AeConfig(epochs=cfg.ae_epochs, seed=ae_seed))

        def score_split(model, ds, is_train):
            return baselines.ae_impute(model, ds)

        rank = _select_rank(fit_one, score_split, ranks, train_hard, y_train, cfg, pct, fold)
        imp = fit_one(train_hard, rank)
        x_train = baselines.ae_impute(imp, train_hard)
        x_test = baselines.ae_impute(imp, test_hard)
    elif method == "gain":
        gain_seed = int(substream(cfg.master_seed, "gain", pct, fold).integers(2**63))
        gcfg = replace(cfg.gain, seed=gain_seed)
        train_fuzzy = fuzzify_dataset(train_hard, substream(cfg.master_seed, "fuzzify", pct, fold))
        test_fuzzy = fuzzify_dataset(test_hard, substream(cfg.master_seed, "fuzzify-test", pct, fold))
        model, _ = gain_train(build_gain(schema, gcfg), train_fuzzy, gcfg)
        k = cfg.k_impute
        train_draws = _gain_completions(
            model, train_hard, train_fuzzy, k, substream(cfg.master_seed, "impute-train", pct, fold)
        )
        test_draws = _gain_completions(
            model, test_hard, test_fuzzy, k, substream(cfg.master_seed, "impute-test", pct, fold)
        )
        per_draw = [
            _downstream(xtr, y_train, xte, y_test, cfg.ridge_lambda)
            for xtr, xte in zip(train_draws, test_draws)
        ]
        return {m: float(np.mean([d[m] for d in per_draw])) for m in METRICS}
    else:
        raise ConfigError(f"unknown method {method!r}")

    return _downstream(x_train, y_train, x_test, y_test, cfg.ridge_lambda)


def _fold_seed(cfg: ProtocolConfig) -> int:
    return int(substream(cfg.master_seed, "folds").integers(2**63))


def _cell_worker(args):
    records, labels, schema, method, proportion, fold, cfg = args
    try:
        return method, proportion, fold, evaluate_cell(records, labels, schema, method, proportion, fold, cfg), None
    except Exception as exc:  # noqa: BLE001 - cell errors must not abort the run
        return method, proportion, fold, None, f"{type(exc).__name__}: {exc}"


def run_benchmark(records, labels, schema: FeatureSchema, cfg: ProtocolConfig) -> EvalReport:
    """Run the full protocol; cells that error are recorded, not fatal."""
    y = np.asarray(labels, dtype=float)
    if len(records) != y.shape[0]:
        raise SchemaError("records and labels differ in length")
    if not np.all((y == 0.0) | (y == 1.0)):
        raise SchemaError("labels must be 0/1")

    cells = []
    for method in cfg.methods:
        props = (0.0,) if method in SANITY_METHODS else cfg.proportions
        for proportion in props:
            for fold in range(cfg.folds):
                cells.append((records, labels, schema, method, proportion, fold, cfg))

    if cfg.jobs > 1:
        from . import kernels

        kernels.warmup()  # compile in the parent before forking
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            outcomes = list(pool.map(_cell_worker, cells))
    else:
        outcomes = [_cell_worker(c) for c in cells]

    by_cell = {}
    errors = []
    for method, proportion, fold, metrics, err in outcomes:
        if err is not None:
            errors.append(CellError(method, proportion, fold, err))
        else:
            by_cell[(method, proportion, fold)] = metrics

    rows = []
    for method in cfg.methods:
        props = (0.0,) if method in SANITY_METHODS else cfg.proportions
        for proportion in props:
            for metric in METRICS:
                values = [
                    by_cell[(method, proportion, f)][metric]
                    for f in range(cfg.folds)
                    if (method, proportion, f) in by_cell
                ]
                if not values:
                    continue
                arr = np.asarray(values)
                sd = float(arr.std(ddof=1)) if arr.shape[0] > 1 else 0.0
                rows.append(ReportRow(method, proportion, metric, float(arr.mean()), sd, values))

    metadata = {
        "schema_hash": schema.hash,
        "master_seed": cfg.master_seed,
        "folds": cfg.folds,
        "ridge_lambda": cfg.ridge_lambda,
        "k_impute": cfg.k_impute,
        "proportions": list(cfg.proportions),
        "methods": list(cfg.methods),
        "gain_epochs": cfg.gain.epochs,
        "gain_batch_size": cfg.gain.batch_size,
        "gain_hint_rate": cfg.gain.hint_rate,
        "gain_sim_weight": cfg.gain.sim_weight,
        "prefill": "column-means",
    }
    return EvalReport(rows=rows, errors=errors, metadata=metadata)


def fit_fingerprint(records, labels, schema: FeatureSchema, method: str, proportion: float,
                    fold: int, cfg: ProtocolConfig) -> list[np.ndarray]:
    """Every array whose values are determined during the fitting stage of a
    cell: imputer state plus downstream training-side classifier weights.

    Used by the leakage audit: these must be bit-identical under any change
    to the test-fold rows.
    """
    y = np.asarray(labels, dtype=float)
    folds = kfold_split(len(records), cfg.folds, seed=_fold_seed(cfg))
    test_ids = folds[fold]
    train_ids = np.concatenate([folds[i] for i in range(cfg.folds) if i != fold])
    y_train = y[train_ids]

    hard = encode_dataset(records, schema, fuzzy=False)
    if method == "complete":
        w, b = fit_logreg_ridge(hard.xbar[train_ids], y_train, ridge=cfg.ridge_lambda)
        return [w, np.array([b])]
    if method == "most-popular":
        return [np.array([y_train.mean()])]
    if method == "random":
        return [np.array([0.0])]

    pct = _pct(proportion)
    mask_seed = int(substream(cfg.master_seed, "mask", pct, fold).integers(2**63))
    masked, _ = mask_dataset(hard, MaskingPlan(proportion, mask_seed))
    train_hard = subset(masked, train_ids)

    def logreg_arrays(x_train):
        w, b = fit_logreg_ridge(x_train, y_train, ridge=cfg.ridge_lambda)
        return [w, np.array([b])]

    if method == "none":
        return [baselines.no_impute(train_hard)] + logreg_arrays(baselines.no_impute(train_hard))
    if method == "avg":
        means = baselines.column_means(train_hard)
        return [means] + logreg_arrays(baselines.avg_impute(train_hard, train_hard))
    if method == "svd":
        ranks = cfg.ranks or default_ranks(schema.total_width, train_hard.n)
        rank = _select_rank(
            lambda ds, r: baselines.svd_fit(ds, r),
            lambda m, ds, is_train: baselines.svd_impute_train(m, ds) if is_train else baselines.svd_impute_test(m, ds),
            ranks, train_hard, y_train, cfg, pct, fold,
        )
        imp = baselines.svd_fit(train_hard, rank)
        return [np.array([rank]), imp.row_basis, imp.projector, imp.means] + logreg_arrays(
            baselines.svd_impute_train(imp, train_hard)
        )
    if method == "ae":
        ranks = cfg.ranks or default_ranks(schema.total_width, train_hard.n)
        ae_seed = int(substream(cfg.master_seed, "ae", pct, fold).integers(2**63))

        def fit_one(ds, rank):
            return baselines.ae_fit(ds, rank, baselines.AeConfig(epochs=cfg.ae_epochs, seed=ae_seed))

        rank = _select_rank(
            fit_one, lambda m, ds, is_train: baselines.ae_impute(m, ds),
            ranks, train_hard, y_train, cfg, pct, fold,
        )
        imp = fit_one(train_hard, rank)
        return [np.array([rank]), imp.net.params, imp.means] + logreg_arrays(
            baselines.ae_impute(imp, train_hard)
        )
    if method == "gain":
        gain_seed = int(substream(cfg.master_seed, "gain", pct, fold).integers(2**63))
        gcfg = replace(cfg.gain, seed=gain_seed)
        train_fuzzy = fuzzify_dataset(train_hard, substream(cfg.master_seed, "fuzzify", pct, fold))
        model, _ = gain_train(build_gain(schema, gcfg), train_fuzzy, gcfg)
        draws = _gain_completions(
            model, train_hard, train_fuzzy, 1, substream(cfg.master_seed, "impute-train", pct, fold)
        )
        return [model.generator.params, model.discriminator.params] + logreg_arrays(draws[0])
    raise ConfigError(f"unknown method {method!r}")


def leakage_audit(records, labels, schema: FeatureSchema, method: str, cfg: ProtocolConfig,
                  proportion: float = 0.3, fold: int = 0) -> bool:
    """Perturb the test-fold rows and assert the fitted state is bit-identical."""
    baseline_fp = fit_fingerprint(records, labels, schema, method, proportion, fold, cfg)
    folds = kfold_split(len(records), cfg.folds, seed=_fold_seed(cfg))
    test_ids = folds[fold]
    perturbed = list(records)
    for pos, row in enumerate(test_ids):
        perturbed[row] = records[test_ids[(pos + 1) % test_ids.shape[0]]]
    perturbed_fp = fit_fingerprint(perturbed, labels, schema, method, proportion, fold, cfg)
    return len(baseline_fp) == len(perturbed_fp) and all(
        np.array_equal(a, b) for a, b in zip(baseline_fp, perturbed_fp)
    )
