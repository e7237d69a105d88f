"""Comparison imputers: column-mean fill, low-rank SVD reconstruction, a tanh
auto-encoder, and the no-imputation pass-through.

All of them operate on the coded matrix and leave observed slots bit-identical
to the input; missing slots get continuous reconstructions (no decoding).
SVD and the auto-encoder see missing slots pre-filled with the training
column means.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .coding import FuzzyDataset
from .errors import NumericError, SchemaError
from .gain import PROB_EPS
from .net import ACT_SIGMOID, ACT_TANH, Adam, Mlp, make_mlp
from .rng import substream
from .schema import MULTICLASS, FeatureSchema


def column_means(train: FuzzyDataset) -> np.ndarray:
    """Per-column mean over observed slots of the training set.

    Columns with no observed entry fall back to the uninformative prior:
    1/q for multiclass block columns, 0.5 otherwise.
    """
    counts = train.mbar.sum(axis=0)
    sums = (train.xbar * train.mbar).sum(axis=0)
    prior = np.full(train.schema.total_width, 0.5)
    for j, spec in enumerate(train.schema.features):
        if spec.kind == MULTICLASS:
            prior[train.schema.block(j)] = 1.0 / spec.cardinality
    return np.where(counts > 0, sums / np.maximum(counts, 1.0), prior)


def prefill(target: FuzzyDataset, means: np.ndarray) -> np.ndarray:
    """Coded matrix with missing slots replaced by the given column values."""
    return target.mbar * target.xbar + (1.0 - target.mbar) * means


def avg_impute(train: FuzzyDataset, target: FuzzyDataset) -> np.ndarray:
    """Fill each missing slot of ``target`` with the training column mean."""
    if target.schema != train.schema:
        raise SchemaError("train and target schemas differ")
    return prefill(target, column_means(train))


def no_impute(target: FuzzyDataset) -> np.ndarray:
    """Identity on the coded representation; missing blocks stay zero."""
    return target.xbar.copy()


def truncated_svd(matrix: np.ndarray, rank: int):
    """Leading ``rank`` singular triplets of a matrix; non-increasing values."""
    n, q = matrix.shape
    if not 1 <= rank <= min(n, q):
        raise SchemaError(f"rank {rank} outside [1, min(n={n}, Q={q})]")
    try:
        u, s, vt = np.linalg.svd(matrix, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"SVD failed to converge: {exc}") from exc
    return u[:, :rank], s[:rank], vt[:rank]


@dataclass
class SvdImputer:
    """Rank-r factors of the pre-filled training matrix.

    ``row_basis`` is D_r V_r^T (r x Q); ``projector`` its pseudo-inverse times
    itself, i.e. the orthogonal projector onto the retained row space.
    """

    rank: int
    u: np.ndarray
    s: np.ndarray
    vt: np.ndarray
    row_basis: np.ndarray
    projector: np.ndarray
    means: np.ndarray
    n_train: int


def svd_fit(train: FuzzyDataset, rank: int) -> SvdImputer:
    """Decompose the mean-pre-filled training matrix at the given rank."""
    means = column_means(train)
    filled = prefill(train, means)
    u, s, vt = truncated_svd(filled, rank)
    row_basis = s[:, None] * vt
    # pseudo-inverse with singular values below 1e-10 * sigma_max dropped
    projector = np.linalg.pinv(row_basis, rcond=1e-10) @ row_basis
    return SvdImputer(
        rank=rank, u=u, s=s, vt=vt, row_basis=row_basis, projector=projector,
        means=means, n_train=train.n,
    )


def svd_impute_train(imputer: SvdImputer, train: FuzzyDataset) -> np.ndarray:
    """Reconstruct the fitted training matrix as U_r D_r V_r^T; observed slots
    are then restored from the originals."""
    if train.n != imputer.n_train:
        raise SchemaError("svd_impute_train expects the matrix the imputer was fitted on")
    recon = imputer.u @ imputer.row_basis
    return train.mbar * train.xbar + (1.0 - train.mbar) * recon


def svd_impute_test(imputer: SvdImputer, test: FuzzyDataset) -> np.ndarray:
    """Project pre-filled test rows onto the retained row space; observed
    slots are then restored from the originals."""
    recon = prefill(test, imputer.means) @ imputer.projector
    return test.mbar * test.xbar + (1.0 - test.mbar) * recon


@dataclass
class AeConfig:
    epochs: int = 500
    batch_size: int = 64
    learning_rate: float = 1e-3
    seed: int = 0


@dataclass
class AutoencoderImputer:
    net: Mlp  # Q -> tanh hidden of width rank -> sigmoid Q
    rank: int
    means: np.ndarray


def ae_fit(train: FuzzyDataset, rank: int, config: AeConfig | None = None) -> AutoencoderImputer:
    """Train the auto-encoder to reconstruct the mean-pre-filled training
    matrix under per-entry cross-entropy."""
    if rank < 1:
        raise SchemaError("rank must be >= 1")
    config = config or AeConfig()
    q = train.schema.total_width
    means = column_means(train)
    filled = prefill(train, means)
    net = make_mlp([q, rank, q], [ACT_TANH, ACT_SIGMOID], substream(config.seed, "init", "ae"))
    adam = Adam.for_params(net.params, lr=config.learning_rate)
    for epoch in range(config.epochs):
        perm = substream(config.seed, "shuffle", epoch).permutation(train.n)
        for start in range(0, train.n, config.batch_size):
            xb = filled[perm[start : start + config.batch_size]]
            out, cache = net.forward(xb)
            yc = np.clip(out, PROB_EPS, 1.0 - PROB_EPS)
            d_out = (yc - xb) / (yc * (1.0 - yc)) / xb.size
            grads, _ = net.backward(cache, d_out)
            adam.update(net.params, grads)
    return AutoencoderImputer(net=net, rank=rank, means=means)


def ae_impute(imputer: AutoencoderImputer, target: FuzzyDataset) -> np.ndarray:
    """Reconstruction at missing slots, originals at observed slots."""
    recon, _ = imputer.net.forward(prefill(target, imputer.means))
    return target.mbar * target.xbar + (1.0 - target.mbar) * recon
