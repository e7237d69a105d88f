"""Classification metrics: thresholded accuracy and rank-based AUROC."""

from __future__ import annotations

import numpy as np


def accuracy(scores, labels) -> float:
    """Mean agreement of I(score >= 0.5) with the 0/1 labels."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels, dtype=float)
    if scores.shape != labels.shape:
        raise ValueError("scores and labels must have equal length")
    return float(((scores >= 0.5).astype(float) == labels).mean())


def auroc(scores, labels) -> float:
    """Area under the ROC curve as the Mann-Whitney rank statistic.

    Equals (concordant pairs + 0.5 * ties) / (n_pos * n_neg); ties in the
    scores receive averaged ranks.  Raises if only one class is present.
    """
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels, dtype=float)
    if scores.shape != labels.shape:
        raise ValueError("scores and labels must have equal length")
    n_pos = int((labels == 1.0).sum())
    n_neg = int((labels == 0.0).sum())
    if n_pos + n_neg != labels.shape[0]:
        raise ValueError("labels must be 0/1")
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUROC undefined: both classes must be present")

    order = np.argsort(scores, kind="mergesort")
    sorted_scores = scores[order]
    ranks_sorted = np.arange(1, scores.shape[0] + 1, dtype=float)
    i = 0
    n = scores.shape[0]
    while i < n:
        j = i
        while j + 1 < n and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        if j > i:
            ranks_sorted[i : j + 1] = 0.5 * (i + 1 + j + 1)
        i = j + 1
    ranks = np.empty(n)
    ranks[order] = ranks_sorted
    u = ranks[labels == 1.0].sum() - 0.5 * n_pos * (n_pos + 1)
    return float(u / (n_pos * n_neg))
