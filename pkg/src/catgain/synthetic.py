"""Seeded synthetic categorical corpora with controllable feature dependence.

A binary latent factor per record drives both the label and every feature,
so the features are mutually dependent and imputation from context is
learnable.  Multilabel features always activate at least one category (an
empty active set would be indistinguishable from a missing cell in CSV form).
"""

from __future__ import annotations

import numpy as np

from .schema import MULTICLASS, MULTILABEL, FeatureSchema, FeatureSpec


def make_synthetic_corpus(n: int = 1000, n_features: int = 15, seed: int = 0,
                          signal: float = 0.75, label_noise: float = 0.1):
    """Build (records, labels, schema) for a dependent categorical corpus.

    Four out of every five features are multiclass (cardinalities cycling
    2..6), the rest multilabel.  Given the latent factor z of a record, each
    multiclass feature puts probability ``signal`` on a z-specific category;
    multilabel categories flip their activation odds with z.  The label is z
    with ``label_noise`` flips.
    """
    rng = np.random.default_rng(seed)
    specs = []
    for j in range(n_features):
        if j % 5 == 4:
            specs.append(FeatureSpec(f"f{j:02d}", MULTILABEL, 2 + j % 4))
        else:
            specs.append(FeatureSpec(f"f{j:02d}", MULTICLASS, 2 + j % 5))
    schema = FeatureSchema(specs)

    z = rng.integers(0, 2, size=n)
    records = []
    for i in range(int(n)):
        values = []
        for j, spec in enumerate(schema.features):
            q = spec.cardinality
            if spec.kind == MULTICLASS:
                preferred = (j + z[i]) % q
                if rng.random() < signal:
                    values.append(int(preferred))
                else:
                    values.append(int(rng.integers(0, q)))
            else:
                probs = np.where((np.arange(q) + z[i]) % 2 == 0, 0.8, 0.2)
                active = set(np.flatnonzero(rng.random(q) < probs).tolist())
                if not active:
                    active = {int((j + z[i]) % q)}
                values.append(active)
        records.append(tuple(values))
    labels = np.where(rng.random(n) < label_noise, 1 - z, z).astype(float)
    return records, labels, schema
