"""Adversarial imputation of missing categorical tabular data.

Categorical features are binary coded and then re-coded with fuzzy values in
[0, 1] that retain the category information exactly; a generator network
fills missing feature blocks while a per-feature discriminator tries to tell
generated from observed values.  The package also ships the classical
comparison imputers (column mean, low-rank SVD reconstruction, tanh
auto-encoder) and a leakage-free masking/cross-validation benchmark harness.
"""

from ._accel import NUMBA_ENABLED
from .coding import (
    MISSING,
    FuzzyDataset,
    build_masks,
    decode,
    decode_dataset,
    encode_binary,
    encode_dataset,
    fuzzify_dataset,
    fuzzify_multiclass,
    fuzzify_multilabel,
)
from .gain import (
    GainConfig,
    GainModel,
    ImputationResult,
    TrainTrace,
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
from .harness import (
    EvalReport,
    MaskingPlan,
    ProtocolConfig,
    kfold_split,
    leakage_audit,
    mask_dataset,
    run_benchmark,
)
from .metrics import accuracy, auroc
from .schema import FeatureSchema, FeatureSpec, parse_schema, read_schema, write_schema

__version__ = "0.1.0"

__all__ = [
    "MISSING",
    "NUMBA_ENABLED",
    "FeatureSchema",
    "FeatureSpec",
    "FuzzyDataset",
    "GainConfig",
    "GainModel",
    "ImputationResult",
    "TrainTrace",
    "EvalReport",
    "MaskingPlan",
    "ProtocolConfig",
    "accuracy",
    "auroc",
    "build_gain",
    "build_masks",
    "decode",
    "decode_dataset",
    "discriminator_forward",
    "encode_binary",
    "encode_dataset",
    "fuzzify_dataset",
    "fuzzify_multiclass",
    "fuzzify_multilabel",
    "generator_forward",
    "impute",
    "kfold_split",
    "leakage_audit",
    "load_gain",
    "loss_d",
    "loss_g",
    "loss_sim",
    "mask_dataset",
    "parse_schema",
    "read_schema",
    "run_benchmark",
    "sample_hints",
    "sample_seeds",
    "save_gain",
    "train",
    "write_schema",
    "__version__",
]
