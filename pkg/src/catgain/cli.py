"""Command-line interface.

Commands: ``inspect-schema``, ``train``, ``impute``, ``losses``,
``benchmark``.  Every run writes a ``manifest.cfg`` with its fully resolved
configuration; passing a manifest back via ``--config`` replays the run
bit-identically.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import dataio
from .coding import encode_dataset, fuzzify_dataset
from .config import RunConfig, load_config, write_manifest
from .errors import CatgainError, DivergenceError
from .gain import GainConfig, build_gain, impute, load_gain, save_gain, train
from .harness import MaskingPlan, ProtocolConfig, mask_dataset, run_benchmark
from .rng import substream
from .schema import read_schema


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="key = value config file; flags override it")
    parser.add_argument("--schema", help="schema file (name,kind,cardinality per line)")
    parser.add_argument("--data", help="data CSV")
    parser.add_argument("--outdir", help="output directory")
    parser.add_argument("--seed", help="master seed")


def _add_training(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--epochs", help="training epochs")
    parser.add_argument("--batch-size", dest="batch_size", help="minibatch size")
    parser.add_argument("--hint-rate", dest="hint_rate", help="fraction of hint blocks neutralized")
    parser.add_argument("--sim-weight", dest="sim_weight", help="similarity loss weight")
    parser.add_argument("--learning-rate", dest="learning_rate", help="optimizer learning rate")
    parser.add_argument("--hard-binary", dest="fuzzy", action="store_const", const="false",
                        help="train on plain one-/multi-hot codes (ablation)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="catgain",
        description="Adversarial imputation of categorical data with fuzzy binary coding.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("inspect-schema", help="print a schema summary")
    _add_common(p)

    p = sub.add_parser("train", help="train an imputation model")
    _add_common(p)
    _add_training(p)

    p = sub.add_parser("impute", help="write k completed datasets plus agreement statistics")
    _add_common(p)
    _add_training(p)
    p.add_argument("--model", help="saved model file (skips training)")
    p.add_argument("--k", help="number of imputation draws")

    p = sub.add_parser("losses", help="export fuzzy vs hard-binary loss curves per proportion")
    _add_common(p)
    _add_training(p)
    p.add_argument("--proportions", help="comma-separated masking proportions")

    p = sub.add_parser("benchmark", help="run the masking/cross-validation benchmark")
    _add_common(p)
    _add_training(p)
    p.add_argument("--label-column", dest="label_column", help="label column in the data CSV")
    p.add_argument("--methods", help="comma-separated methods")
    p.add_argument("--proportions", help="comma-separated masking proportions")
    p.add_argument("--k", help="multiple-imputation draws per cell")
    p.add_argument("--folds", help="cross-validation folds")
    p.add_argument("--ridge-lambda", dest="ridge_lambda", help="ridge strength")
    p.add_argument("--jobs", help="max concurrent cells (0 = all cores)")
    return parser


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    overrides = {k: v for k, v in vars(args).items() if k != "config" and v is not None}
    return load_config(args.config, overrides)


def _gain_config(cfg: RunConfig) -> GainConfig:
    return GainConfig(
        epochs=cfg.epochs,
        batch_size=cfg.batch_size,
        hint_rate=cfg.hint_rate,
        sim_weight=cfg.sim_weight,
        learning_rate=cfg.learning_rate,
        seed_low=cfg.seed_low,
        seed_high=cfg.seed_high,
        refuzzify_each_epoch=cfg.refuzzify_each_epoch,
        seed=cfg.seed,
    )


def _load_dataset(cfg: RunConfig, need_label: bool = False):
    if not cfg.schema or not cfg.data:
        raise CatgainError("--schema and --data are required")
    schema = read_schema(cfg.schema)
    label_column = cfg.label_column or None
    if need_label and label_column is None:
        raise CatgainError("--label-column is required")
    records, label_strings = dataio.read_csv_dataset(cfg.data, schema, label_column)
    return schema, records, label_strings


def _outdir(cfg: RunConfig) -> Path:
    out = Path(cfg.outdir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_inspect_schema(cfg: RunConfig) -> int:
    if not cfg.schema:
        raise CatgainError("--schema is required")
    schema = read_schema(cfg.schema)
    print(f"features: {schema.p}   coded width: {schema.total_width}   hash: {schema.hash}")
    for j, spec in enumerate(schema.features):
        block = schema.block(j)
        print(f"  {spec.name:24s} {spec.kind:10s} q={spec.cardinality:<4d} columns [{block.start}, {block.stop})")
    return 0


def cmd_train(cfg: RunConfig) -> int:
    schema, records, _ = _load_dataset(cfg)
    gcfg = _gain_config(cfg)
    rng = substream(cfg.seed, "fuzzify") if cfg.fuzzy else None
    dataset = encode_dataset(records, schema, rng, fuzzy=cfg.fuzzy)
    model, trace = train(build_gain(schema, gcfg), dataset, gcfg)
    out = _outdir(cfg)
    save_gain(out / "model.bin", model)
    dataio.write_trace_csv(out / "trace.csv", trace)
    write_manifest(out / "manifest.cfg", cfg)
    print(f"trained {trace.epochs} epochs -> {out / 'model.bin'}")
    return 0


def cmd_impute(cfg: RunConfig) -> int:
    schema, records, label_strings = _load_dataset(cfg)
    dataset = encode_dataset(records, schema, substream(cfg.seed, "fuzzify"), fuzzy=True)
    if cfg.model:
        model = load_gain(cfg.model, schema)
    else:
        gcfg = _gain_config(cfg)
        model, _ = train(build_gain(schema, gcfg), dataset, gcfg)
    result = impute(model, dataset, cfg.k, substream(cfg.seed, "impute"))
    out = _outdir(cfg)
    paths = dataio.write_completions(out, result, label_strings, cfg.label_column or "label")
    write_manifest(out / "manifest.cfg", cfg)
    print(f"wrote {len(paths) - 1} completions + agreement -> {out}")
    return 0


def cmd_losses(cfg: RunConfig) -> int:
    schema, records, _ = _load_dataset(cfg)
    out = _outdir(cfg)
    hard_all = encode_dataset(records, schema, fuzzy=False)
    for proportion in cfg.proportions:
        pct = int(round(100 * proportion))
        mask_seed = int(substream(cfg.seed, "mask", pct).integers(2**63))
        masked, _ = mask_dataset(hard_all, MaskingPlan(proportion, mask_seed))
        for mode in ("fuzzy", "hard"):
            if mode == "fuzzy":
                ds = fuzzify_dataset(masked, substream(cfg.seed, "fuzzify", pct))
            else:
                ds = masked
            gcfg = _gain_config(cfg)
            try:
                _, trace = train(build_gain(schema, gcfg), ds, gcfg)
            except DivergenceError as exc:
                trace = exc.trace  # the written trace ends at the non-finite row
            dataio.write_trace_csv(out / f"losses_{mode}_p{pct:02d}.csv", trace)
    write_manifest(out / "manifest.cfg", cfg)
    print(f"wrote loss traces for proportions {list(cfg.proportions)} -> {out}")
    return 0


def cmd_benchmark(cfg: RunConfig) -> int:
    schema, records, label_strings = _load_dataset(cfg, need_label=True)
    labels, label_names = dataio.binarize_labels(label_strings)
    pcfg = ProtocolConfig(
        proportions=cfg.proportions,
        methods=cfg.methods,
        folds=cfg.folds,
        ridge_lambda=cfg.ridge_lambda,
        k_impute=cfg.k,
        ranks=cfg.ranks,
        gain=_gain_config(cfg),
        ae_epochs=cfg.ae_epochs,
        master_seed=cfg.seed,
        jobs=cfg.effective_jobs,
    )
    report = run_benchmark(records, labels, schema, pcfg)
    report.metadata["label_positive"] = label_names[1]
    out = _outdir(cfg)
    dataio.report_to_csv(out / "report.csv", report)
    dataio.report_to_json(out / "report.json", report)
    write_manifest(out / "manifest.cfg", cfg)
    for err in report.errors:
        print(f"cell error: {err.method} p={err.proportion} fold={err.fold}: {err.message}",
              file=sys.stderr)
    print(f"wrote report ({len(report.rows)} rows, {len(report.errors)} cell errors) -> {out}")
    return 1 if report.errors else 0


_COMMANDS = {
    "inspect-schema": cmd_inspect_schema,
    "train": cmd_train,
    "impute": cmd_impute,
    "losses": cmd_losses,
    "benchmark": cmd_benchmark,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _config_from_args(args)
        return _COMMANDS[args.command](cfg)
    except CatgainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
