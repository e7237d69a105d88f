"""File formats: data CSV, reports, loss traces, imputation outputs, manifests.

Data CSV conventions: one row per record, header carries the feature names
(plus an optional label column).  Multiclass cells hold the category index,
multilabel cells a ``|``-separated index list, numeric cells a decimal in
[0, 1]; an empty cell means missing.  Note that an empty multilabel set
serializes to an empty cell and therefore reads back as missing.

All writers are deterministic (sorted keys, full-precision floats, LF line
endings) so replaying a run reproduces its outputs byte for byte.
"""

from __future__ import annotations

import csv
import json
import math

import numpy as np

from .coding import MISSING
from .errors import DataParseError, SchemaError
from .gain import ImputationResult, TrainTrace
from .harness import EvalReport
from .schema import MULTICLASS, MULTILABEL, FeatureSchema, FeatureSpec


def _format_float(x: float) -> str:
    return "nan" if math.isnan(x) else repr(float(x))


def format_cell(value, spec: FeatureSpec) -> str:
    if value is MISSING:
        return ""
    if spec.kind == MULTICLASS:
        return str(int(value))
    if spec.kind == MULTILABEL:
        return "|".join(str(int(v)) for v in sorted(value))
    return _format_float(value)


def parse_cell(text: str, spec: FeatureSpec, row: int):
    text = text.strip()
    if text == "":
        return MISSING
    try:
        if spec.kind == MULTICLASS:
            value = int(text)
            if not 0 <= value < spec.cardinality:
                raise ValueError(f"category {value} out of range [0, {spec.cardinality})")
            return value
        if spec.kind == MULTILABEL:
            values = {int(part) for part in text.split("|")}
            bad = [v for v in values if not 0 <= v < spec.cardinality]
            if bad:
                raise ValueError(f"categories {sorted(bad)} out of range [0, {spec.cardinality})")
            return values
        value = float(text)
        if not 0.0 <= value <= 1.0:
            raise ValueError(f"numeric value {value} outside [0, 1]")
        return value
    except ValueError as exc:
        raise DataParseError(str(exc), row=row, column=spec.name) from None


def read_csv_dataset(path, schema: FeatureSchema, label_column: str | None = None):
    """Parse a data CSV against a schema; returns (records, label_strings).

    ``label_strings`` is None unless ``label_column`` is given.  Cell errors
    carry their row and column.
    """
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataParseError("empty file") from None
        header = [h.strip() for h in header]
        positions = {}
        for spec in schema.features:
            if spec.name not in header:
                raise SchemaError(f"{path}: data file is missing column {spec.name!r}")
            positions[spec.name] = header.index(spec.name)
        label_pos = None
        if label_column is not None:
            if label_column not in header:
                raise SchemaError(f"{path}: data file is missing label column {label_column!r}")
            label_pos = header.index(label_column)

        records, labels = [], []
        for rownum, cells in enumerate(reader, start=1):
            if len(cells) != len(header):
                raise DataParseError(
                    f"expected {len(header)} cells, found {len(cells)}", row=rownum
                )
            record = tuple(
                parse_cell(cells[positions[spec.name]], spec, rownum) for spec in schema.features
            )
            records.append(record)
            if label_pos is not None:
                label = cells[label_pos].strip()
                if label == "":
                    raise DataParseError("empty label", row=rownum, column=label_column)
                labels.append(label)
    return records, (labels if label_column is not None else None)


def write_csv_dataset(path, schema: FeatureSchema, records, labels=None,
                      label_column: str = "label") -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        header = [f.name for f in schema.features]
        if labels is not None:
            header.append(label_column)
        writer.writerow(header)
        for i, record in enumerate(records):
            row = [format_cell(v, spec) for v, spec in zip(record, schema.features)]
            if labels is not None:
                row.append(str(labels[i]))
            writer.writerow(row)


def binarize_labels(label_strings):
    """Map the two label values to 0/1 (sorted order); returns (array, names)."""
    names = sorted(set(label_strings))
    if len(names) != 2:
        raise SchemaError(f"need exactly two label values, found {names}")
    labels = np.array([names.index(s) for s in label_strings], dtype=float)
    return labels, tuple(names)


def write_trace_csv(path, trace: TrainTrace) -> None:
    """Loss curve export; a non-finite row terminates the trace."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("epoch,loss_d,loss_g,loss_sim\n")
        for epoch, ld, lg, ls in trace.rows():
            fh.write(f"{epoch},{_format_float(ld)},{_format_float(lg)},{_format_float(ls)}\n")
            if not (math.isfinite(ld) and math.isfinite(lg) and math.isfinite(ls)):
                break


def write_completions(outdir, result: ImputationResult, labels=None,
                      label_column: str = "label") -> list:
    """One CSV per imputation draw plus one per-cell agreement CSV."""
    outdir = _ensure_dir(outdir)
    paths = []
    width = max(3, len(str(len(result.completions))))
    for d, completion in enumerate(result.completions, start=1):
        path = outdir / f"completion_{d:0{width}d}.csv"
        write_csv_dataset(path, result.schema, completion, labels, label_column)
        paths.append(path)
    agreement_path = outdir / "agreement.csv"
    with open(agreement_path, "w", encoding="utf-8", newline="") as fh:
        fh.write("row,feature,modal_value,agreement\n")
        for cell in result.agreement:
            spec = result.schema.features[result.schema.index(cell.feature)]
            value = format_cell(cell.value, spec)
            fh.write(f"{cell.row},{cell.feature},{value},{_format_float(cell.frequency)}\n")
    paths.append(agreement_path)
    return paths


def report_to_csv(path, report: EvalReport) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("proportion,method,metric,mean,sd,fold_values\n")
        for row in report.rows:
            folds = "|".join(_format_float(v) for v in row.fold_values)
            fh.write(
                f"{_format_float(row.proportion)},{row.method},{row.metric},"
                f"{_format_float(row.mean)},{_format_float(row.sd)},{folds}\n"
            )


def report_to_json(path, report: EvalReport) -> None:
    payload = {
        "metadata": report.metadata,
        "rows": [
            {
                "proportion": row.proportion,
                "method": row.method,
                "metric": row.metric,
                "mean": row.mean,
                "sd": row.sd,
                "fold_values": row.fold_values,
            }
            for row in report.rows
        ],
        "errors": [
            {"method": e.method, "proportion": e.proportion, "fold": e.fold, "message": e.message}
            for e in report.errors
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _ensure_dir(path):
    from pathlib import Path

    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    return path


# --- raw UCI breast-cancer conversion ------------------------------------

UCI_BREAST_COLUMNS = (
    "class", "age", "menopause", "tumor-size", "inv-nodes",
    "node-caps", "deg-malig", "breast", "breast-quad", "irradiat",
)


def load_uci_breast_cancer(path, drop_incomplete: bool = True):
    """Convert the raw UCI breast-cancer file into (records, labels, schema).

    The raw format is 10 comma-separated fields per line (class first) with
    ``?`` marking missing cells.  Each feature becomes a multiclass feature
    whose categories are its sorted observed values, so cardinalities follow
    the data.  ``drop_incomplete`` removes the few rows containing ``?``.
    """
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            cells = [c.strip() for c in line.split(",")]
            if len(cells) != len(UCI_BREAST_COLUMNS):
                raise DataParseError(
                    f"expected {len(UCI_BREAST_COLUMNS)} fields, found {len(cells)}", row=lineno
                )
            rows.append(cells)
    if not rows:
        raise DataParseError("no data rows found")
    if drop_incomplete:
        rows = [r for r in rows if "?" not in r]

    feature_names = UCI_BREAST_COLUMNS[1:]
    vocab = {}
    for j, name in enumerate(feature_names, start=1):
        vocab[name] = sorted({r[j] for r in rows if r[j] != "?"})
    schema = FeatureSchema(
        [FeatureSpec(name, MULTICLASS, len(vocab[name])) for name in feature_names]
    )
    records = []
    labels = []
    for r in rows:
        labels.append(r[0])
        values = []
        for j, name in enumerate(feature_names, start=1):
            values.append(MISSING if r[j] == "?" else vocab[name].index(r[j]))
        records.append(tuple(values))
    return records, labels, schema
