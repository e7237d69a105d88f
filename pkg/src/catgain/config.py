"""Run configuration: flat key/value files with exhaustive validation.

Config files hold one ``key = value`` pair per line (``#`` comments allowed).
Command-line flags override file values.  Every run writes its resolved
configuration back out as a manifest in the same format, so a manifest can be
replayed directly via ``--config``.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, fields

from .errors import ConfigError
from .harness import IMPUTATION_METHODS, SANITY_METHODS


@dataclass
class RunConfig:
    command: str = ""
    schema: str = ""
    data: str = ""
    label_column: str = ""
    model: str = ""
    outdir: str = "out"
    methods: tuple = SANITY_METHODS + IMPUTATION_METHODS
    proportions: tuple = (0.1, 0.2, 0.3, 0.4, 0.5)
    epochs: int = 500
    batch_size: int = 64
    hint_rate: float = 0.1
    sim_weight: float = 1.0
    learning_rate: float = 1e-3
    seed_low: float = 0.0
    seed_high: float = 1.0
    fuzzy: bool = True
    refuzzify_each_epoch: bool = False
    ranks: tuple = ()
    k: int = 100
    folds: int = 5
    ridge_lambda: float = 1.0
    ae_epochs: int = 500
    seed: int = 0
    jobs: int = 0  # 0 = one worker per available core

    def __post_init__(self):
        if self.epochs < 0 or self.ae_epochs < 0:
            raise ConfigError("epochs must be >= 0")
        if self.batch_size < 1 or self.k < 1 or self.folds < 2:
            raise ConfigError("batch_size and k must be >= 1, folds >= 2")
        if not 0.0 <= self.hint_rate <= 1.0:
            raise ConfigError("hint_rate must lie in [0, 1]")
        if not 0.0 <= self.seed_low <= self.seed_high <= 1.0:
            raise ConfigError("seed bounds must satisfy 0 <= low <= high <= 1")
        if self.sim_weight < 0 or self.learning_rate <= 0 or self.ridge_lambda < 0:
            raise ConfigError("sim_weight/ridge_lambda must be >= 0 and learning_rate > 0")
        for prop in self.proportions:
            if not 0.0 <= prop <= 1.0:
                raise ConfigError(f"proportion {prop} outside [0, 1]")
        if not self.proportions:
            raise ConfigError("at least one proportion is required")
        unknown = set(self.methods) - set(IMPUTATION_METHODS) - set(SANITY_METHODS)
        if unknown:
            raise ConfigError(f"unknown methods: {sorted(unknown)}")
        if not self.methods:
            raise ConfigError("at least one method is required")
        if any(r < 1 for r in self.ranks):
            raise ConfigError("ranks must be positive")
        if self.jobs < 0:
            raise ConfigError("jobs must be >= 0")

    @property
    def effective_jobs(self) -> int:
        return self.jobs if self.jobs > 0 else (os.cpu_count() or 1)


_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _parse_value(key: str, text: str):
    text = text.strip()
    kind = _FIELD_TYPES[key]
    try:
        if kind == "int":
            return int(text)
        if kind == "float":
            return float(text)
        if kind == "bool":
            if text.lower() in ("1", "true", "yes", "on"):
                return True
            if text.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(f"not a boolean: {text!r}")
        if kind == "tuple":
            if not text:
                return ()
            parts = [p.strip() for p in text.split(",") if p.strip()]
            if key in ("proportions",):
                return tuple(float(p) for p in parts)
            if key in ("ranks",):
                return tuple(int(p) for p in parts)
            return tuple(parts)
        return text
    except ValueError as exc:
        raise ConfigError(f"config key {key!r}: {exc}") from None


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ",".join(repr(v) if isinstance(v, float) else str(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def parse_config_text(text: str) -> dict:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"config line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        if key not in _FIELD_TYPES:
            raise ConfigError(f"config line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"config line {lineno}: duplicate key {key!r}")
        values[key] = _parse_value(key, value)
    return values


def load_config(path: str | None, overrides: dict) -> RunConfig:
    """Build a RunConfig from an optional file plus override values."""
    values = {}
    if path:
        with open(path, "r", encoding="utf-8") as fh:
            values = parse_config_text(fh.read())
    for key, value in overrides.items():
        if value is None:
            continue
        if key not in _FIELD_TYPES:
            raise ConfigError(f"unknown config key {key!r}")
        values[key] = _parse_value(key, value) if isinstance(value, str) else value
    return RunConfig(**values)


def manifest_text(cfg: RunConfig) -> str:
    lines = [f"{f.name} = {_format_value(getattr(cfg, f.name))}" for f in fields(RunConfig)]
    return "\n".join(lines) + "\n"


def write_manifest(path, cfg: RunConfig) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(manifest_text(cfg))
