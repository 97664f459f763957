"""Flat key-value experiment configuration.

File format: one ``key = value`` per line, ``#`` starts a comment.  Keys:
n, pattern, gaps, T, trials, seed, c, chat, i_max, n_grid, nodes, out,
tol_scale.  ``pattern`` lists factor sizes L ("inf,5"); ``gaps`` lists
L - n directly ("inf,3") and is what the n-sweeping commands use.
"""
from __future__ import annotations

import hashlib
from dataclasses import asdict, dataclass, fields, replace
from fractions import Fraction
from typing import Optional

from .chain import EXACT_MAX_T
from .ensemble import (
    INF,
    EnsembleSequence,
    FrequencyMeasure,
    format_pattern,
    measure_from_sequence,
    parse_pattern,
)


class ConfigError(ValueError):
    """Invalid configuration; reported before any computation starts."""


@dataclass(frozen=True)
class ExperimentConfig:
    n: int = 1
    pattern: str = "inf"
    gaps: Optional[str] = None
    T: int = 1000
    trials: int = 8
    seed: int = 0
    c: Optional[float] = None
    chat: float = 1.0
    i_max: int = 5
    n_grid: tuple = (100, 1000, 10000)
    nodes: int = 512
    out: Optional[str] = None
    tol_scale: float = 1.0

    def sequence(self) -> EnsembleSequence:
        return EnsembleSequence(self.n, self.pattern)

    def measure(self, n: int | None = None) -> FrequencyMeasure:
        """Frequency measure from ``gaps`` if set, else from ``pattern`` at n."""
        if self.gaps is not None:
            gaps = parse_pattern(self.gaps)
            P = len(gaps)
            atoms = {}
            for g in gaps:
                if g != INF:
                    atoms[g] = atoms.get(g, 0) + 1
            return FrequencyMeasure(
                {k: Fraction(v, P) for k, v in atoms.items()},
                Fraction(sum(1 for g in gaps if g == INF), P),
            )
        return measure_from_sequence(EnsembleSequence(self.n if n is None else n, self.pattern))

    def prefix(self) -> list:
        """``pattern`` repeated cyclically to length T."""
        return self.sequence().prefix(self.T)


_TYPES = {f.name: f.type for f in fields(ExperimentConfig)}


def _parse_value(key, raw):
    raw = raw.strip()
    try:
        if key in ("n", "T", "trials", "seed", "i_max", "nodes"):
            return int(raw)
        if key in ("chat", "tol_scale"):
            return float(raw)
        if key == "c":
            return None if raw.lower() == "none" else float(raw)
        if key == "n_grid":
            return tuple(int(v) for v in raw.split(",") if v.strip())
        if key in ("pattern", "gaps"):
            return format_pattern(parse_pattern(raw))
        if key == "out":
            return raw or None
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {raw!r} ({exc})") from None
    raise ConfigError(f"unknown config key {key!r}")


def parse_config(text: str, base: ExperimentConfig | None = None) -> ExperimentConfig:
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, raw = line.split("=", 1)
        values[key.strip()] = _parse_value(key.strip(), raw)
    return with_overrides(base or ExperimentConfig(), values)


def with_overrides(cfg: ExperimentConfig, values: dict) -> ExperimentConfig:
    clean = {}
    for key, v in values.items():
        if key not in _TYPES:
            raise ConfigError(f"unknown config key {key!r}")
        clean[key] = _parse_value(key, v) if isinstance(v, str) else v
    return replace(cfg, **clean)


def _format_value(v):
    if isinstance(v, tuple):
        return ",".join(str(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def serialize_config(cfg: ExperimentConfig) -> str:
    """Canonical text form; ``parse_config(serialize_config(c)) == c``."""
    lines = []
    for key, v in sorted(asdict(cfg).items()):
        if v is None:
            continue
        if isinstance(v, list):
            v = tuple(v)
        lines.append(f"{key} = {_format_value(v)}")
    return "\n".join(lines) + "\n"


def config_hash(cfg: ExperimentConfig) -> str:
    """git blob hash of the canonical serialization."""
    data = serialize_config(cfg).encode()
    return hashlib.sha1(b"blob %d\0" % len(data) + data).hexdigest()


def validate(cfg: ExperimentConfig, command: str) -> None:
    """Check every downstream precondition for ``command``; raise ConfigError."""
    def need(cond, msg):
        if not cond:
            raise ConfigError(msg)

    need(cfg.n >= 1, f"n must be >= 1, got {cfg.n}")
    try:
        if command in ("analytic", "simulate", "moments"):
            if command != "analytic" or cfg.gaps is None:
                cfg.sequence()
            cfg.measure()
        if command == "picketfence":
            need(len(cfg.n_grid) > 0, "n_grid must be non-empty")
            need(all(a < b for a, b in zip(cfg.n_grid, cfg.n_grid[1:])), "n_grid must be ascending")
            need(all(v >= 1 for v in cfg.n_grid), "n_grid entries must be >= 1")
            for n in cfg.n_grid:
                cfg.measure(n)
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from None
    if command in ("simulate", "moments"):
        need(cfg.T >= 1, f"T must be >= 1, got {cfg.T}")
        need(cfg.trials >= 1, f"trials must be >= 1, got {cfg.trials}")
    if command == "moments":
        need(cfg.c is not None and cfg.c > 0, f"c must be > 0, got {cfg.c}")
        need(cfg.T <= EXACT_MAX_T, f"moments needs T <= {EXACT_MAX_T}, got {cfg.T}")
        need(cfg.nodes >= 4, "nodes must be >= 4")
    if command in ("analytic", "picketfence"):
        need(cfg.i_max >= 1, "i_max must be >= 1")
    if command == "verify":
        need(cfg.tol_scale >= 0, "tol_scale must be >= 0")
