"""Experiment configuration: JSON schema, validation, object builders.

Configs are plain JSON; every field has a default and unknown keys are
rejected with the offending key path, so typos fail loudly before any
computation starts.  configs/default.json in the repository lists every
field explicitly with its default value.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Mapping

from .lattice import (
    Coloring,
    PeriodicColoring,
    RandomColoring,
    WindowColoring,
    cube_sequence,
    periodic_word,
)
from .operators import PrototypeLibrary
from .spectral import EnergyWindow


class ConfigError(ValueError):
    """Invalid configuration; message carries the JSON key path."""


def _require_keys(obj: Mapping, allowed: set[str], path: str) -> None:
    unknown = sorted(set(obj) - allowed)
    if unknown:
        raise ConfigError(f"{path}: unknown keys {unknown}; allowed: {sorted(allowed)}")


def _get(obj: Mapping, key: str, kind, default, path: str):
    if key not in obj:
        return default
    val = obj[key]
    if kind is float and isinstance(val, int):
        val = float(val)
    if not isinstance(val, kind):
        raise ConfigError(f"{path}.{key}: expected {kind.__name__}, got {type(val).__name__}")
    return val


@dataclass
class ExperimentConfig:
    """Validated experiment description with documented defaults."""

    dimension: int = 1
    backend: str = "lattice"
    resolution: int = 8
    prototypes: dict = field(default_factory=lambda: {
        "kind": "constant", "values": {"a": 0.0, "b": 1.0}})
    coloring: dict = field(default_factory=lambda: {
        "kind": "periodic-word", "word": "ab"})
    sequence: dict = field(default_factory=lambda: {
        "kind": "cubes", "sides": [8, 16, 32, 64]})
    window: dict = field(default_factory=lambda: {"lo": 0.0, "hi": 4.5, "p": 2.0})
    M_list: list = field(default_factory=lambda: [1, 2, 3])
    constants: dict = field(default_factory=lambda: {
        "C": 1.0, "c_pd": 1.0, "C1": 0.0, "delta": 0.0})
    seed: int = 1234
    jobs: int = 1
    matrix_cap: int = 20_000
    dense_cap: int = 3000
    ssf: dict = field(default_factory=lambda: {
        "cells": 8, "count": 60, "powers": [1, 2, 3], "young_trials": 20})
    random: dict = field(default_factory=lambda: {
        "weights": {"a": 0.5, "b": 0.5}, "samples": 200, "truncation_radius": 32,
        "lambda_points": 201, "omegas": [40, 41, 42, 43, 44],
        "compare_volumes": [32, 256]})
    output_dir: str = "out"


_TOP_KEYS = {f.name for f in fields(ExperimentConfig)}


def validate_config(raw: Mapping[str, Any]) -> ExperimentConfig:
    """Check types, ranges, and key names; return the validated config."""
    _require_keys(raw, _TOP_KEYS, "config")
    cfg = ExperimentConfig()

    cfg.dimension = _get(raw, "dimension", int, cfg.dimension, "config")
    if cfg.dimension not in (1, 2, 3):
        raise ConfigError(f"config.dimension: supported dimensions are 1, 2, 3; got {cfg.dimension}")
    cfg.backend = _get(raw, "backend", str, cfg.backend, "config")
    if cfg.backend not in ("lattice", "continuum"):
        raise ConfigError(f"config.backend: expected 'lattice' or 'continuum', got {cfg.backend!r}")
    cfg.resolution = _get(raw, "resolution", int, cfg.resolution, "config")
    if cfg.resolution < 2:
        raise ConfigError("config.resolution: must be >= 2")

    cfg.prototypes = dict(_get(raw, "prototypes", dict, cfg.prototypes, "config"))
    _require_keys(cfg.prototypes, {"kind", "values", "path", "alphabet"}, "config.prototypes")
    kind = cfg.prototypes.get("kind", "constant")
    if kind not in ("constant", "file", "zero"):
        raise ConfigError(f"config.prototypes.kind: unknown kind {kind!r}")

    cfg.coloring = dict(_get(raw, "coloring", dict, cfg.coloring, "config"))
    _require_keys(
        cfg.coloring,
        {"kind", "word", "period", "cell", "window", "background", "weights", "seed", "symbol"},
        "config.coloring",
    )
    if cfg.coloring.get("kind") not in ("periodic-word", "periodic", "window", "random", "constant"):
        raise ConfigError(f"config.coloring.kind: unknown kind {cfg.coloring.get('kind')!r}")

    cfg.sequence = dict(_get(raw, "sequence", dict, cfg.sequence, "config"))
    _require_keys(cfg.sequence, {"kind", "sides"}, "config.sequence")
    if cfg.sequence.get("kind", "cubes") != "cubes":
        raise ConfigError("config.sequence.kind: only 'cubes' is supported")
    sides = cfg.sequence.get("sides", [8, 16, 32, 64])
    if not (isinstance(sides, list) and sides and all(isinstance(s, int) and s >= 1 for s in sides)):
        raise ConfigError("config.sequence.sides: need a nonempty list of positive integers")

    cfg.window = dict(_get(raw, "window", dict, cfg.window, "config"))
    _require_keys(cfg.window, {"lo", "hi", "p"}, "config.window")
    try:
        EnergyWindow(
            float(cfg.window.get("lo", 0.0)),
            float(cfg.window.get("hi", 4.5)),
            float(cfg.window.get("p", 2.0)),
        )
    except (TypeError, ValueError) as e:
        raise ConfigError(f"config.window: {e}") from None

    cfg.M_list = _get(raw, "M_list", list, cfg.M_list, "config")
    if not cfg.M_list or not all(isinstance(m, int) and m >= 1 for m in cfg.M_list):
        raise ConfigError("config.M_list: need a nonempty list of positive integers")

    cfg.constants = dict(_get(raw, "constants", dict, cfg.constants, "config"))
    _require_keys(cfg.constants, {"C", "c_pd", "C1", "delta"}, "config.constants")
    for key, lo in (("C", 0.0), ("c_pd", 0.0), ("C1", -1e30), ("delta", 0.0)):
        val = cfg.constants.get(key)
        if val is not None and not isinstance(val, (int, float)):
            raise ConfigError(f"config.constants.{key}: expected a number")
        if val is not None and val < lo:
            raise ConfigError(f"config.constants.{key}: must be >= {lo}")
    if cfg.constants.get("delta", 0.0) >= 1.0:
        raise ConfigError("config.constants.delta: must be < 1")

    cfg.seed = _get(raw, "seed", int, cfg.seed, "config")
    cfg.jobs = _get(raw, "jobs", int, cfg.jobs, "config")
    if cfg.jobs < 1:
        raise ConfigError("config.jobs: must be >= 1")
    cfg.matrix_cap = _get(raw, "matrix_cap", int, cfg.matrix_cap, "config")
    cfg.dense_cap = _get(raw, "dense_cap", int, cfg.dense_cap, "config")

    cfg.ssf = dict(_get(raw, "ssf", dict, cfg.ssf, "config"))
    _require_keys(cfg.ssf, {"cells", "count", "powers", "young_trials"}, "config.ssf")

    cfg.random = dict(_get(raw, "random", dict, cfg.random, "config"))
    _require_keys(
        cfg.random,
        {"weights", "samples", "truncation_radius", "lambda_points", "omegas", "compare_volumes"},
        "config.random",
    )

    cfg.output_dir = _get(raw, "output_dir", str, cfg.output_dir, "config")
    return cfg


def load_config(path: str | Path) -> ExperimentConfig:
    text = Path(path).read_text()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: line {e.lineno}, column {e.colno}: {e.msg}") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    return validate_config(raw)


def config_to_json(cfg: ExperimentConfig) -> str:
    obj = {f.name: getattr(cfg, f.name) for f in fields(ExperimentConfig)}
    return json.dumps(obj, sort_keys=True, indent=2)


# ---------------------------------------------------------------------------
# builders
# ---------------------------------------------------------------------------

def _parse_site_key(key: str, d: int, path: str) -> tuple[int, ...]:
    parts = key.split(",")
    if len(parts) != d:
        raise ConfigError(f"{path}: site key {key!r} does not have {d} coordinates")
    try:
        return tuple(int(p) for p in parts)
    except ValueError:
        raise ConfigError(f"{path}: site key {key!r} is not integer coordinates") from None


def build_coloring(cfg: ExperimentConfig) -> Coloring:
    spec = cfg.coloring
    kind = spec["kind"]
    d = cfg.dimension
    if kind == "constant":
        sym = str(spec.get("symbol", "a"))
        return PeriodicColoring(period=(1,) * d, cell={(0,) * d: sym})
    if kind == "periodic-word":
        if d != 1:
            raise ConfigError("config.coloring: periodic-word requires dimension 1")
        return periodic_word(str(spec["word"]))
    if kind == "periodic":
        period = tuple(int(p) for p in spec["period"])
        if len(period) != d:
            raise ConfigError("config.coloring.period: length must equal dimension")
        cell = {
            _parse_site_key(k, d, "config.coloring.cell"): str(v)
            for k, v in spec["cell"].items()
        }
        return PeriodicColoring(period=period, cell=cell)
    if kind == "window":
        window = {
            _parse_site_key(k, d, "config.coloring.window"): str(v)
            for k, v in spec.get("window", {}).items()
        }
        return WindowColoring(window=window, background=str(spec["background"]), dim=d)
    if kind == "random":
        weights = spec.get("weights", {"a": 0.5, "b": 0.5})
        symbols = tuple(sorted(weights))
        return RandomColoring(
            seed=int(spec.get("seed", cfg.seed)),
            symbols=symbols,
            weights=tuple(float(weights[s]) for s in symbols),
            dim=d,
        )
    raise ConfigError(f"config.coloring.kind: unknown kind {kind!r}")


def build_library(cfg: ExperimentConfig, base_dir: Path | None = None) -> PrototypeLibrary:
    spec = cfg.prototypes
    kind = spec.get("kind", "constant")
    if kind == "constant":
        values = {str(k): float(v) for k, v in spec["values"].items()}
        return PrototypeLibrary.constant_potentials(values, cfg.resolution, cfg.dimension)
    if kind == "zero":
        alphabet = [str(s) for s in spec.get("alphabet", ["a"])]
        return PrototypeLibrary.zero(alphabet, cfg.resolution, cfg.dimension)
    if kind == "file":
        path = Path(spec["path"])
        if base_dir is not None and not path.is_absolute():
            path = base_dir / path
        lib = PrototypeLibrary.from_json(path.read_text())
        if lib.dimension != cfg.dimension:
            raise ConfigError(f"config.prototypes: file dimension {lib.dimension} != {cfg.dimension}")
        if cfg.backend == "continuum" and lib.resolution != cfg.resolution:
            raise ConfigError(
                f"config.prototypes: file resolution {lib.resolution} != {cfg.resolution}"
            )
        return lib
    raise ConfigError(f"config.prototypes.kind: unknown kind {kind!r}")


def build_sequence(cfg: ExperimentConfig):
    return cube_sequence([int(s) for s in cfg.sequence["sides"]], cfg.dimension)


def build_window(cfg: ExperimentConfig) -> EnergyWindow:
    return EnergyWindow(
        float(cfg.window.get("lo", 0.0)),
        float(cfg.window.get("hi", 4.5)),
        float(cfg.window.get("p", 2.0)),
    )
