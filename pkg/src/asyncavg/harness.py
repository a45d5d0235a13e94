"""Experiment orchestration: config files, seed batches, sweeps, file output.

Config documents are TOML with a closed key set (unknown keys are
rejected).  A sweep is the cartesian product of the optional ``[sweep]``
grid over (p_init, q_shrink, q_flip) with the base parameters; every
(cell, seed) pair becomes one run.  Outputs are a long-format trajectory
CSV and a JSON summary per run, plus one sweep-level JSON; all output
bytes are a pure function of the config, so identical configs produce
identical files.
"""

from __future__ import annotations

import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .dynamics import InitSpec, RunRecord, SelectionDistribution, SimParams, run
from .rng import RngStream

log = logging.getLogger("asyncavg")

REQUIRED_KEYS = ("n", "p_init", "horizon", "tolerance")
SCALAR_KEYS = {
    "n": int,
    "p_init": float,
    "q_shrink": float,
    "q_flip": float,
    "tolerance": float,
    "horizon": int,
    "sample_stride": int,
    "seed_count": int,
    "root_seed": int,
    "mode": str,
    "output_dir": str,
}
LIST_KEYS = ("seeds", "selection")
TABLE_KEYS = ("init", "sweep")
SWEEP_KEYS = ("p_init", "q_shrink", "q_flip")
KNOWN_KEYS = frozenset(SCALAR_KEYS) | set(LIST_KEYS) | set(TABLE_KEYS)

DEFAULT_SEED_COUNT = 20
DEFAULT_ROOT_SEED = 1
DEFAULT_SAMPLE_STRIDE = 10


class ConfigError(ValueError):
    """Malformed, incomplete, or out-of-range experiment configuration."""


def derive_seeds(root_seed: int, count: int) -> list[int]:
    """Per-run seeds from a root seed via split streams with run-index labels."""
    if count < 1:
        raise ConfigError("seed_count must be >= 1")
    root = RngStream(root_seed)
    return [root.split(f"run-{k}").next_u64() for k in range(count)]


@dataclass(frozen=True)
class ExperimentConfig:
    base: SimParams
    seeds: tuple[int, ...]
    sweep: dict = field(default_factory=dict)  # subset of SWEEP_KEYS -> value list
    sample_stride: int = DEFAULT_SAMPLE_STRIDE
    mode: str = "fast"
    output_dir: Path | None = None

    def cells(self) -> list[SimParams]:
        """Grid cells in deterministic order (p_init, then q_shrink, then q_flip)."""
        cells = [self.base]
        for key in SWEEP_KEYS:
            if key not in self.sweep:
                continue
            cells = [
                _replace_param(cell, key, value) for cell in cells for value in self.sweep[key]
            ]
        return cells


def _replace_param(params: SimParams, key: str, value: float) -> SimParams:
    fields = {**params.cell_dict(), "selection": params.selection, "init": params.init}
    fields[key] = value
    return SimParams(**fields)


def _coerce(key: str, value, want: type):
    if want is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if not isinstance(value, want) or isinstance(value, bool):
        raise ConfigError(f"key {key!r} must be {want.__name__}, got {value!r}")
    return value


def _parse_init(raw) -> InitSpec:
    if raw == "uniform01":
        return InitSpec.uniform01()
    if isinstance(raw, dict):
        if set(raw) == {"constant"}:
            return InitSpec.constant(_coerce("init.constant", raw["constant"], float))
        if set(raw) == {"explicit"}:
            values = raw["explicit"]
            if not isinstance(values, list) or not values:
                raise ConfigError("init.explicit must be a nonempty list of numbers")
            return InitSpec.explicit(values)
    raise ConfigError(
        f"init must be 'uniform01', {{constant = c}}, or {{explicit = [...]}}; got {raw!r}"
    )


def config_from_dict(doc: dict) -> ExperimentConfig:
    """Validate a raw config mapping and build an ExperimentConfig."""
    unknown = set(doc) - KNOWN_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    for key in REQUIRED_KEYS:
        if key not in doc:
            raise ConfigError(f"missing required key {key!r}")

    scalars = {}
    for key, want in SCALAR_KEYS.items():
        if key in doc:
            scalars[key] = _coerce(key, doc[key], want)

    selection = None
    if "selection" in doc:
        probs = doc["selection"]
        if not isinstance(probs, list):
            raise ConfigError("selection must be a list of probabilities")
        try:
            selection = SelectionDistribution(tuple(float(p) for p in probs))
        except (TypeError, ValueError) as err:
            raise ConfigError(f"invalid selection distribution: {err}") from err

    init = _parse_init(doc.get("init", "uniform01"))

    try:
        base = SimParams(
            n=scalars["n"],
            p_init=scalars["p_init"],
            q_shrink=scalars.get("q_shrink", 0.0),
            q_flip=scalars.get("q_flip", 0.0),
            tolerance=scalars["tolerance"],
            horizon=scalars["horizon"],
            selection=selection,
            init=init,
        )
    except ValueError as err:
        raise ConfigError(str(err)) from err

    if "seeds" in doc:
        if "seed_count" in doc or "root_seed" in doc:
            raise ConfigError("give either 'seeds' or 'seed_count'/'root_seed', not both")
        raw_seeds = doc["seeds"]
        if not isinstance(raw_seeds, list) or not raw_seeds:
            raise ConfigError("seeds must be a nonempty list of integers")
        seeds = tuple(_coerce("seeds[]", s, int) for s in raw_seeds)
    else:
        seeds = tuple(
            derive_seeds(
                scalars.get("root_seed", DEFAULT_ROOT_SEED),
                scalars.get("seed_count", DEFAULT_SEED_COUNT),
            )
        )

    sweep = {}
    if "sweep" in doc:
        raw_sweep = doc["sweep"]
        if not isinstance(raw_sweep, dict):
            raise ConfigError("[sweep] must be a table of value lists")
        bad = set(raw_sweep) - set(SWEEP_KEYS)
        if bad:
            raise ConfigError(f"unknown sweep keys: {sorted(bad)} (allowed: {list(SWEEP_KEYS)})")
        for key, values in raw_sweep.items():
            if not isinstance(values, list) or not values:
                raise ConfigError(f"sweep.{key} must be a nonempty list")
            values = [_coerce(f"sweep.{key}[]", v, float) for v in values]
            for v in values:
                if not 0.0 <= v <= 1.0:
                    raise ConfigError(f"sweep.{key} value {v!r} out of [0, 1]")
            sweep[key] = values

    mode = scalars.get("mode", "fast")
    if mode not in ("fast", "verify"):
        raise ConfigError(f"mode must be 'fast' or 'verify', got {mode!r}")
    stride = scalars.get("sample_stride", DEFAULT_SAMPLE_STRIDE)
    if stride < 1:
        raise ConfigError("sample_stride must be >= 1")

    out = scalars.get("output_dir")
    return ExperimentConfig(
        base=base,
        seeds=seeds,
        sweep=sweep,
        sample_stride=stride,
        mode=mode,
        output_dir=Path(out) if out is not None else None,
    )


def parse_override(text: str) -> tuple[str, object]:
    """Parse one --set KEY=VALUE override; VALUE uses TOML literal syntax.

    Bare words that fail TOML parsing are taken as strings, so
    ``--set mode=verify`` works without shell quoting.
    """
    key, sep, value = text.partition("=")
    key = key.strip()
    if not sep or not key:
        raise ConfigError(f"override {text!r} is not of the form key=value")
    try:
        parsed = tomllib.loads(f"v = {value.strip()}")["v"]
    except tomllib.TOMLDecodeError:
        parsed = value.strip()
    return key, parsed


def apply_overrides(doc: dict, overrides) -> dict:
    """Apply key=value overrides onto a raw config mapping (pre-validation).

    Dotted keys address tables, e.g. ``sweep.q_flip=[1e-6]``.  Validation
    happens afterwards, so a bad override fails exactly like a bad file
    value.
    """
    doc = json.loads(json.dumps(doc))  # deep copy of plain data
    for item in overrides:
        key, value = item if isinstance(item, tuple) else parse_override(item)
        parts = key.split(".")
        top = parts[0]
        if top not in KNOWN_KEYS:
            raise ConfigError(f"override names unknown config key {top!r}")
        target = doc
        for part in parts[:-1]:
            target = target.setdefault(part, {})
            if not isinstance(target, dict):
                raise ConfigError(f"override {key!r} does not address a table")
        target[parts[-1]] = value
    return doc


def load_config(text: str, overrides=()) -> ExperimentConfig:
    """Parse a TOML config document, apply overrides, validate."""
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as err:
        raise ConfigError(f"malformed config document: {err}") from err
    if overrides:
        doc = apply_overrides(doc, overrides)
    return config_from_dict(doc)


def load_config_file(path, overrides=()) -> ExperimentConfig:
    return load_config(Path(path).read_text(encoding="utf-8"), overrides)


# -- sweep execution -------------------------------------------------------


@dataclass
class CellSummary:
    params: dict  # the six cell parameters
    runs: list[dict]  # per seed: {"seed", "t_stop"} or {"seed", "error"}
    median_t_stop: float | None  # None encodes "no stop" (median is censored)
    no_stop_count: int
    failed_count: int = 0


@dataclass
class SweepSummary:
    cells: list[CellSummary]

    def to_json(self) -> str:
        payload = {
            "cells": [
                {
                    "params": c.params,
                    "runs": c.runs,
                    "median_t_stop": c.median_t_stop,
                    "no_stop_count": c.no_stop_count,
                    "failed_count": c.failed_count,
                }
                for c in self.cells
            ]
        }
        return json.dumps(payload, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "SweepSummary":
        payload = json.loads(text)
        return cls(
            cells=[
                CellSummary(
                    params=c["params"],
                    runs=c["runs"],
                    median_t_stop=c["median_t_stop"],
                    no_stop_count=c["no_stop_count"],
                    failed_count=c.get("failed_count", 0),
                )
                for c in payload["cells"]
            ]
        )


def median_stop_time(stops: list[int | None]) -> float | None:
    """Median stopping time with censored runs ranked as +infinity.

    Returns None when the median itself is censored (at least half the
    runs never stopped).
    """
    if not stops:
        return None
    ranked = sorted(float("inf") if s is None else float(s) for s in stops)
    k = len(ranked)
    mid = (ranked[(k - 1) // 2] + ranked[k // 2]) / 2.0
    return None if mid == float("inf") else mid


def _execute_run(args) -> RunRecord:
    params, seed, stride, mode = args
    return run(params, seed, sample_stride=stride, mode=mode)


def run_sweep(
    config: ExperimentConfig,
    jobs: int = 1,
    force: bool = False,
    keep_records: bool = False,
) -> tuple[SweepSummary, list[RunRecord | None], int]:
    """Execute every (cell, seed) run of the sweep.

    Runs may execute in parallel (``jobs``); files and the summary are
    always assembled in (cell, seed) order, so output is independent of
    scheduling.  Per-run failures are recorded and the sweep continues.
    Returns (summary, records-or-Nones, exit_code) where exit_code is 0
    for a clean sweep and 2 if any run failed; records are retained only
    when ``keep_records`` (trajectories can be large).
    """
    cells = config.cells()
    tasks = [
        (cell, seed, config.sample_stride, config.mode) for cell in cells for seed in config.seeds
    ]
    results: list[RunRecord | BaseException] = [None] * len(tasks)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(_execute_run, task) for task in tasks]
            for idx, fut in enumerate(futures):
                try:
                    results[idx] = fut.result()
                except Exception as err:  # per-run failure; sweep continues
                    results[idx] = err
    else:
        for idx, task in enumerate(tasks):
            try:
                results[idx] = _execute_run(task)
            except Exception as err:
                results[idx] = err

    if config.output_dir is not None:
        config.output_dir.mkdir(parents=True, exist_ok=True)

    summary_cells: list[CellSummary] = []
    kept: list[RunRecord | None] = []
    failed_total = 0
    idx = 0
    for cell in cells:
        entries: list[dict] = []
        stops: list[int | None] = []
        failures = 0
        for seed in config.seeds:
            outcome = results[idx]
            idx += 1
            if isinstance(outcome, BaseException):
                log.warning("run %s seed %d failed: %s", cell_slug(cell), seed, outcome)
                entries.append({"seed": seed, "error": str(outcome)})
                failures += 1
                kept.append(None)
                continue
            entries.append({"seed": seed, "t_stop": outcome.t_stop})
            stops.append(outcome.t_stop)
            if config.output_dir is not None:
                write_run_outputs(outcome, config.output_dir, force=force)
            log.info(
                "run %s seed %d: t_stop=%s wall=%.2fs",
                cell_slug(cell),
                seed,
                outcome.t_stop,
                outcome.wall_time,
            )
            kept.append(outcome if keep_records else None)
        summary_cells.append(
            CellSummary(
                params=cell.cell_dict(),
                runs=entries,
                median_t_stop=median_stop_time(stops),
                no_stop_count=sum(1 for s in stops if s is None),
                failed_count=failures,
            )
        )
        failed_total += failures

    summary = SweepSummary(summary_cells)
    if config.output_dir is not None:
        write_summary(summary, config.output_dir, force=force)
    return summary, kept, (2 if failed_total else 0)


# -- file output ------------------------------------------------------------


def fmt_param(x: float) -> str:
    return format(x, "g")


def cell_slug(params: SimParams) -> str:
    return f"p{fmt_param(params.p_init)}_qs{fmt_param(params.q_shrink)}_qf{fmt_param(params.q_flip)}"


def _open_new(path: Path, force: bool):
    if path.exists() and not force:
        raise FileExistsError(f"refusing to overwrite {path} (use --force)")
    return path.open("w", encoding="utf-8", newline="\n")


def trajectory_csv_name(record: RunRecord) -> str:
    return f"traj_{cell_slug(record.params)}_seed{record.seed}.csv"


def run_json_name(record: RunRecord) -> str:
    return f"run_{cell_slug(record.params)}_seed{record.seed}.json"


def write_trajectory_csv(record: RunRecord, path: Path, force: bool = False) -> None:
    """Long-format CSV: t,agent,state with lossless 17-digit floats."""
    with _open_new(path, force) as fh:
        fh.write("t,agent,state\n")
        for t, states in record.samples:
            for agent, value in enumerate(states):
                fh.write(f"{t},{agent},{float(value):.17g}\n")


def run_json_payload(record: RunRecord) -> dict:
    return {
        "cell": record.params.cell_dict(),
        "seed": record.seed,
        "t_stop": record.t_stop,
        "drop_violation_count": record.drop_violation_count,
        "z_series": [[t, z] for t, z in record.diagnostics.z],
        "diameter_series": [[t, d] for t, d in record.diagnostics.diameter],
    }


def write_run_json(record: RunRecord, path: Path, force: bool = False) -> None:
    with _open_new(path, force) as fh:
        json.dump(run_json_payload(record), fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_run_outputs(record: RunRecord, output_dir: Path, force: bool = False) -> None:
    output_dir.mkdir(parents=True, exist_ok=True)
    write_trajectory_csv(record, output_dir / trajectory_csv_name(record), force)
    write_run_json(record, output_dir / run_json_name(record), force)


def write_summary(summary: SweepSummary, output_dir: Path, force: bool = False) -> None:
    with _open_new(output_dir / "summary.json", force) as fh:
        fh.write(summary.to_json())
        fh.write("\n")
