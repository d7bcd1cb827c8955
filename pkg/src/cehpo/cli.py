"""Command-line entry point: ``cehpo {tune,grid,compare} --config FILE``.

Outputs go to the configured directory:

``trace.csv``
    One row per sample per round (``grid`` writes ``trace_cell_<i>_<j>.csv``
    and ``compare`` writes ``trace_seed_<seed>.csv``).
``summary.json``
    Best value and score, stop reason, rounds and evaluations used.
``comparison.csv``
    ``compare`` only: one row per (method, seed).
``timing.json``
    Wall-clock time. Kept apart from ``summary.json`` so reruns with the
    same seed produce byte-identical summaries.

Exit status is 0 on success, 2 for configuration errors and 3 for runtime
failures.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Optional

from .baselines import grid_search, random_search
from .ce_engine import CeConfig, CeResult, ConfigError, Direction, RoundRecord, run_cehpo
from .hyperspace import DecreasingSequenceSpace, ScalarIntervalSpace, Space
from .multitask import CellFailedError, TaskGrid, run_grid
from .objectives import (
    ANALYTIC,
    AdamParams,
    LogisticBlobs,
    NoisyQuadratic,
    TrainingObjective,
    analytic_objective,
)

logger = logging.getLogger("cehpo")

SCHEMA_VERSION = 1
COMMANDS = ("tune", "grid", "compare")
TRACE_COLUMNS = ("round", "sample_index", "origin", "beta", "score", "q_prev", "q_est",
                 "q_smooth", "is_elite", "gamma", "best_so_far")
CE_KEYS = {"n_samples", "rho", "smoothing", "favorability", "window", "gamma_tol",
           "max_rounds"}
PROBLEMS = {"noisy_quadratic": NoisyQuadratic, "logistic_blobs": LogisticBlobs}


class ConfigFileError(Exception):
    """The config file is missing or is not valid JSON."""


@dataclass
class RunConfig:
    command: str
    space_spec: Optional[dict]
    objective_spec: dict
    ce: CeConfig
    output_dir: Path
    seed: int = 0
    grid_points: int = 11
    n_seeds: int = 5
    datasets: list = field(default_factory=list)
    problems: list = field(default_factory=list)

    def objective(self, spec: Optional[dict] = None, dataset: Optional[dict] = None):
        return build_objective(spec or self.objective_spec, dataset, self.space_spec)

    def space(self, objective) -> Space:
        return build_space(self.space_spec, objective)


# -- config parsing -----------------------------------------------------------


def _problem(spec: dict, dataset: Optional[dict]):
    spec = dict(spec)
    spec.update(dataset or {})
    kind = spec.pop("type", None)
    if kind not in PROBLEMS:
        raise ConfigError(f"problem.type must be one of {sorted(PROBLEMS)}, got {kind!r}")
    cls = PROBLEMS[kind]
    allowed = {f.name for f in fields(cls)}
    unknown = set(spec) - allowed
    if unknown:
        raise ConfigError(f"unknown {kind} settings: {sorted(unknown)}")
    if "curvature" in spec:
        spec["curvature"] = tuple(spec["curvature"])
    try:
        return cls(**spec)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid {kind} problem: {exc}") from exc


def build_objective(spec: dict, dataset: Optional[dict] = None, space_spec=None):
    """Instantiate a built-in objective from its config dictionary."""
    name = spec.get("name")
    if name in ANALYTIC:
        direction = Direction(spec.get("direction", "minimize"))
        return analytic_objective(name, direction)
    if name not in ("convergence", "generalization"):
        raise ConfigError(
            f"objective.name must be one of {sorted(ANALYTIC) + ['convergence', 'generalization']}"
            f", got {name!r}"
        )
    problem = _problem(spec.get("problem", {"type": "noisy_quadratic"}), dataset)
    try:
        fixed = AdamParams(**spec.get("fixed", {}))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid fixed Adam settings: {exc}") from exc
    tuned = spec.get("tuned", "beta2")
    segments = None
    if tuned == "beta1_sequence" and space_spec and space_spec.get("epoch_boundaries"):
        segments = tuple(tuple(seg) for seg in space_spec["epoch_boundaries"])
    try:
        return TrainingObjective(problem, fixed, tuned, spec.get("variant", "adam"),
                                 "steps" if name == "convergence" else "validation",
                                 segments)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def build_space(spec: Optional[dict], objective) -> Space:
    try:
        if spec is None:
            if hasattr(objective, "default_space") and not isinstance(objective, TrainingObjective):
                return objective.default_space()
            raise ConfigError("a 'space' section is required for training objectives")
        kind = spec.get("type", "interval")
        if kind == "interval":
            return ScalarIntervalSpace(float(spec["a"]), float(spec["b"]))
        if kind == "decreasing_sequence":
            k, a, b = int(spec["k"]), float(spec["a"]), float(spec["b"])
            bounds = spec.get("epoch_boundaries")
            if bounds:
                return DecreasingSequenceSpace(k, a, b, tuple(tuple(x) for x in bounds))
            horizon = getattr(getattr(objective, "problem", None), "max_steps", None)
            if horizon is None:
                return DecreasingSequenceSpace(k, a, b)
            return DecreasingSequenceSpace.evenly_split(k, a, b, horizon)
        raise ConfigError(f"space.type must be 'interval' or 'decreasing_sequence', got {kind!r}")
    except KeyError as exc:
        raise ConfigError(f"space is missing field {exc}") from exc
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"invalid space: {exc}") from exc


def load_config(path, seed: Optional[int] = None, out: Optional[str] = None,
                command: Optional[str] = None) -> RunConfig:
    """Read and validate a JSON run configuration.

    Raises
    ------
    ConfigFileError
        Missing file or malformed JSON.
    ConfigError
        Well-formed JSON that violates a constraint.
    """
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except FileNotFoundError as exc:
        raise ConfigFileError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigFileError(f"malformed JSON in {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigFileError(f"{path}: top level must be a JSON object")
    return parse_config(raw, seed=seed, out=out, command=command)


def parse_config(raw: dict, seed=None, out=None, command=None) -> RunConfig:
    version = raw.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema_version {version}")
    command = command or raw.get("command")
    if command not in COMMANDS:
        raise ConfigError(f"command must be one of {COMMANDS}, got {command!r}")
    if "objective" not in raw:
        raise ConfigError("config needs an 'objective' section")
    objective_spec = raw["objective"]
    seed = raw.get("seed", 0) if seed is None else seed

    ce_raw = raw.get("ce", {})
    unknown = set(ce_raw) - CE_KEYS
    if unknown:
        raise ConfigError(f"unknown ce settings: {sorted(unknown)}")
    defaults = dict(n_samples=100, rho=0.05, smoothing=0.7, favorability=10.0, window=5,
                    gamma_tol=1e-9, max_rounds=100)
    defaults.update(ce_raw)

    objective = build_objective(objective_spec, None, raw.get("space"))
    build_space(raw.get("space"), objective)
    ce = CeConfig(direction=objective.direction, seed=seed, **defaults)

    baselines = raw.get("baselines", {})
    grid = raw.get("grid", {})
    cfg = RunConfig(
        command=command,
        space_spec=raw.get("space"),
        objective_spec=objective_spec,
        ce=ce,
        output_dir=Path(out or raw.get("output_dir", "cehpo-out")),
        seed=seed,
        grid_points=int(baselines.get("grid_points", 11)),
        n_seeds=int(baselines.get("n_seeds", 5)),
        datasets=list(grid.get("datasets", [{}])),
        problems=list(grid.get("problems", [objective_spec])),
    )
    if cfg.grid_points < 2:
        raise ConfigError("baselines.grid_points must be at least 2")
    if cfg.n_seeds < 1:
        raise ConfigError("baselines.n_seeds must be at least 1")
    if command == "grid":
        if not cfg.datasets or not cfg.problems:
            raise ConfigError("grid needs at least one dataset and one problem")
        for p in cfg.problems:
            obj = build_objective(p, cfg.datasets[0], cfg.space_spec)
            if obj.direction is not ce.direction:
                raise ConfigError("all grid problems must share one optimisation direction")
    return cfg


# -- output -------------------------------------------------------------------


def _fmt(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return repr(x)
    return str(x)


def trace_rows(record: RoundRecord):
    best = record.best_so_far[1]
    for i, s in enumerate(record.samples):
        yield [record.round_index, i, s.origin, s.value.to_text(), s.score, s.q_prev,
               s.q_est, s.q_smooth, s.is_elite, record.gamma, best]


def write_trace(path: Path, result: CeResult) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        for record in result.rounds:
            for row in trace_rows(record):
                w.writerow([_fmt(x) for x in row])


def result_summary(result: CeResult) -> dict:
    return {
        "best_value": result.best_value.to_text(),
        "best_score": result.best_score,
        "stop_reason": result.stop_reason.value,
        "rounds_used": result.n_rounds,
        "evaluations_used": result.n_evaluations,
    }


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _run_tune(cfg: RunConfig) -> dict:
    objective = cfg.objective()
    result = run_cehpo(cfg.space(objective), objective, cfg.ce)
    write_trace(cfg.output_dir / "trace.csv", result)
    return {"objective": objective.name, **result_summary(result)}


def _run_grid(cfg: RunConfig) -> dict:
    objective = cfg.objective()
    grid = TaskGrid(cfg.datasets, cfg.problems,
                    lambda d, p: build_objective(p, d, cfg.space_spec), cfg.space(objective))
    out = run_grid(grid, cfg.ce)
    cells = []
    for i, row in enumerate(out.cells):
        for j, res in enumerate(row):
            write_trace(cfg.output_dir / f"trace_cell_{i}_{j}.csv", res)
            cells.append({"dataset": i, "problem": j, **result_summary(res)})
    return {
        "cells": cells,
        "consensus": out.consensus.to_text(),
        "consensus_cell": list(out.consensus_cell),
        "evaluations_used": sum(c["evaluations_used"] for c in cells),
    }


def _run_compare(cfg: RunConfig) -> dict:
    objective = cfg.objective()
    space = cfg.space(objective)
    rows = []
    for k in range(cfg.n_seeds):
        seed = cfg.seed + k
        ce = run_cehpo(space, objective, replace(cfg.ce, seed=seed))
        write_trace(cfg.output_dir / f"trace_seed_{seed}.csv", ce)
        budget = ce.n_evaluations
        rows.append(("cehpo", seed, budget, ce.best_value.to_text(), ce.best_score))
        value, score = random_search(space, objective, budget, seed)
        rows.append(("random_search", seed, budget, value.to_text(), score))
        if isinstance(space, ScalarIntervalSpace):
            value, score = grid_search(space, objective, cfg.grid_points, seed)
            rows.append(("grid_search", seed, cfg.grid_points, value.to_text(), score))
    with open(cfg.output_dir / "comparison.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("method", "seed", "evaluations", "best_value", "best_score"))
        for row in rows:
            w.writerow([_fmt(x) for x in row])
    return {
        "objective": objective.name,
        "runs": [dict(zip(("method", "seed", "evaluations", "best_value", "best_score"), r))
                 for r in rows],
    }


RUNNERS = {"tune": _run_tune, "grid": _run_grid, "compare": _run_compare}


def execute(cfg: RunConfig) -> int:
    """Run the configured command and write its outputs; returns the exit status."""
    try:
        cfg.output_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        logger.error("cannot create output directory %s: %s", cfg.output_dir, exc)
        return 3
    start = time.perf_counter()
    try:
        summary = RUNNERS[cfg.command](cfg)
    except (RuntimeError, CellFailedError) as exc:
        logger.error("%s failed: %s", cfg.command, exc)
        return 3
    except OSError as exc:
        logger.error("cannot write outputs to %s: %s", cfg.output_dir, exc)
        return 3
    elapsed = time.perf_counter() - start
    summary = {"schema_version": SCHEMA_VERSION, "command": cfg.command, "seed": cfg.seed,
               **summary}
    _write_json(cfg.output_dir / "summary.json", summary)
    _write_json(cfg.output_dir / "timing.json", {"wall_time_seconds": elapsed})
    logger.info("%s finished in %.2fs; outputs in %s", cfg.command, elapsed, cfg.output_dir)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cehpo", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, help="JSON run configuration")
    parser.add_argument("--seed", type=int, default=None, help="override the config seed")
    parser.add_argument("--out", default=None, help="override the output directory")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    logging.captureWarnings(True)
    try:
        cfg = load_config(args.config, seed=args.seed, out=args.out, command=args.command)
    except ConfigFileError as exc:
        logger.error("%s", exc)
        return 2
    except ConfigError as exc:
        logger.error("invalid configuration: %s", exc)
        return 2
    return execute(cfg)


if __name__ == "__main__":
    sys.exit(main())
