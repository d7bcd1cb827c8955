"""Tune across a grid of datasets x problems and pick one consensus value.

Each (dataset, problem) cell gets its own cross-entropy run with a seed
derived from the run seed and the cell position. The consensus is the
medoid of the per-cell winners under squared distance: the winner whose
summed squared distance to all winners is smallest.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Any, Callable, Optional

import numpy as np
from joblib import Parallel, delayed

from .ce_engine import CeConfig, CeResult, RunAbortedError, run_cehpo
from .hyperspace import HyperValue, Scalar, Sequence, Space, distance_sq


@dataclass(frozen=True)
class TaskGrid:
    """``factory(dataset, problem)`` must return an objective over ``space``."""

    datasets: tuple[Any, ...]
    problems: tuple[Any, ...]
    factory: Callable[[Any, Any], Any]
    space: Space

    def __post_init__(self) -> None:
        object.__setattr__(self, "datasets", tuple(self.datasets))
        object.__setattr__(self, "problems", tuple(self.problems))
        if not self.datasets or not self.problems:
            raise ValueError("a task grid needs at least one dataset and one problem")

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.datasets), len(self.problems)


@dataclass(frozen=True)
class GridResult:
    cells: tuple[tuple[CeResult, ...], ...]
    consensus: HyperValue
    consensus_cell: tuple[int, int]

    @property
    def cell_best(self) -> list[list[tuple[HyperValue, float]]]:
        return [[(r.best_value, r.best_score) for r in row] for row in self.cells]


class CellFailedError(RuntimeError):
    def __init__(self, cell: tuple[int, int], cause: Exception):
        super().__init__(f"cell (dataset {cell[0]}, problem {cell[1]}) aborted: {cause}")
        self.cell = cell


def cell_seed(seed: int, i: int, j: int) -> int:
    ss = np.random.SeedSequence(seed, spawn_key=(2, i, j))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _consensus_sums(candidates: list[HyperValue]) -> list[float]:
    return [sum(distance_sq(y, x) for y in candidates) for x in candidates]


def select_consensus_index(candidates) -> int:
    """Index of the squared-distance medoid; ties go to the lowest index."""
    candidates = list(candidates)
    if not candidates:
        raise ValueError("no candidates to choose a consensus from")
    first = candidates[0]
    for c in candidates[1:]:
        same = (isinstance(c, Scalar) and isinstance(first, Scalar)) or (
            isinstance(c, Sequence) and isinstance(first, Sequence) and len(c) == len(first))
        if not same:
            raise TypeError(f"mixed candidate shapes: {first!r} and {c!r}")
    sums = _consensus_sums(candidates)
    # np.argmin returns the first minimum
    return int(np.argmin(sums))


def select_consensus(candidates) -> HyperValue:
    candidates = list(candidates)
    return candidates[select_consensus_index(candidates)]


def _run_cell(grid: TaskGrid, config: CeConfig, i: int, j: int) -> CeResult:
    objective = grid.factory(grid.datasets[i], grid.problems[j])
    cfg = replace(config, seed=cell_seed(config.seed, i, j))
    try:
        return run_cehpo(grid.space, objective, cfg)
    except RunAbortedError as exc:
        raise CellFailedError((i, j), exc) from exc


def run_grid(grid: TaskGrid, config: CeConfig, n_jobs: Optional[int] = None) -> GridResult:
    """Run one search per cell and return the per-cell winners plus their consensus.

    Cells are independent; ``n_jobs`` runs them on a thread pool. Results are
    assembled in (dataset, problem) order, so the output does not depend on
    scheduling.
    """
    n_d, n_p = grid.shape
    positions = [(i, j) for i in range(n_d) for j in range(n_p)]
    results = Parallel(n_jobs=n_jobs, prefer="threads")(
        delayed(_run_cell)(grid, config, i, j) for i, j in positions
    )
    rows = tuple(tuple(results[i * n_p:(i + 1) * n_p]) for i in range(n_d))
    k = select_consensus_index([r.best_value for r in results])
    return GridResult(rows, results[k].best_value, positions[k])
