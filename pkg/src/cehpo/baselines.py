"""Grid search and random search over the same objective contract."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ce_engine import Direction
from .hyperspace import HyperValue, Scalar, ScalarIntervalSpace, Space


@dataclass(frozen=True)
class BaselineConfig:
    """``budget`` drives random search; ``grid_points`` drives grid search."""

    budget: int = 100
    grid_points: int = 11
    seed: int = 0

    def __post_init__(self) -> None:
        if self.budget < 1:
            raise ValueError(f"budget must be at least 1, got {self.budget}")
        if self.grid_points < 2:
            raise ValueError(f"grid_points must be at least 2, got {self.grid_points}")


def _seed_for(seed: int, index: int) -> int:
    ss = np.random.SeedSequence(seed, spawn_key=(3, index))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _pick_best(history, direction: Direction) -> tuple[HyperValue, float]:
    best_value, best_score = history[0]
    for value, score in history[1:]:
        if direction.better(score, best_score):
            best_value, best_score = value, score
    return best_value, best_score


def grid_history(space: ScalarIntervalSpace, objective, points: int, seed: int = 0):
    if not isinstance(space, ScalarIntervalSpace):
        raise TypeError("grid search supports scalar interval spaces only")
    if points < 2:
        raise ValueError(f"grid search needs at least 2 points, got {points}")
    grid = np.linspace(space.a, space.b, points)
    # linspace can overshoot b by an ulp
    grid = np.clip(grid, space.a, space.b)
    values = [Scalar(x) for x in grid]
    return [(v, float(objective.evaluate(v, _seed_for(seed, i)))) for i, v in enumerate(values)]


def random_history(space: Space, objective, budget: int, seed: int = 0):
    if budget < 1:
        raise ValueError(f"budget must be at least 1, got {budget}")
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(4,)))
    values = [space.sample(rng) for _ in range(budget)]
    return [(v, float(objective.evaluate(v, _seed_for(seed, i)))) for i, v in enumerate(values)]


def grid_search(space: ScalarIntervalSpace, objective, points: int, seed: int = 0):
    """Evaluate ``points`` equally spaced values including both endpoints.

    Returns the best ``(value, score)``; ties keep the lowest value.
    """
    return _pick_best(grid_history(space, objective, points, seed), objective.direction)


def random_search(space: Space, objective, budget: int, seed: int = 0):
    """Evaluate ``budget`` uniform draws and return the best ``(value, score)``."""
    return _pick_best(random_history(space, objective, budget, seed), objective.direction)
