"""Input checks shared by the estimator wrappers and the CLI."""

from __future__ import annotations

import numbers

import numpy as np

from .ce_engine import Direction
from .hyperspace import DecreasingSequenceSpace, ScalarIntervalSpace


def check_objective(objective):
    """Return ``objective`` if it exposes ``evaluate`` and a ``Direction``."""
    if not callable(getattr(objective, "evaluate", None)):
        raise TypeError(f"{objective!r} has no evaluate(value, eval_seed) method")
    if not isinstance(getattr(objective, "direction", None), Direction):
        raise TypeError(f"{objective!r} must declare a Direction as .direction")
    return objective


def check_space(space, objective=None):
    """Resolve the search space, falling back to ``objective.default_space()``."""
    if space is None:
        default = getattr(objective, "default_space", None)
        if default is None:
            raise ValueError("no search space given and the objective has no default")
        space = default()
    if not isinstance(space, (ScalarIntervalSpace, DecreasingSequenceSpace)):
        raise TypeError(f"unsupported search space {space!r}")
    return space


def check_seed(random_state) -> int:
    """Turn ``random_state`` into a 64-bit seed.

    ``None`` draws fresh OS entropy, so results will not be reproducible.
    """
    if random_state is None:
        return int(np.random.SeedSequence().generate_state(1, dtype=np.uint64)[0])
    if isinstance(random_state, bool) or not isinstance(random_state, numbers.Integral):
        raise TypeError(f"random_state must be an int or None, got {random_state!r}")
    if not 0 <= random_state < 2**64:
        raise ValueError(f"random_state must fit in 64 unsigned bits, got {random_state}")
    return int(random_state)
