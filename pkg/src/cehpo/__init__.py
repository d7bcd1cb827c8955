"""Cross-entropy hyperparameter optimisation (CEHPO)."""

from .ce_engine import (
    CeConfig,
    CeResult,
    ConfigError,
    Direction,
    RoundRecord,
    StopReason,
    run_cehpo,
)
from .estimators import CrossEntropySearch, GridSearch, RandomSearch
from .hyperspace import DecreasingSequenceSpace, Scalar, ScalarIntervalSpace, Sequence
from .multitask import TaskGrid, run_grid, select_consensus

__version__ = "0.1.0"

__all__ = [
    "CeConfig",
    "CeResult",
    "ConfigError",
    "CrossEntropySearch",
    "DecreasingSequenceSpace",
    "Direction",
    "GridSearch",
    "RandomSearch",
    "RoundRecord",
    "Scalar",
    "ScalarIntervalSpace",
    "Sequence",
    "StopReason",
    "TaskGrid",
    "run_cehpo",
    "run_grid",
    "select_consensus",
]
