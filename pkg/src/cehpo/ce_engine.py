"""Cross-entropy hyperparameter search over a single objective.

Each round scores ``n_samples`` candidate values, takes the elite quantile
threshold ``gamma``, turns the hits into selection probabilities, smooths
them against the probabilities each candidate carried in, and builds the
next population from weighted copies of the elites plus fresh uniform
draws. The run stops once ``gamma`` has stayed flat over a window of
rounds or the round budget is spent.
"""

from __future__ import annotations

import enum
import logging
import math
import numbers
import warnings
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Protocol

import numpy as np
from sklearn.utils.validation import check_scalar

from .hyperspace import HyperValue, Space

logger = logging.getLogger(__name__)

__all__ = [
    "Direction",
    "StopReason",
    "CeConfig",
    "Sample",
    "EliteSet",
    "RoundRecord",
    "CeResult",
    "ConfigError",
    "EngineInvariantError",
    "RunAbortedError",
    "compute_gamma",
    "indicator_hit",
    "estimate_q",
    "smooth_q",
    "build_elite",
    "elite_sample_count",
    "elite_quota",
    "next_round_samples",
    "should_stop",
    "run_cehpo",
    "evaluation_seed",
]


class Direction(enum.Enum):
    MINIMIZE = "minimize"
    MAXIMIZE = "maximize"

    @property
    def worst(self) -> float:
        return math.inf if self is Direction.MINIMIZE else -math.inf

    def better(self, a: float, b: float) -> bool:
        """True if score ``a`` is strictly better than ``b``."""
        return a < b if self is Direction.MINIMIZE else a > b


class StopReason(enum.Enum):
    GAMMA_PLATEAU = "gamma_plateau"
    MAX_ROUNDS = "max_rounds"


class ConfigError(ValueError):
    """An invalid combination of search settings."""


class EngineInvariantError(RuntimeError):
    """Internal bookkeeping went wrong; indicates a bug, not bad input."""


class RunAbortedError(RuntimeError):
    """Every evaluation in a round failed."""


class Objective(Protocol):
    name: str
    direction: Direction

    def evaluate(self, value: HyperValue, eval_seed: int) -> float: ...


def _half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def elite_quota(rho: float, n: int) -> int:
    """Smallest count ``k`` with ``k / n >= rho``.

    Computed by the same comparison the quantile definition uses, so float
    noise in ``rho * n`` cannot bump the quota by one.
    """
    k = max(1, math.ceil(rho * n))
    while k > 1 and (k - 1) / n >= rho:
        k -= 1
    while k < n and k / n < rho:
        k += 1
    return k


@dataclass(frozen=True)
class CeConfig:
    """Constants of one cross-entropy run.

    Parameters
    ----------
    n_samples : int
        Candidates scored per round.
    rho : float
        Elite quantile, in (0, 1).
    smoothing : float
        Weight given to the freshly estimated probabilities, in (0, 1].
        Values outside [0.4, 0.9] are accepted with a warning.
    favorability : float
        Multiplier on ``n_samples * rho`` giving the number of elite copies
        carried into the next round.
    window : int
        Number of trailing ``gamma`` steps that must stay equal to stop.
    gamma_tol : float
        Absolute tolerance for treating two ``gamma`` values as equal.
    max_rounds : int
    direction : Direction
    seed : int
        Unsigned 64-bit run seed.
    """

    n_samples: int = 100
    rho: float = 0.05
    smoothing: float = 0.7
    favorability: float = 10.0
    window: int = 5
    gamma_tol: float = 1e-9
    max_rounds: int = 100
    direction: Direction = Direction.MINIMIZE
    seed: int = 0

    def __post_init__(self) -> None:
        try:
            check_scalar(self.n_samples, "n_samples", numbers.Integral, min_val=1)
            check_scalar(self.rho, "rho", numbers.Real, min_val=0, max_val=1,
                         include_boundaries="neither")
            check_scalar(self.smoothing, "smoothing", numbers.Real, min_val=0,
                         max_val=1, include_boundaries="right")
            check_scalar(self.favorability, "favorability", numbers.Real, min_val=0,
                         include_boundaries="neither")
            check_scalar(self.window, "window", numbers.Integral, min_val=1)
            check_scalar(self.gamma_tol, "gamma_tol", numbers.Real, min_val=0)
            check_scalar(self.max_rounds, "max_rounds", numbers.Integral, min_val=1)
            check_scalar(self.seed, "seed", numbers.Integral, min_val=0,
                         max_val=2**64 - 1)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc
        if not isinstance(self.direction, Direction):
            object.__setattr__(self, "direction", Direction(self.direction))
        n_elite = self.n_elite_copies
        if n_elite >= self.n_samples:
            raise ConfigError(
                f"elite copies per round round(favorability*n_samples*rho) = {n_elite} "
                f"must be < n_samples = {self.n_samples} so fresh samples remain"
            )
        if not 0.4 <= self.smoothing <= 0.9:
            warnings.warn(
                f"smoothing={self.smoothing} is outside the usual 0.4-0.9 range",
                UserWarning,
                stacklevel=3,
            )

    @property
    def n_elite_copies(self) -> int:
        return _half_up(self.favorability * self.n_samples * self.rho)


@dataclass(frozen=True)
class Sample:
    """One candidate within a round.

    ``source`` is ``None`` for a fresh uniform draw, otherwise the index of
    the elite in the previous round's sample list that was copied.
    """

    value: HyperValue
    q_prev: float = 0.0
    source: Optional[int] = None
    score: Optional[float] = None
    q_est: Optional[float] = None
    q_smooth: Optional[float] = None
    is_elite: bool = False
    failed: bool = False

    @property
    def origin(self) -> str:
        return "fresh" if self.source is None else f"elite:{self.source}"


@dataclass(frozen=True)
class EliteSet:
    """Elite sample indices with their normalised resampling weights."""

    indices: tuple[int, ...]
    q_norm: tuple[float, ...]

    def __len__(self) -> int:
        return len(self.indices)


@dataclass(frozen=True)
class RoundRecord:
    round_index: int
    samples: tuple[Sample, ...]
    gamma: float
    elite: EliteSet
    n_resampled: int
    best_in_round: tuple[HyperValue, float]
    best_so_far: tuple[HyperValue, float]

    def elite_members(self) -> list[Sample]:
        return [self.samples[i] for i in self.elite.indices]


@dataclass(frozen=True)
class CeResult:
    best_value: HyperValue
    best_score: float
    rounds: tuple[RoundRecord, ...]
    stop_reason: StopReason
    config: CeConfig = field(repr=False)

    @property
    def n_rounds(self) -> int:
        return len(self.rounds)

    @property
    def n_evaluations(self) -> int:
        return sum(len(r.samples) for r in self.rounds)

    @property
    def gamma_trace(self) -> list[float]:
        return [r.gamma for r in self.rounds]


def compute_gamma(scores, rho: float, direction: Direction) -> float:
    """Elite threshold: the ``elite_quota(rho, M)``-th best score.

    For minimisation this is the smallest ``f`` with at least a
    ``rho`` fraction of scores ``<= f``; for maximisation the largest ``f``
    with at least a ``rho`` fraction of scores ``>= f``.
    """
    scores = np.asarray(scores, dtype=float)
    if scores.size == 0:
        raise ValueError("cannot compute a quantile of no scores")
    if not 0 < rho < 1:
        raise ValueError(f"rho must lie in (0, 1), got {rho}")
    k = elite_quota(rho, scores.size)
    ordered = np.sort(scores)
    if direction is Direction.MINIMIZE:
        return float(ordered[k - 1])
    return float(ordered[-k])


def indicator_hit(score: float, gamma: float, direction: Direction) -> int:
    if direction is Direction.MINIMIZE:
        return int(score <= gamma)
    return int(score >= gamma)


def _unpack(samples):
    """Scores and failure mask from a list of samples or plain numbers."""
    samples = list(samples)
    if samples and isinstance(samples[0], Sample):
        return (np.array([s.score for s in samples], dtype=float),
                np.array([s.failed for s in samples], dtype=bool))
    scores = np.asarray(samples, dtype=float)
    return scores, np.zeros(scores.shape, dtype=bool)


def _hits(scores, gamma: float, direction: Direction, failed) -> np.ndarray:
    if direction is Direction.MINIMIZE:
        hits = scores <= gamma
    else:
        hits = scores >= gamma
    # failed evaluations never qualify, even when gamma itself is a sentinel
    return hits & ~failed


def estimate_q(samples, gamma: float, direction: Direction) -> np.ndarray:
    """Probability estimate: uniform mass over the samples that clear ``gamma``.

    ``samples`` may be scored :class:`Sample` objects or bare scores.
    """
    scores, failed = _unpack(samples)
    hits = _hits(scores, gamma, direction, failed)
    total = hits.sum()
    if total == 0:
        raise EngineInvariantError("no sample clears its own quantile threshold")
    return hits / total


def smooth_q(q_est, q_prev, smoothing: float) -> np.ndarray:
    q_est = np.asarray(q_est, dtype=float)
    q_prev = np.asarray(q_prev, dtype=float)
    if q_est.shape != q_prev.shape:
        raise ValueError(
            f"length mismatch: {q_est.shape[0]} estimates vs {q_prev.shape[0]} priors"
        )
    return smoothing * q_est + (1.0 - smoothing) * q_prev


def build_elite(samples, gamma: float, direction: Direction) -> EliteSet:
    """Elite set: the samples clearing ``gamma``, weighted by normalised ``q_smooth``."""
    scores, failed = _unpack(samples)
    idx = np.flatnonzero(_hits(scores, gamma, direction, failed))
    if idx.size == 0:
        raise EngineInvariantError("empty elite set")
    w = np.array([samples[i].q_smooth for i in idx], dtype=float)
    total = w.sum()
    if total > 0:
        w = w / total
    else:
        # unreachable while smoothing > 0; kept as a guard
        w = np.full(idx.size, 1.0 / idx.size)
    return EliteSet(tuple(idx.tolist()), tuple(w.tolist()))


def elite_sample_count(config: CeConfig) -> int:
    """Elite copies per round, ``favorability * n_samples * rho`` rounded half-up."""
    return config.n_elite_copies


def _round_rng(seed: int, round_index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(0, round_index)))


def evaluation_seed(seed: int, round_index: int, sample_index: int) -> int:
    """Deterministic 64-bit evaluation seed for one sample of one round."""
    ss = np.random.SeedSequence(seed, spawn_key=(1, round_index, sample_index))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def initial_samples(space: Space, n: int, rng: np.random.Generator) -> list[Sample]:
    return [Sample(space.sample(rng)) for _ in range(n)]


def next_round_samples(
    previous: RoundRecord | list[Sample],
    elite: EliteSet,
    config: CeConfig,
    space: Space,
    rng: np.random.Generator,
) -> list[Sample]:
    """Build the next population.

    ``config.n_elite_copies`` samples are exact copies of elites drawn with
    replacement in proportion to ``elite.q_norm``; each copy carries its
    source's smoothed probability as ``q_prev``. The remaining samples are
    fresh uniform draws with ``q_prev = 0``.
    """
    samples = previous.samples if isinstance(previous, RoundRecord) else previous
    if len(elite) == 0:
        raise EngineInvariantError("cannot resample from an empty elite set")
    n_copies = config.n_elite_copies
    out: list[Sample] = []
    if n_copies:
        picks = rng.choice(len(elite), size=n_copies, replace=True, p=np.asarray(elite.q_norm))
        for p in picks:
            src = elite.indices[int(p)]
            parent = samples[src]
            out.append(Sample(parent.value, q_prev=float(parent.q_smooth), source=src))
    out.extend(Sample(space.sample(rng)) for _ in range(config.n_samples - n_copies))
    return out


def should_stop(gamma_trace, window: int, gamma_tol: float = 0.0) -> bool:
    """True once the last ``window + 1`` gammas all sit within ``gamma_tol`` of the last."""
    if len(gamma_trace) < window + 1:
        return False
    last = gamma_trace[-1]
    return all(abs(g - last) <= gamma_tol for g in gamma_trace[-(window + 1):])


def _score(objective: Objective, sample: Sample, eval_seed: int, worst: float):
    try:
        score = float(objective.evaluate(sample.value, eval_seed))
    except Exception as exc:  # noqa: BLE001 - any objective failure becomes a sentinel
        logger.debug("evaluation of %r failed: %s", sample.value, exc)
        return worst, True
    if math.isnan(score):
        return worst, True
    return score, False


def run_cehpo(
    space: Space,
    objective: Objective,
    config: CeConfig,
    callback: Optional[Callable[[RoundRecord], None]] = None,
) -> CeResult:
    """Run the cross-entropy search to completion.

    Parameters
    ----------
    space : ScalarIntervalSpace or DecreasingSequenceSpace
    objective : object with ``evaluate(value, eval_seed)`` and ``direction``
    config : CeConfig
    callback : callable, optional
        Called with every finished :class:`RoundRecord`.

    Returns
    -------
    CeResult

    Raises
    ------
    RunAbortedError
        If every evaluation of a round fails.
    """
    direction = config.direction
    obj_dir = getattr(objective, "direction", direction)
    if obj_dir is not direction:
        raise ConfigError(
            f"objective {getattr(objective, 'name', objective)!r} is {obj_dir.value} "
            f"but the search is configured to {direction.value}"
        )

    worst = direction.worst
    rounds: list[RoundRecord] = []
    best: Optional[tuple[HyperValue, float]] = None
    samples = initial_samples(space, config.n_samples, _round_rng(config.seed, 1))
    stop = StopReason.MAX_ROUNDS

    for t in range(1, config.max_rounds + 1):
        scored = [_score(objective, s, evaluation_seed(config.seed, t, i), worst)
                  for i, s in enumerate(samples)]
        scores = np.array([sc for sc, _ in scored])
        failed = np.array([f for _, f in scored])
        if failed.all():
            raise RunAbortedError(f"all {len(samples)} evaluations failed in round {t}")

        gamma = compute_gamma(scores, config.rho, direction)
        samples = [replace(s, score=float(scores[i]), failed=bool(failed[i]))
                   for i, s in enumerate(samples)]
        q_est = estimate_q(samples, gamma, direction)
        q_prev = np.array([s.q_prev for s in samples])
        q_smooth = smooth_q(q_est, q_prev, config.smoothing)
        hits = q_est > 0
        samples = [
            replace(s, q_est=float(q_est[i]), q_smooth=float(q_smooth[i]),
                    is_elite=bool(hits[i]))
            for i, s in enumerate(samples)
        ]
        elite = build_elite(samples, gamma, direction)

        # first index among the best scores, so ties resolve deterministically
        order = np.argsort(scores if direction is Direction.MINIMIZE else -scores,
                           kind="stable")
        top = samples[int(order[0])]
        best_in_round = (top.value, top.score)
        if best is None or direction.better(top.score, best[1]):
            best = best_in_round

        record = RoundRecord(
            round_index=t,
            samples=tuple(samples),
            gamma=gamma,
            elite=elite,
            n_resampled=sum(s.source is not None for s in samples),
            best_in_round=best_in_round,
            best_so_far=best,
        )
        rounds.append(record)
        if callback is not None:
            callback(record)
        logger.debug("round %d: gamma=%r best=%r", t, gamma, best[1])

        if should_stop([r.gamma for r in rounds], config.window, config.gamma_tol):
            stop = StopReason.GAMMA_PLATEAU
            break
        if t == config.max_rounds:
            break
        samples = next_round_samples(record, elite, config, space, _round_rng(config.seed, t + 1))

    return CeResult(best[0], best[1], tuple(rounds), stop, config)
