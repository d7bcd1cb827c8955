"""Objectives to tune: analytic test functions and small Adam/AMSGrad training runs.

Every objective maps ``(value, eval_seed)`` to a float and is a pure
function of those two arguments. Training objectives fix the dataset via
the problem's ``dataset_seed``; the evaluation seed only drives the weight
initialisation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Callable, Literal, Optional, Union

import numpy as np
from scipy.special import expit

from .ce_engine import Direction
from .hyperspace import (
    DecreasingSequenceSpace,
    HyperValue,
    Scalar,
    ScalarIntervalSpace,
    Sequence,
    check_segments,
)

Variant = Literal["adam", "amsgrad"]
TunedField = Literal["alpha", "beta1", "beta2", "beta1_sequence"]


class NonFiniteGradientError(FloatingPointError):
    """A gradient contained NaN or infinity."""


# -- optimizers ---------------------------------------------------------------


@dataclass(frozen=True)
class AdamParams:
    alpha: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    def __post_init__(self) -> None:
        if not self.alpha >= 0:
            raise ValueError(f"Invalid step size: {self.alpha}")
        if not 0.0 <= self.beta1 < 1.0:
            raise ValueError(f"Invalid beta1: {self.beta1}")
        if not 0.0 <= self.beta2 < 1.0:
            raise ValueError(f"Invalid beta2: {self.beta2}")
        if not self.epsilon > 0:
            raise ValueError(f"Invalid epsilon: {self.epsilon}")


@dataclass(frozen=True)
class OptimizerState:
    """Weights plus Adam moment buffers.

    ``beta1_power`` and ``beta2_power`` hold the running products of the
    decay rates used so far, which equal ``beta**t`` for constant rates and
    stay exact when ``beta1`` follows a schedule.
    """

    params: np.ndarray
    m: np.ndarray
    v: np.ndarray
    v_hat_max: np.ndarray
    t: int = 0
    beta1_power: float = 1.0
    beta2_power: float = 1.0

    @classmethod
    def zeros_like(cls, params) -> "OptimizerState":
        params = np.asarray(params, dtype=float).copy()
        z = np.zeros_like(params)
        return cls(params, z, z.copy(), z.copy())


def _moments(state: OptimizerState, grad, p: AdamParams):
    grad = np.asarray(grad, dtype=float)
    if grad.shape != state.params.shape:
        raise ValueError(f"gradient shape {grad.shape} != params shape {state.params.shape}")
    if not np.all(np.isfinite(grad)):
        raise NonFiniteGradientError(
            f"non-finite gradient at step {state.t + 1} "
            f"(alpha={p.alpha}, beta1={p.beta1}, beta2={p.beta2})"
        )
    m = p.beta1 * state.m + (1.0 - p.beta1) * grad
    v = p.beta2 * state.v + (1.0 - p.beta2) * grad * grad
    b1 = state.beta1_power * p.beta1
    b2 = state.beta2_power * p.beta2
    m_hat = m / (1.0 - b1)
    v_hat = v / (1.0 - b2)
    return m, v, b1, b2, m_hat, v_hat


def adam_step(state: OptimizerState, grad, p: AdamParams) -> OptimizerState:
    m, v, b1, b2, m_hat, v_hat = _moments(state, grad, p)
    params = state.params - p.alpha * m_hat / (np.sqrt(v_hat) + p.epsilon)
    return OptimizerState(params, m, v, state.v_hat_max, state.t + 1, b1, b2)


def amsgrad_step(state: OptimizerState, grad, p: AdamParams) -> OptimizerState:
    """Adam step normalised by the running maximum of the bias-corrected second moment."""
    m, v, b1, b2, m_hat, v_hat = _moments(state, grad, p)
    v_max = np.maximum(state.v_hat_max, v_hat)
    params = state.params - p.alpha * m_hat / (np.sqrt(v_max) + p.epsilon)
    return OptimizerState(params, m, v, v_max, state.t + 1, b1, b2)


STEP_FUNCTIONS: dict[str, Callable] = {"adam": adam_step, "amsgrad": amsgrad_step}


# -- training problems --------------------------------------------------------


def _split(n: int, train_fraction: float, rng: np.random.Generator):
    perm = rng.permutation(n)
    n_train = min(max(1, int(round(train_fraction * n))), n - 1)
    return perm[:n_train], perm[n_train:]


@dataclass(frozen=True)
class NoisyQuadratic:
    """Diagonal quadratic whose centre is observed through noisy samples.

    Training loss is the excess loss ``0.5 * sum(h * (w - c_train)**2)``
    where ``c_train`` is the mean of the training centres; it reaches zero at
    the training optimum. The validation metric is the negative mean loss
    against the held-out centres.
    """

    dimension: int = 10
    curvature: tuple[float, float] = (1.0, 10.0)
    noise: float = 0.1
    n_points: int = 200
    loss_threshold: float = 1e-4
    max_steps: int = 2000
    train_fraction: float = 0.8
    dataset_seed: int = 0

    def __post_init__(self) -> None:
        if self.dimension < 1:
            raise ValueError("dimension must be positive")
        if not 0 < self.train_fraction < 1:
            raise ValueError("train_fraction must lie in (0, 1)")
        if self.noise < 0:
            raise ValueError("noise must be non-negative")
        object.__setattr__(self, "curvature", tuple(float(c) for c in self.curvature))

    @property
    def n_params(self) -> int:
        return self.dimension

    @cached_property
    def data(self):
        rng = np.random.default_rng(self.dataset_seed)
        h = np.geomspace(self.curvature[0], self.curvature[1], self.dimension)
        center = rng.standard_normal(self.dimension)
        points = center + self.noise * rng.standard_normal((self.n_points, self.dimension))
        tr, va = _split(self.n_points, self.train_fraction, rng)
        return h, points[tr].mean(axis=0), points[va]

    def loss_and_grad(self, w: np.ndarray):
        h, c, _ = self.data
        d = w - c
        return 0.5 * float(np.dot(h, d * d)), h * d

    def validation_metric(self, w: np.ndarray) -> float:
        h, _, val = self.data
        d = w - val
        return -0.5 * float(np.mean(d * d @ h))


@dataclass(frozen=True)
class LogisticBlobs:
    """Two Gaussian blobs separated along the first axis, fit by logistic regression.

    Parameters are the feature weights followed by a bias. The validation
    metric is held-out accuracy.
    """

    points_per_class: int = 100
    separation: float = 2.0
    dimension: int = 2
    loss_threshold: float = 0.1
    max_steps: int = 2000
    train_fraction: float = 0.7
    dataset_seed: int = 0

    def __post_init__(self) -> None:
        if self.dimension < 1 or self.points_per_class < 1:
            raise ValueError("dimension and points_per_class must be positive")
        if not 0 < self.train_fraction < 1:
            raise ValueError("train_fraction must lie in (0, 1)")

    @property
    def n_params(self) -> int:
        return self.dimension + 1

    @cached_property
    def data(self):
        rng = np.random.default_rng(self.dataset_seed)
        n = self.points_per_class
        shift = np.zeros(self.dimension)
        shift[0] = self.separation / 2
        X = np.vstack([rng.standard_normal((n, self.dimension)) - shift,
                       rng.standard_normal((n, self.dimension)) + shift])
        y = np.concatenate([np.zeros(n), np.ones(n)])
        X = np.hstack([X, np.ones((2 * n, 1))])
        tr, va = _split(2 * n, self.train_fraction, rng)
        return X[tr], y[tr], X[va], y[va]

    def loss_and_grad(self, w: np.ndarray):
        X, y, _, _ = self.data
        return logistic_loss_and_grad(w, X, y)

    def validation_metric(self, w: np.ndarray) -> float:
        _, _, Xv, yv = self.data
        return float(np.mean((Xv @ w > 0) == (yv == 1)))


TrainProblem = Union[NoisyQuadratic, LogisticBlobs]


def logistic_loss_and_grad(w, X, y):
    """Mean binary cross-entropy of ``sigmoid(X @ w)`` against ``y`` and its gradient."""
    z = X @ w
    # log(1 + exp(z)) - y*z, written stably
    loss = float(np.mean(np.logaddexp(0.0, z) - y * z))
    grad = X.T @ (expit(z) - y) / X.shape[0]
    return loss, grad


@dataclass(frozen=True)
class TrainOutcome:
    steps_to_converge: Optional[int]
    final_train_loss: float
    validation_metric: float

    @property
    def converged(self) -> bool:
        return self.steps_to_converge is not None


def _schedule_lookup(schedule, max_steps: int) -> np.ndarray:
    segments = [tuple(seg) for seg, _ in schedule]
    check_segments(segments)
    if segments[-1][1] < max_steps:
        raise ValueError(
            f"schedule ends at step {segments[-1][1]} but training runs {max_steps} steps"
        )
    values = [float(b) for _, b in schedule]
    if any(x < y for x, y in zip(values, values[1:])):
        raise ValueError(f"beta1 schedule must be non-increasing, got {values}")
    if any(not 0.0 <= b < 1.0 for b in values):
        raise ValueError(f"beta1 values must lie in [0, 1), got {values}")
    per_step = np.empty(max_steps)
    for (lo, hi), b in zip(segments, values):
        per_step[lo:min(hi, max_steps)] = b
    return per_step


def beta1_at(schedule, step: int) -> float:
    """The beta1 value in force at training step ``step`` (0-based)."""
    for (lo, hi), b in schedule:
        if lo <= step < hi:
            return float(b)
    raise ValueError(f"step {step} not covered by schedule")


def initial_weights(n: int, eval_seed: int) -> np.ndarray:
    return 0.1 * np.random.default_rng(eval_seed).standard_normal(n)


def train_until(
    problem: TrainProblem,
    p: AdamParams,
    beta1_schedule=None,
    variant: Variant = "adam",
    eval_seed: int = 0,
) -> TrainOutcome:
    """Full-batch training until the train loss drops below the problem's threshold.

    ``beta1_schedule`` is an optional list of ``((start, stop), beta1)``
    pairs covering ``[0, max_steps)``; when given it overrides ``p.beta1``
    step by step.
    """
    step_fn = STEP_FUNCTIONS[variant]
    per_step = None if beta1_schedule is None else _schedule_lookup(beta1_schedule,
                                                                     problem.max_steps)
    state = OptimizerState.zeros_like(initial_weights(problem.n_params, eval_seed))
    loss, grad = problem.loss_and_grad(state.params)
    converged_at = None
    for step in range(problem.max_steps + 1):
        if loss < problem.loss_threshold:
            converged_at = step
            break
        if step == problem.max_steps:
            break
        params = p if per_step is None else replace(p, beta1=per_step[step])
        state = step_fn(state, grad, params)
        loss, grad = problem.loss_and_grad(state.params)
    return TrainOutcome(converged_at, loss, problem.validation_metric(state.params))


# -- objective wrappers -------------------------------------------------------


@dataclass(frozen=True)
class TrainingObjective:
    """Tune one Adam field (or a decreasing beta1 schedule) on a training problem.

    ``metric="steps"`` scores by steps to reach the loss threshold, with
    non-convergence scored as ``max_steps + 1``; ``metric="validation"``
    scores by the problem's validation metric.
    """

    problem: TrainProblem
    fixed: AdamParams = field(default_factory=AdamParams)
    tuned: TunedField = "beta2"
    variant: Variant = "adam"
    metric: Literal["steps", "validation"] = "steps"
    segments: Optional[tuple[tuple[int, int], ...]] = None

    def __post_init__(self) -> None:
        if self.tuned not in ("alpha", "beta1", "beta2", "beta1_sequence"):
            raise ValueError(f"unknown tuned field {self.tuned!r}")
        if self.variant not in STEP_FUNCTIONS:
            raise ValueError(f"unknown optimizer variant {self.variant!r}")

    @property
    def name(self) -> str:
        return f"{self.metric}:{type(self.problem).__name__}:{self.tuned}:{self.variant}"

    @property
    def direction(self) -> Direction:
        return Direction.MINIMIZE if self.metric == "steps" else Direction.MAXIMIZE

    def default_space(self, a: float, b: float, k: int = 3):
        if self.tuned == "beta1_sequence":
            if self.segments:
                return DecreasingSequenceSpace(len(self.segments), a, b, self.segments)
            return DecreasingSequenceSpace.evenly_split(k, a, b, self.problem.max_steps)
        return ScalarIntervalSpace(a, b)

    def train(self, value: HyperValue, eval_seed: int) -> TrainOutcome:
        schedule = None
        if self.tuned == "beta1_sequence":
            if not isinstance(value, Sequence):
                raise TypeError("beta1_sequence objectives take a Sequence value")
            segments = self.segments or DecreasingSequenceSpace.evenly_split(
                len(value), 0.0, 1.0, self.problem.max_steps).epoch_boundaries
            schedule = list(zip(segments, value.values))
            params = self.fixed
        else:
            if not isinstance(value, Scalar):
                raise TypeError(f"{self.tuned} objectives take a Scalar value")
            params = replace(self.fixed, **{self.tuned: value.value})
        return train_until(self.problem, params, schedule, self.variant, eval_seed)

    def evaluate(self, value: HyperValue, eval_seed: int) -> float:
        out = self.train(value, eval_seed)
        if self.metric == "validation":
            return out.validation_metric
        return float(out.steps_to_converge if out.converged else self.problem.max_steps + 1)


def make_convergence_objective(problem, fixed: AdamParams = AdamParams(), tuned="beta2",
                               variant="adam", segments=None) -> TrainingObjective:
    return TrainingObjective(problem, fixed, tuned, variant, "steps", segments)


def make_generalization_objective(problem, fixed: AdamParams = AdamParams(), tuned="beta2",
                                  variant="adam", segments=None) -> TrainingObjective:
    return TrainingObjective(problem, fixed, tuned, variant, "validation", segments)


def quadratic(x: float) -> float:
    return (x - 0.7) ** 2


def gramacy_lee(x: float) -> float:
    return math.sin(10 * math.pi * x) / (2 * x) + (x - 1) ** 4


def double_well(x: float) -> float:
    return (x * x - 1) ** 2


ANALYTIC = {
    "quadratic": (quadratic, (0.0, 1.0)),
    "gramacy_lee": (gramacy_lee, (0.5, 2.5)),
    "double_well": (double_well, (-2.0, 2.0)),
}


@dataclass(frozen=True)
class AnalyticObjective:
    """A deterministic scalar test function; the evaluation seed is ignored."""

    name: str
    direction: Direction = Direction.MINIMIZE

    def __post_init__(self) -> None:
        if self.name not in ANALYTIC:
            raise ValueError(
                f"unknown analytic objective {self.name!r}; choose from {sorted(ANALYTIC)}"
            )

    @property
    def function(self) -> Callable[[float], float]:
        return ANALYTIC[self.name][0]

    def default_space(self) -> ScalarIntervalSpace:
        return ScalarIntervalSpace(*ANALYTIC[self.name][1])

    def evaluate(self, value: HyperValue, eval_seed: int = 0) -> float:
        if not isinstance(value, Scalar):
            raise TypeError(f"{self.name} takes a Scalar value")
        return self.function(value.value)


def analytic_objective(name: str, direction: Direction = Direction.MINIMIZE) -> AnalyticObjective:
    return AnalyticObjective(name, direction)


@dataclass(frozen=True)
class FunctionObjective:
    """Wrap a plain ``f(value, eval_seed) -> float`` callable."""

    function: Callable[[HyperValue, int], float]
    direction: Direction = Direction.MINIMIZE
    name: str = "function"

    def evaluate(self, value: HyperValue, eval_seed: int = 0) -> float:
        return float(self.function(value, eval_seed))
