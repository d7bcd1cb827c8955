"""Hyperparameter search spaces and the values drawn from them.

Two spaces are supported: a closed scalar interval ``[a, b]`` and a
fixed-length, non-increasing sequence whose components all live in
``[a, b]`` (used for piecewise-constant decay schedules such as a
decreasing Adam ``beta1``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np


@dataclass(frozen=True)
class Scalar:
    """A single real-valued hyperparameter."""

    value: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "value", float(self.value))

    def to_text(self) -> str:
        return repr(self.value)


@dataclass(frozen=True)
class Sequence:
    """An ordered list of hyperparameter values, one per training segment."""

    values: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))

    def __len__(self) -> int:
        return len(self.values)

    def to_text(self) -> str:
        # a trailing separator keeps length-1 sequences distinct from scalars
        text = ";".join(repr(v) for v in self.values)
        return text + ";" if len(self.values) == 1 else text


HyperValue = Union[Scalar, Sequence]


def _check_bounds(a: float, b: float) -> None:
    if not (math.isfinite(a) and math.isfinite(b)):
        raise ValueError(f"bounds must be finite, got a={a}, b={b}")
    if not b > a:
        raise ValueError(f"upper bound must exceed lower bound, got a={a}, b={b}")


@dataclass(frozen=True)
class ScalarIntervalSpace:
    """Closed interval ``[a, b]`` with ``b > a``."""

    a: float
    b: float

    def __post_init__(self) -> None:
        _check_bounds(self.a, self.b)

    def sample(self, rng: np.random.Generator) -> Scalar:
        return Scalar(rng.uniform(self.a, self.b))

    def contains(self, value: HyperValue) -> bool:
        return isinstance(value, Scalar) and self.a <= value.value <= self.b


@dataclass(frozen=True)
class DecreasingSequenceSpace:
    """Non-increasing sequences of length ``k`` with components in ``[a, b]``.

    ``epoch_boundaries`` holds one ``(start, stop)`` training-step range per
    component. The ranges must be contiguous, start at zero and be ordered;
    the last ``stop`` is the training horizon.
    """

    k: int
    a: float
    b: float
    epoch_boundaries: tuple[tuple[int, int], ...] = field(default=())

    def __post_init__(self) -> None:
        if int(self.k) != self.k or self.k < 1:
            raise ValueError(f"k must be a positive integer, got {self.k}")
        _check_bounds(self.a, self.b)
        bounds = tuple((int(lo), int(hi)) for lo, hi in self.epoch_boundaries)
        object.__setattr__(self, "epoch_boundaries", bounds)
        if bounds:
            check_segments(bounds)
            if len(bounds) != self.k:
                raise ValueError(
                    f"expected {self.k} epoch ranges, got {len(bounds)}"
                )

    @classmethod
    def evenly_split(cls, k: int, a: float, b: float, horizon: int) -> "DecreasingSequenceSpace":
        """Build a space whose segments split ``[0, horizon)`` as evenly as possible."""
        if horizon < k:
            raise ValueError(f"horizon {horizon} shorter than {k} segments")
        edges = np.linspace(0, horizon, k + 1).round().astype(int)
        return cls(k, a, b, tuple(zip(edges[:-1].tolist(), edges[1:].tolist())))

    def sample(self, rng: np.random.Generator) -> Sequence:
        draws = rng.uniform(self.a, self.b, size=self.k)
        return Sequence(tuple(np.sort(draws)[::-1].tolist()))

    def contains(self, value: HyperValue) -> bool:
        if not isinstance(value, Sequence) or len(value) != self.k:
            return False
        vals = value.values
        if any(not (self.a <= v <= self.b) for v in vals):
            return False
        return all(x >= y for x, y in zip(vals, vals[1:]))


Space = Union[ScalarIntervalSpace, DecreasingSequenceSpace]


def check_segments(segments) -> None:
    """Raise ``ValueError`` unless ``segments`` are contiguous ranges from 0."""
    if not segments:
        raise ValueError("at least one segment is required")
    expected = 0
    for lo, hi in segments:
        if lo != expected:
            raise ValueError(
                f"segment starting at {lo} leaves a gap or overlap (expected {expected})"
            )
        if hi <= lo:
            raise ValueError(f"empty segment [{lo}, {hi})")
        expected = hi


def sample_uniform(space: Space, rng: np.random.Generator) -> HyperValue:
    """Draw one value uniformly from ``space``.

    Sequence spaces draw ``k`` independent uniforms and sort them in
    non-increasing order.
    """
    return space.sample(rng)


def validate(space: Space, value: HyperValue) -> bool:
    return space.contains(value)


def as_array(value: HyperValue) -> np.ndarray:
    if isinstance(value, Scalar):
        return np.array([value.value])
    return np.asarray(value.values, dtype=float)


def distance_sq(x: HyperValue, y: HyperValue) -> float:
    """Squared Euclidean distance between two values of the same shape.

    Raises
    ------
    TypeError
        If one value is a scalar and the other a sequence, or the sequences
        differ in length.
    """
    if isinstance(x, Scalar) and isinstance(y, Scalar):
        return (x.value - y.value) ** 2
    if isinstance(x, Sequence) and isinstance(y, Sequence) and len(x) == len(y):
        return float(sum((p - q) ** 2 for p, q in zip(x.values, y.values)))
    raise TypeError(f"incomparable hyperparameter values: {x!r} and {y!r}")


def parse_value(text: str) -> HyperValue:
    """Inverse of ``to_text``; semicolons mark a sequence."""
    if ";" in text:
        return Sequence(tuple(float(t) for t in text.split(";") if t))
    return Scalar(float(text))
