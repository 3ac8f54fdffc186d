"""Weighted scalar objective over a box-bounded search space.

The optimizers minimize F(x) = w1*m1(x) + w2*m2(x) + w3*m3(x), where the
m_i are trained surrogate networks evaluated on the z-scored target scale.
Combining on the normalized scale keeps metrics of very different
magnitudes commensurate under the user weights.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .surrogate.network import DenseNetwork, forward


class OutOfBoundsError(ValueError):
    """A point lies outside the search space; callers must repair first."""


@dataclass(frozen=True)
class SearchSpace:
    """Axis-aligned box of feasible layout vectors."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "lower", np.asarray(self.lower, dtype=float))
        object.__setattr__(self, "upper", np.asarray(self.upper, dtype=float))
        if self.lower.ndim != 1 or self.lower.shape != self.upper.shape:
            raise ValueError("lower and upper bounds must be vectors of equal length")
        if not (self.lower < self.upper).all():
            raise ValueError("lower bounds must be strictly below upper bounds")

    @property
    def dim(self) -> int:
        return self.lower.shape[0]

    @classmethod
    def unit(cls, dim: int) -> "SearchSpace":
        return cls(np.zeros(dim), np.ones(dim))

    def contains(self, x: np.ndarray) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(x.shape == self.lower.shape and (x >= self.lower).all() and (x <= self.upper).all())


def clamp(space: SearchSpace, x: np.ndarray) -> np.ndarray:
    """Project a point coordinatewise onto the box."""
    return np.clip(np.asarray(x, dtype=float), space.lower, space.upper)


@dataclass(frozen=True)
class WeightVector:
    w1: float
    w2: float
    w3: float

    def __post_init__(self):
        ws = (self.w1, self.w2, self.w3)
        if any(w < 0 for w in ws):
            raise ValueError(f"weights must be nonnegative, got {ws}")
        if not any(w > 0 for w in ws):
            raise ValueError("at least one weight must be positive")

    def as_array(self) -> np.ndarray:
        return np.array([self.w1, self.w2, self.w3])


def scenario_weights(scenario_id: int) -> WeightVector:
    """Preset weightings: scenario 1 doubles the temperature weight, 2 is uniform."""
    if scenario_id == 1:
        return WeightVector(1.0, 1.0, 2.0)
    if scenario_id == 2:
        return WeightVector(1.0, 1.0, 1.0)
    raise ValueError(f"scenario_id must be 1 or 2, got {scenario_id}")


class BoundedObjective:
    """Minimization target over a box, with an evaluation counter.

    `evaluate` rejects out-of-bounds points (constraint repair is the
    caller's job) and increments `eval_counter` once per call. Instances
    are not thread-safe; concurrent optimizers need separate instances.
    """

    def __init__(self, space: SearchSpace):
        self.space = space
        self.eval_counter = 0

    def evaluate(self, x: np.ndarray) -> float:
        x = np.asarray(x, dtype=float)
        if not self.space.contains(x):
            raise OutOfBoundsError("point is outside the search space; clamp before evaluating")
        self.eval_counter += 1
        return float(self._value(x))

    def _value(self, x: np.ndarray) -> float:
        raise NotImplementedError


class ScalarizedObjective(BoundedObjective):
    """Weighted sum of three surrogate networks on the z-scored scale."""

    def __init__(self, weights: WeightVector, surrogates: tuple[DenseNetwork, DenseNetwork, DenseNetwork],
                 space: SearchSpace):
        super().__init__(space)
        if len(surrogates) != 3:
            raise ValueError(f"need exactly 3 surrogates, got {len(surrogates)}")
        for net in surrogates:
            if net.input_dim != space.dim:
                raise ValueError(
                    f"surrogate input dim {net.input_dim} does not match space dim {space.dim}"
                )
        self.weights = weights
        self.surrogates = tuple(surrogates)

    def _value(self, x: np.ndarray) -> float:
        w = self.weights
        s1, s2, s3 = self.surrogates
        return w.w1 * forward(s1, x) + w.w2 * forward(s2, x) + w.w3 * forward(s3, x)


class FunctionObjective(BoundedObjective):
    """Adapter putting a plain function behind the counted-objective interface."""

    def __init__(self, fn, space: SearchSpace):
        super().__init__(space)
        self.fn = fn

    def _value(self, x: np.ndarray) -> float:
        return float(self.fn(x))
