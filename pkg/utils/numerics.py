"""
Numerics - Finite-difference jet stencils, Richardson extrapolation and compensated sums
"""

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Callable, Optional, Tuple

import numpy as np

import config

# 4th-order central weights
FIRST_OFFSETS = (-2, -1, 1, 2)
FIRST_WEIGHTS = np.array([1.0, -8.0, 8.0, -1.0]) / 12.0
SECOND_WEIGHTS = np.array([-1.0, 16.0, 16.0, -1.0]) / 12.0
SECOND_CENTER_WEIGHT = -30.0 / 12.0


def step_sizes(x: np.ndarray, exponent: float) -> np.ndarray:
    """Per-coordinate steps eps**exponent * (1 + |x_i|)."""
    return np.finfo(float).eps ** exponent * (1.0 + np.abs(np.asarray(x, dtype=float)))


@dataclass(frozen=True)
class JetStencil:
    """Stencil points around a batch of base points, for first (order 1) or first and second (order 2) jets."""
    base: np.ndarray
    steps: np.ndarray
    order: int
    points: np.ndarray

    @property
    def dim(self) -> int:
        return self.base.shape[-1]

    def assemble(self, values: np.ndarray) -> Tuple[np.ndarray, np.ndarray, Optional[np.ndarray]]:
        """Turn stencil values (N, P, ...) into (value, ∂_i, ∂_i∂_j)."""
        n = self.dim
        values = np.asarray(values, dtype=float)
        tail = values.shape[2:]
        h = self.steps.reshape(self.steps.shape + (1,) * len(tail))
        center = values[:, 0]
        axis_values = values[:, 1:1 + 4 * n].reshape((values.shape[0], n, 4) + tail)
        first = np.einsum("j,nij...->ni...", FIRST_WEIGHTS, axis_values) / h
        if self.order < 2:
            return center, first, None
        second = np.empty((values.shape[0], n, n) + tail)
        pure = np.einsum("j,nij...->ni...", SECOND_WEIGHTS, axis_values) + SECOND_CENTER_WEIGHT * center[:, None]
        for i in range(n):
            second[:, i, i] = pure[:, i] / h[:, i] ** 2
        start = 1 + 4 * n
        outer = np.outer(FIRST_WEIGHTS, FIRST_WEIGHTS).ravel()
        for pair, (i, j) in enumerate(combinations(range(n), 2)):
            block = values[:, start + 16 * pair:start + 16 * (pair + 1)]
            mixed = np.einsum("j,nj...->n...", outer, block) / (h[:, i] * h[:, j])
            second[:, i, j] = mixed
            second[:, j, i] = mixed
        return center, first, second


def build_stencil(x: np.ndarray, order: int = 1, exponent: Optional[float] = None) -> JetStencil:
    """Lay out center, ±h/±2h axis points and (order 2) the 16-point mixed blocks."""
    base = np.atleast_2d(np.asarray(x, dtype=float))
    n = base.shape[-1]
    if exponent is None:
        exponent = config.FD_FIRST_STEP_EXPONENT if order < 2 else config.FD_SECOND_STEP_EXPONENT
    steps = step_sizes(base, exponent)
    shifts = [np.zeros(n)]
    for i in range(n):
        for a in FIRST_OFFSETS:
            shift = np.zeros(n)
            shift[i] = a
            shifts.append(shift)
    if order >= 2:
        for i, j in combinations(range(n), 2):
            for a in FIRST_OFFSETS:
                for b in FIRST_OFFSETS:
                    shift = np.zeros(n)
                    shift[i], shift[j] = a, b
                    shifts.append(shift)
    shifts = np.array(shifts)
    points = base[:, None, :] + shifts[None, :, :] * steps[:, None, :]
    return JetStencil(base=base, steps=steps, order=order, points=points)


def evaluate_jets(fn: Callable[[np.ndarray], np.ndarray], x: np.ndarray, order: int = 1,
                  exponent: Optional[float] = None):
    """Jets of a batched function fn: (M, n) -> (M, ...)."""
    stencil = build_stencil(x, order, exponent)
    N, P, n = stencil.points.shape
    values = np.asarray(fn(stencil.points.reshape(N * P, n)), dtype=float)
    return stencil.assemble(values.reshape((N, P) + values.shape[1:]))


def central_difference(fn: Callable[[float], float], step: float) -> float:
    return (fn(step) - fn(-step)) / (2.0 * step)


def five_point_derivative(fn: Callable[[float], np.ndarray], step: float) -> np.ndarray:
    """4th-order derivative at 0 from fn(±step), fn(±2 step)."""
    return (fn(-2 * step) - 8 * fn(-step) + 8 * fn(step) - fn(2 * step)) / (12.0 * step)


def richardson(coarse: float, fine: float, ratio: float = 2.0, order: int = 2) -> float:
    """Eliminate the leading error term of a pair of estimates with steps h and h/ratio."""
    factor = ratio ** order
    return (factor * fine - coarse) / (factor - 1.0)


def compensated_sum(values) -> float:
    return math.fsum(np.asarray(values, dtype=float).ravel().tolist())


def relative_error(first: float, second: float, floor: float = config.RELATIVE_FLOOR) -> float:
    scale = max(abs(first), abs(second), floor)
    return abs(first - second) / scale
