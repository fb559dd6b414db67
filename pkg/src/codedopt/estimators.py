"""Gradient estimates from antithetic worker evaluations."""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .codec import DirectionSet, ErasedOutputs, decode
from .construction import CodeConfig

DEFAULT_DELTA = 1e-3


class Method(str, Enum):
    FINITE_DIFFERENCES = "finite_differences"
    EVOLUTION_STRATEGIES = "evolution_strategies"
    CODED = "coded"


@dataclass(frozen=True)
class GradientEstimate:
    values: np.ndarray
    method: Method
    n_outputs_used: int
    decoded: bool = False

    def __post_init__(self):
        if self.n_outputs_used < 1:
            raise ValueError("an estimate uses at least one output")
        if self.decoded and self.method is not Method.CODED:
            raise ValueError("only coded estimates are decoded")


@dataclass(frozen=True)
class WorkerTask:
    direction: np.ndarray
    delta: float = DEFAULT_DELTA

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError(f"delta must be positive, got {self.delta}")

    def run(self, f, theta) -> float:
        return symmetric_directional_derivative(f, theta, self.direction, self.delta)


def symmetric_directional_derivative(f, theta, v, delta: float = DEFAULT_DELTA) -> float:
    """``(f(theta + delta v) - f(theta - delta v)) / (2 delta)``, two evaluations."""
    if not delta > 0:
        raise ValueError(f"delta must be positive, got {delta}")
    theta = np.asarray(theta, dtype=float)
    step = delta * np.asarray(v, dtype=float)
    return (f(theta + step) - f(theta - step)) / (2.0 * delta)


def antithetic_outputs(f, theta, directions, delta: float = DEFAULT_DELTA) -> np.ndarray:
    """Directional-derivative estimates for every row of ``directions``.

    Uses ``f.evaluate_many`` when the objective provides it, otherwise
    :func:`symmetric_directional_derivative` row by row.
    """
    if not delta > 0:
        raise ValueError(f"delta must be positive, got {delta}")
    theta = np.asarray(theta, dtype=float)
    steps = delta * np.asarray(directions, dtype=float)
    batch = getattr(f, "evaluate_many", None)
    if batch is None:
        return np.array([symmetric_directional_derivative(f, theta, v, delta) for v in directions])
    n = steps.shape[0]
    points = np.empty((2 * n, theta.size))
    points[0::2] = theta + steps
    points[1::2] = theta - steps
    vals = batch(points)
    return (vals[0::2] - vals[1::2]) / (2.0 * delta)


def finite_difference_gradient(f, theta, delta: float = DEFAULT_DELTA, coordinates=None) -> GradientEstimate:
    """Central differences along the requested unit vectors; other entries stay 0.

    ``coordinates`` are 0-based; ``None`` means all of them.
    """
    theta = np.asarray(theta, dtype=float)
    d = theta.size
    coords = np.arange(d) if coordinates is None else np.unique(np.asarray(list(coordinates), dtype=int))
    if coords.size == 0:
        raise ValueError("coordinate set is empty")
    if coords.min() < 0 or coords.max() >= d:
        raise IndexError("coordinate out of range")
    grad = np.zeros(d)
    grad[coords] = antithetic_outputs(f, theta, np.eye(d)[coords], delta)
    return GradientEstimate(grad, Method.FINITE_DIFFERENCES, int(coords.size))


def fd_from_outputs(outputs: ErasedOutputs) -> GradientEstimate:
    """Straggler finite differences: worker ``j`` owns coordinate ``j``; missing ones are 0."""
    avail = np.asarray(outputs.available, dtype=bool)
    if not avail.any():
        raise ValueError("no outputs received")
    grad = np.where(avail, outputs.values, 0.0)
    return GradientEstimate(grad, Method.FINITE_DIFFERENCES, int(avail.sum()))


def es_gradient(outputs, directions, received=None) -> GradientEstimate:
    """Average of ``g_i * v_i`` over the received workers.

    ``g_i`` already carries the ``1/(2 delta)`` factor, so with every
    worker received this is the antithetic ES estimator.
    """
    g = np.asarray(outputs, dtype=float)
    v = np.asarray(directions, dtype=float)
    if received is None:
        idx = np.arange(g.size)
    else:
        received = np.asarray(received)
        idx = np.flatnonzero(received) if received.dtype == bool else received.astype(int)
    if idx.size == 0:
        raise ValueError("received set is empty")
    values = g[idx] @ v[idx] / idx.size
    return GradientEstimate(values, Method.EVOLUTION_STRATEGIES, int(idx.size))


def coded_gradient(config: CodeConfig, dirset: DirectionSet, outputs: ErasedOutputs) -> GradientEstimate:
    """Decode the erased outputs and undo the random sign flips."""
    decoded = decode(config, outputs)
    return GradientEstimate(decoded / dirset.diag_signs, Method.CODED, outputs.n_available, decoded=True)
