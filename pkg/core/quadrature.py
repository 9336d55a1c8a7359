"""
Quadrature - Tensor-product rules over a chart's parameter box for integrals against the Riemannian measure
"""

import logging
from dataclasses import dataclass, replace
from typing import Callable, List, Tuple

import numpy as np
from scipy.special import beta

import config
from core.double_forms import inner
from core.geometry import FormField, MetricChart
from utils.errors import DegreeError, DimensionMismatchError
from utils.numerics import compensated_sum

logger = logging.getLogger(__name__)

CHUNK_SIZE = 2048


def _gauss_legendre(a: float, b: float, order: int) -> Tuple[np.ndarray, np.ndarray]:
    xi, w = np.polynomial.legendre.leggauss(order)
    half = 0.5 * (b - a)
    return half * xi + 0.5 * (a + b), half * w


def _periodic_rule(a: float, b: float, order: int) -> Tuple[np.ndarray, np.ndarray]:
    length = b - a
    nodes = a + (np.arange(order) + 0.5) * length / order
    return nodes, np.full(order, length / order)


def excluded_fraction(power: int, margin: float) -> float:
    """Bound on the share of ∫ sin^m over [0, π] lying within `margin` of either end."""
    return 2.0 * margin ** (power + 1) / ((power + 1) * beta(0.5, 0.5 * (power + 1)))


@dataclass(frozen=True)
class QuadratureAtlas:
    """Nodes and weights on a chart box.

    Periodic axes use the equispaced (trapezoid) rule, polar axes
    Gauss-Legendre on [lower + margin, upper - margin], other axes
    Gauss-Legendre on the full interval.
    """
    chart: MetricChart
    nodes: np.ndarray
    weights: np.ndarray
    order: int
    pole_margin: float
    excluded_measure: float

    @classmethod
    def build(cls, chart: MetricChart, order: int = config.QUAD_ORDER,
              pole_margin: float = config.POLE_MARGIN) -> "QuadratureAtlas":
        if order < 1:
            raise DegreeError(f"Quadrature order must be positive, got {order}")
        polar = chart.polar_powers or (-1,) * chart.dim
        axes: List[Tuple[np.ndarray, np.ndarray]] = []
        excluded = 0.0
        for axis in range(chart.dim):
            a, b = float(chart.lower[axis]), float(chart.upper[axis])
            if chart.periodic[axis]:
                axes.append(_periodic_rule(a, b, order))
            elif polar[axis] >= 0:
                axes.append(_gauss_legendre(a + pole_margin, b - pole_margin, order))
                excluded += excluded_fraction(polar[axis], pole_margin)
            else:
                axes.append(_gauss_legendre(a, b, order))
        grids = np.meshgrid(*[nodes for nodes, _ in axes], indexing="ij")
        weight_grids = np.meshgrid(*[w for _, w in axes], indexing="ij")
        nodes = np.stack([grid.ravel() for grid in grids], axis=-1)
        weights = np.prod(np.stack([grid.ravel() for grid in weight_grids], axis=-1), axis=-1)
        logger.debug(f"Quadrature on '{chart.name}': {len(weights)} nodes, excluded measure ≤ {excluded:.2e}")
        return cls(chart=chart, nodes=nodes, weights=weights, order=order, pole_margin=pole_margin,
                   excluded_measure=excluded)

    def with_chart(self, chart: MetricChart) -> "QuadratureAtlas":
        """Same nodes and weights, measure taken from another metric on the same box."""
        if chart.dim != self.chart.dim:
            raise DimensionMismatchError(f"Chart dimension {chart.dim} does not match atlas dimension {self.chart.dim}")
        return replace(self, chart=chart)

    @property
    def size(self) -> int:
        return len(self.weights)

    def chunks(self):
        for start in range(0, self.size, CHUNK_SIZE):
            yield slice(start, start + CHUNK_SIZE)

    def density(self, pts: np.ndarray) -> np.ndarray:
        return np.sqrt(np.linalg.det(self.chart.metric(pts)))

    def integrate(self, fn: Callable[[np.ndarray], np.ndarray]) -> float:
        """∫ fn μ_g, fn mapping (M, n) nodes to (M,) values."""
        parts = []
        for chunk in self.chunks():
            pts = self.nodes[chunk]
            values = np.asarray(fn(pts), dtype=float).reshape(-1)
            parts.append(values * self.weights[chunk] * self.density(pts))
        return compensated_sum(np.concatenate(parts))

    def volume(self) -> float:
        return self.integrate(lambda pts: np.ones(len(pts)))

    def mean(self, fn: Callable[[np.ndarray], np.ndarray]) -> float:
        return self.integrate(fn) / self.volume()


def l2_pair(atlas: QuadratureAtlas, first: FormField, second: FormField) -> float:
    """∫ ⟨first, second⟩ μ_g."""
    if (first.p, first.q) != (second.p, second.q):
        raise DegreeError(f"Cannot pair ({first.p},{first.q}) with ({second.p},{second.q}) fields")
    return atlas.integrate(lambda pts: inner(first.evaluator(pts), second.evaluator(pts)))
