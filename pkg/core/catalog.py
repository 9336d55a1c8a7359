"""
Chart Catalog - Symbolic metrics of the built-in manifolds, compiled to batched numpy evaluators

Each catalog entry is a ChartSymbols record: sympy coordinates, the metric
matrix and a list of globally smooth "embedding" functions (ambient
coordinates for spheres, cos/sin for circle factors) from which random
smooth fields are built. Metric derivatives are taken symbolically.
"""

import logging
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import sympy as sp

import config
from core.geometry import MetricChart
from utils.errors import DegreeError

logger = logging.getLogger(__name__)

T = sp.Symbol("t", real=True)
CATALOG_IDS = ("flat_torus", "sphere", "product", "conformal_flat", "perturbed_sphere")


@dataclass(frozen=True)
class ChartSymbols:
    """Symbolic chart: coordinates, metric matrix, embedding functions and the parameter box.

    polar_powers[i] >= 0 marks a polar angle whose volume density vanishes like sin^m at both ends.
    """
    name: str
    coords: Tuple[sp.Symbol, ...]
    metric: sp.ImmutableMatrix
    embedding: Tuple[sp.Expr, ...]
    lower: Tuple[float, ...]
    upper: Tuple[float, ...]
    periodic: Tuple[bool, ...]
    polar_powers: Tuple[int, ...]

    @property
    def dim(self) -> int:
        return len(self.coords)


def _coords(n: int, offset: int = 0) -> Tuple[sp.Symbol, ...]:
    return tuple(sp.Symbol(f"x{i + offset}", real=True) for i in range(n))


def _check_dimension(n: int, minimum: int = 1):
    if not minimum <= n <= config.MAX_DIMENSION:
        raise DegreeError(f"Dimension must lie in {minimum}..{config.MAX_DIMENSION}, got {n}")


def flat_torus(n: int, periods: Optional[Sequence[float]] = None) -> ChartSymbols:
    _check_dimension(n)
    periods = tuple(float(L) for L in periods) if periods else (2 * np.pi,) * n
    if len(periods) != n or min(periods) <= 0:
        raise DegreeError(f"flat_torus needs {n} positive periods, got {periods}")
    coords = _coords(n)
    embedding = []
    for x, L in zip(coords, periods):
        angle = 2 * sp.pi * x / sp.Float(L)
        embedding.extend([sp.cos(angle), sp.sin(angle)])
    return ChartSymbols(
        name=f"T{n}", coords=coords, metric=sp.ImmutableMatrix(sp.eye(n)), embedding=tuple(embedding),
        lower=(0.0,) * n, upper=periods, periodic=(True,) * n, polar_powers=(-1,) * n,
    )


def sphere(n: int, r: float = 1.0) -> ChartSymbols:
    """Round S^n(r) in hyperspherical coordinates (n-1 polar angles, one azimuth)."""
    _check_dimension(n, minimum=2)
    if r <= 0:
        raise DegreeError(f"Sphere radius must be positive, got {r}")
    coords = _coords(n)
    radius = sp.Float(r)
    ambient = []
    for a in range(n + 1):
        term = radius
        for j in range(min(a, n)):
            term = term * sp.sin(coords[j])
        if a < n:
            term = term * sp.cos(coords[a])
        ambient.append(term)
    diagonal = []
    for i in range(n):
        entry = radius ** 2
        for j in range(i):
            entry = entry * sp.sin(coords[j]) ** 2
        diagonal.append(entry)
    return ChartSymbols(
        name=f"S{n}", coords=coords, metric=sp.ImmutableMatrix(sp.diag(*diagonal)), embedding=tuple(ambient),
        lower=(0.0,) * n, upper=(np.pi,) * (n - 1) + (2 * np.pi,),
        periodic=(False,) * (n - 1) + (True,), polar_powers=tuple(n - 1 - i for i in range(n - 1)) + (-1,),
    )


def product(first: ChartSymbols, second: ChartSymbols) -> ChartSymbols:
    """Riemannian product; the second factor's coordinates are renumbered after the first's."""
    _check_dimension(first.dim + second.dim)
    shifted = _coords(second.dim, offset=first.dim)
    mapping = dict(zip(second.coords, shifted))
    return ChartSymbols(
        name=f"{first.name}x{second.name}",
        coords=first.coords + shifted,
        metric=sp.ImmutableMatrix(sp.diag(first.metric, second.metric.xreplace(mapping))),
        embedding=first.embedding + tuple(e.xreplace(mapping) for e in second.embedding),
        lower=first.lower + second.lower, upper=first.upper + second.upper,
        periodic=first.periodic + second.periodic, polar_powers=first.polar_powers + second.polar_powers,
    )


def conformal_flat(n: int, u_spec: Optional[List[Dict[str, Any]]] = None) -> ChartSymbols:
    """e^{2u}δ on the torus [0, 2π]^n with u = Σ amplitude·cos(wave·x + phase)."""
    base = flat_torus(n)
    if u_spec is None:
        u_spec = [{"amplitude": 0.1, "wave": [1] + [0] * (n - 1)},
                  {"amplitude": 0.05, "wave": [1] * min(n, 2) + [0] * (n - min(n, 2)), "phase": 0.3}]
    u = sp.Integer(0)
    for term in u_spec:
        wave = [int(w) for w in term["wave"]]
        if len(wave) != n or any(w != v for w, v in zip(wave, term["wave"])):
            raise DegreeError(f"conformal_flat waves need {n} integer entries, got {term['wave']}")
        phase = sp.Float(term.get("phase", 0.0))
        u = u + sp.Float(term["amplitude"]) * sp.cos(sum(w * x for w, x in zip(wave, base.coords)) + phase)
    return ChartSymbols(
        name=f"conformal_T{n}", coords=base.coords, metric=sp.ImmutableMatrix(sp.exp(2 * u) * sp.eye(n)),
        embedding=base.embedding, lower=base.lower, upper=base.upper, periodic=base.periodic,
        polar_powers=base.polar_powers,
    )


def perturbed_sphere(n: int, r: float = 1.0, amplitude: float = config.GB_AMPLITUDE, seed: int = 0) -> ChartSymbols:
    """e^{2u} times the round metric, u a seeded quadratic polynomial in the ambient coordinates with |u| <= amplitude."""
    base = sphere(n, r)
    rng = np.random.default_rng(seed)
    linear = rng.standard_normal(n + 1)
    quadratic = rng.standard_normal((n + 1, n + 1))
    quadratic = 0.5 * (quadratic + quadratic.T)
    scale = float(amplitude) / (np.linalg.norm(linear) + np.linalg.norm(quadratic))
    X = [e / sp.Float(r) for e in base.embedding]
    u = sum(sp.Float(scale * linear[a]) * X[a] for a in range(n + 1))
    u = u + sum(sp.Float(scale * quadratic[a, b]) * X[a] * X[b] for a in range(n + 1) for b in range(n + 1))
    return ChartSymbols(
        name=f"perturbed_S{n}", coords=base.coords, metric=sp.ImmutableMatrix(sp.exp(2 * u) * base.metric),
        embedding=base.embedding, lower=base.lower, upper=base.upper, periodic=base.periodic,
        polar_powers=base.polar_powers,
    )


def from_spec(identifier: str, params: Dict[str, Any]) -> ChartSymbols:
    """Build a catalog chart from its identifier and parameters (as found in a manifest)."""
    params = dict(params or {})
    if identifier == "flat_torus":
        return flat_torus(int(params.get("n", 2)), params.get("periods"))
    if identifier == "sphere":
        return sphere(int(params.get("n", 2)), float(params.get("r", 1.0)))
    if identifier == "conformal_flat":
        return conformal_flat(int(params.get("n", 2)), params.get("u_spec"))
    if identifier == "perturbed_sphere":
        return perturbed_sphere(int(params.get("n", 2)), float(params.get("r", 1.0)),
                                float(params.get("amplitude", config.GB_AMPLITUDE)), int(params.get("seed", 0)))
    if identifier == "product":
        factors = params.get("factors") or []
        if len(factors) != 2:
            raise DegreeError("product needs exactly two factors")
        first, second = (from_spec(f["id"], f.get("params", {})) for f in factors)
        return product(first, second)
    raise DegreeError(f"Unknown catalog identifier '{identifier}'")


def dimension_of(identifier: str, params: Dict[str, Any]) -> int:
    """Dimension of a catalog spec without building its symbols."""
    params = params or {}
    if identifier == "product":
        return sum(dimension_of(f["id"], f.get("params", {})) for f in params.get("factors") or [])
    return int(params.get("n", 2))


# --- Compilation ---

def _lambdify_array(exprs: Sequence[sp.Expr], args: Sequence[sp.Symbol], shape: Tuple[int, ...]):
    flat = list(exprs)
    fn = sp.lambdify(tuple(args), flat, modules="numpy", cse=True)

    def evaluate(pts: np.ndarray, params: Tuple[float, ...] = ()) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        columns = [pts[:, i] for i in range(pts.shape[1])]
        values = fn(*columns, *params)
        out = np.empty((pts.shape[0], len(flat)))
        for i, value in enumerate(values):
            out[:, i] = value
        return out.reshape((pts.shape[0],) + shape)

    return evaluate


class SymbolicMetric:
    """Numpy evaluators for g, ∂g and ∂∂g of a symbolic metric matrix, with optional extra parameters."""

    def __init__(self, symbols: ChartSymbols, matrix: sp.Matrix, params: Tuple[sp.Symbol, ...] = ()):
        self.symbols = symbols
        self.params = tuple(params)
        coords = symbols.coords
        n = len(coords)
        args = tuple(coords) + self.params
        d1 = [[[None] * n for _ in range(n)] for _ in range(n)]
        d2 = [[[[None] * n for _ in range(n)] for _ in range(n)] for _ in range(n)]
        for i in range(n):
            for j in range(i, n):
                for k in range(n):
                    first = sp.diff(matrix[i, j], coords[k])
                    d1[k][i][j] = d1[k][j][i] = first
                    for l in range(k, n):
                        second = sp.diff(first, coords[l])
                        d2[k][l][i][j] = d2[k][l][j][i] = d2[l][k][i][j] = d2[l][k][j][i] = second
        flat_d1 = [d1[k][i][j] for k in range(n) for i in range(n) for j in range(n)]
        flat_d2 = [d2[k][l][i][j] for k in range(n) for l in range(n) for i in range(n) for j in range(n)]
        self._g = _lambdify_array(list(matrix), args, (n, n))
        self._d1 = _lambdify_array(flat_d1, args, (n, n, n))
        self._d2 = _lambdify_array(flat_d2, args, (n, n, n, n))
        logger.debug(f"Compiled metric evaluators for '{symbols.name}'")

    def chart(self, *values: float, name: Optional[str] = None) -> MetricChart:
        if len(values) != len(self.params):
            raise DegreeError(f"Expected {len(self.params)} parameter values, got {len(values)}")
        s = self.symbols
        values = tuple(float(v) for v in values)
        return MetricChart(
            name=name or s.name, dim=s.dim, lower=np.array(s.lower), upper=np.array(s.upper),
            periodic=s.periodic, polar_powers=s.polar_powers,
            metric_fn=lambda pts: self._g(pts, values),
            metric_d1_fn=lambda pts: self._d1(pts, values),
            metric_d2_fn=lambda pts: self._d2(pts, values),
        )


@lru_cache(maxsize=64)
def compile_chart(symbols: ChartSymbols) -> MetricChart:
    return SymbolicMetric(symbols, symbols.metric).chart()


def compile_scalar(symbols: ChartSymbols, expr: sp.Expr) -> Callable[[np.ndarray], np.ndarray]:
    evaluate = _lambdify_array([expr], symbols.coords, ())
    return lambda pts: evaluate(pts)


def compile_tensor(symbols: ChartSymbols, matrix: sp.Matrix) -> Callable[[np.ndarray], np.ndarray]:
    n = symbols.dim
    evaluate = _lambdify_array(list(matrix), symbols.coords, (n, n))
    return lambda pts: evaluate(pts)


# --- Deformations ---

@dataclass(frozen=True)
class MetricDeformation:
    """The line g + t·h through a catalog metric, h given by chart components."""
    base: ChartSymbols
    direction: sp.ImmutableMatrix
    conformal_factor: Optional[sp.Expr] = None
    label: str = "h"

    def __post_init__(self):
        n = self.base.dim
        if self.direction.shape != (n, n):
            raise DegreeError(f"Direction must be {n}x{n}, got {self.direction.shape}")
        if self.direction != self.direction.T:
            gap = sp.simplify(self.direction - self.direction.T)
            if gap != sp.zeros(n, n):
                raise DegreeError("Deformation direction must be symmetric")

    @classmethod
    def general(cls, base: ChartSymbols, direction: sp.Matrix, label: str = "h") -> "MetricDeformation":
        return cls(base=base, direction=sp.ImmutableMatrix(direction), label=label)

    @classmethod
    def conformal(cls, base: ChartSymbols, factor: sp.Expr, label: str = "f g") -> "MetricDeformation":
        factor = sp.sympify(factor)
        return cls(base=base, direction=sp.ImmutableMatrix(factor * base.metric),
                   conformal_factor=factor, label=label)

    @classmethod
    def metric_direction(cls, base: ChartSymbols) -> "MetricDeformation":
        return cls.conformal(base, sp.Integer(1), label="g")

    @property
    def dim(self) -> int:
        return self.base.dim

    @cached_property
    def family(self) -> SymbolicMetric:
        return SymbolicMetric(self.base, self.base.metric + T * self.direction, params=(T,))

    def chart_at(self, t: float) -> MetricChart:
        if t == 0.0:
            return compile_chart(self.base)
        return self.family.chart(t, name=f"{self.base.name}+t*{self.label}")

    @cached_property
    def direction_fn(self) -> Callable[[np.ndarray], np.ndarray]:
        return compile_tensor(self.base, self.direction)

    @cached_property
    def factor_fn(self) -> Optional[Callable[[np.ndarray], np.ndarray]]:
        if self.conformal_factor is None:
            return None
        return compile_scalar(self.base, self.conformal_factor)

    def shifted(self, metric_coefficient: float, label: Optional[str] = None) -> "MetricDeformation":
        """h - c·g, the volume-normalized direction when c = ∫tr h μ / (n vol)."""
        c = sp.Float(metric_coefficient)
        if self.conformal_factor is not None:
            return MetricDeformation(base=self.base, direction=sp.ImmutableMatrix((self.conformal_factor - c) * self.base.metric),
                                     conformal_factor=self.conformal_factor - c,
                                     label=label or f"{self.label} - c g")
        return MetricDeformation(base=self.base, direction=sp.ImmutableMatrix(self.direction - c * self.base.metric),
                                 label=label or f"{self.label} - c g")
