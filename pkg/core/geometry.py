"""
Geometry - Metric charts, orthonormal frames, curvature and the second Bianchi operators

Points are arrays of shape (n,) or (N, n); batched inputs give batched
outputs. Fields are evaluated in the Gram-Schmidt frame of the coordinate
basis, and differentiated through their coordinate components.
"""

import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

import config
from core.double_forms import (
    CurvatureStructure, DoubleForm, _positions, basis, contract, from_tensor, hodge_star, metric,
    symmetrize, to_tensor, transpose,
)
from core.invariants import lovelock_tensor, pq_curvature_tensor
from utils.errors import DegreeError, DimensionMismatchError, NumericalBreakdownError
from utils.numerics import evaluate_jets

logger = logging.getLogger(__name__)

_SLOTS = "ABCDEFGHIJKLMNOP"


def _as_points(x, n: int) -> Tuple[np.ndarray, bool]:
    pts = np.asarray(x, dtype=float)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    if pts.shape[-1] != n or pts.ndim != 2:
        raise DimensionMismatchError(f"Expected points of dimension {n}, got shape {np.shape(x)}")
    return pts, single


@dataclass(frozen=True)
class MetricChart:
    """Coordinate box with metric components g_ij(x) and optional analytic derivatives.

    metric_fn maps (N, n) points to (N, n, n); metric_d1_fn to (N, n, n, n)
    with [k, i, j] = ∂_k g_ij; metric_d2_fn to (N, n, n, n, n) with
    [k, l, i, j] = ∂_k ∂_l g_ij. polar_powers[i] = m >= 0 marks an axis where
    the volume density vanishes like sin^m at both ends.
    """
    name: str
    dim: int
    lower: np.ndarray
    upper: np.ndarray
    periodic: Tuple[bool, ...]
    metric_fn: Callable[[np.ndarray], np.ndarray]
    metric_d1_fn: Optional[Callable[[np.ndarray], np.ndarray]] = None
    metric_d2_fn: Optional[Callable[[np.ndarray], np.ndarray]] = None
    polar_powers: Tuple[int, ...] = ()

    @property
    def derivative_scheme(self) -> str:
        if self.metric_d1_fn is not None and self.metric_d2_fn is not None:
            return "analytic"
        return "central-difference"

    def check_inside(self, pts: np.ndarray, margin: float = 0.0):
        for axis in range(self.dim):
            if self.periodic[axis]:
                continue
            column = pts[..., axis]
            bad = (column < self.lower[axis] + margin) | (column > self.upper[axis] - margin)
            if np.any(bad):
                point = pts.reshape(-1, self.dim)[int(np.argmax(bad.ravel()))]
                raise NumericalBreakdownError(f"Point outside chart '{self.name}'", point)

    def check_spd(self, g: np.ndarray, pts: np.ndarray):
        smallest = np.linalg.eigvalsh(g)[..., 0]
        bad = ~(smallest > 0.0)
        if np.any(bad):
            point = pts.reshape(-1, self.dim)[int(np.argmax(bad.ravel()))]
            raise NumericalBreakdownError(f"Metric of chart '{self.name}' is not positive-definite", point)

    def metric(self, x) -> np.ndarray:
        pts, single = _as_points(x, self.dim)
        self.check_inside(pts)
        g = np.asarray(self.metric_fn(pts), dtype=float)
        return g[0] if single else g

    def metric_derivatives(self, x) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(g, ∂g, ∂∂g) at a batch of points."""
        pts, _ = _as_points(x, self.dim)
        self.check_inside(pts)
        if self.derivative_scheme == "analytic":
            return (np.asarray(self.metric_fn(pts), dtype=float),
                    np.asarray(self.metric_d1_fn(pts), dtype=float),
                    np.asarray(self.metric_d2_fn(pts), dtype=float))
        return evaluate_jets(self.metric_fn, pts, order=2)


# --- Frames ---

def frame_and_coframe(g: np.ndarray, order: Optional[Sequence[int]] = None) -> Tuple[np.ndarray, np.ndarray]:
    """Gram-Schmidt frame E (columns e_a = Σ_i E[i,a] ∂_i) and M with ∂_i = Σ_a M[i,a] e_a."""
    g = np.asarray(g, dtype=float)
    n = g.shape[-1]
    perm = np.arange(n) if order is None else np.asarray(order, dtype=np.intp)
    if sorted(perm.tolist()) != list(range(n)):
        raise DimensionMismatchError(f"Frame order {list(perm)} is not a permutation of 0..{n - 1}")
    g_perm = g[..., perm[:, None], perm[None, :]]
    try:
        lower = np.linalg.cholesky(g_perm)
    except np.linalg.LinAlgError as e:
        raise NumericalBreakdownError(f"Cholesky factorization failed: {e}") from e
    frame_perm = np.swapaxes(np.linalg.inv(lower), -1, -2)
    frame = np.empty_like(frame_perm)
    coframe = np.empty_like(lower)
    frame[..., perm, :] = frame_perm
    coframe[..., perm, :] = lower
    return frame, coframe


def orthonormal_frame(g: np.ndarray, order: Optional[Sequence[int]] = None) -> np.ndarray:
    return frame_and_coframe(g, order)[0]


def _transform_axes(tensor: np.ndarray, matrix: np.ndarray, rank: int) -> np.ndarray:
    """out[x_1..x_r] = Σ matrix[x_s, a_s] ... tensor[a_1..a_r] on the trailing `rank` axes."""
    if rank == 0:
        return tensor
    batch_nd = tensor.ndim - rank
    mat = matrix.reshape(matrix.shape[:-2] + (1,) * (rank - 1) + matrix.shape[-2:])
    for s in range(rank):
        axis = batch_nd + s
        moved = np.moveaxis(tensor, axis, -1)
        moved = np.einsum("...a,...xa->...x", moved, mat)
        tensor = np.moveaxis(moved, -1, axis)
    return tensor


def to_frame(tensor: np.ndarray, frame: np.ndarray, rank: int) -> np.ndarray:
    return _transform_axes(tensor, np.swapaxes(frame, -1, -2), rank)


def to_coordinates(tensor: np.ndarray, coframe: np.ndarray, rank: int) -> np.ndarray:
    return _transform_axes(tensor, coframe, rank)


# --- Levi-Civita connection and curvature ---

def levi_civita_derivative(chart: MetricChart, x) -> Tuple[np.ndarray, np.ndarray]:
    """Γ[k,i,j] = Γ^k_ij and ∂Γ[m,k,i,j] = ∂_m Γ^k_ij at a batch of points."""
    g, dg, d2g = chart.metric_derivatives(x)
    chart.check_spd(g, _as_points(x, chart.dim)[0])
    ginv = np.linalg.inv(g)
    lower = dg + np.swapaxes(dg, -3, -2) - np.moveaxis(dg, -3, -1)
    gamma = 0.5 * np.einsum("...kl,...ijl->...kij", ginv, lower)
    dginv = -np.einsum("...ka,...mab,...bl->...mkl", ginv, dg, ginv)
    dlower = d2g + np.swapaxes(d2g, -3, -2) - np.moveaxis(d2g, -3, -1)
    dgamma = 0.5 * (np.einsum("...mkl,...ijl->...mkij", dginv, lower)
                    + np.einsum("...kl,...mijl->...mkij", ginv, dlower))
    return gamma, dgamma


def christoffel(chart: MetricChart, x) -> np.ndarray:
    pts, single = _as_points(x, chart.dim)
    gamma, _ = levi_civita_derivative(chart, pts)
    return gamma[0] if single else gamma


def riemann_coordinates(chart: MetricChart, x) -> np.ndarray:
    """Coordinate components R[i,j,k,l] = g(R(∂_i,∂_j)∂_k, ∂_l) with R(x,y) = ∇_[x,y] - [∇_x,∇_y]."""
    pts, single = _as_points(x, chart.dim)
    g = chart.metric(pts)
    gamma, dgamma = levi_civita_derivative(chart, pts)
    # standard (∇_i∇_j - ∇_j∇_i)∂_k = std[l,k,i,j] ∂_l
    std = (np.einsum("...iljk->...lkij", dgamma) - np.einsum("...jlik->...lkij", dgamma)
           + np.einsum("...lim,...mjk->...lkij", gamma, gamma)
           - np.einsum("...ljm,...mik->...lkij", gamma, gamma))
    out = -np.einsum("...la,...akij->...ijkl", g, std)
    return out[0] if single else out


def riemann(chart: MetricChart, x, order: Optional[Sequence[int]] = None) -> CurvatureStructure:
    """The Riemann curvature as a (2,2) curvature structure in the orthonormal frame."""
    pts, single = _as_points(x, chart.dim)
    n = chart.dim
    coords = riemann_coordinates(chart, pts)
    frame = orthonormal_frame(chart.metric(pts), order)
    form = symmetrize(from_tensor(to_frame(coords, frame, 4), n, 2, 2))
    if single:
        form = form[0]
    tol = config.SYMMETRY_TOL if chart.derivative_scheme == "analytic" else config.OPERATOR_TOL
    return CurvatureStructure.from_form(form, tol=tol)


# --- Fields ---

@dataclass(frozen=True)
class FormField:
    """A double-form field on a chart: (N, n) points -> DoubleForm with batch (N,), frame-expressed."""
    chart: MetricChart
    p: int
    q: int
    evaluator: Callable[[np.ndarray], DoubleForm]
    name: str = "field"

    @property
    def n(self) -> int:
        return self.chart.dim

    def __call__(self, x) -> DoubleForm:
        pts, single = _as_points(x, self.n)
        value = self.evaluator(pts)
        if (value.n, value.p, value.q) != (self.n, self.p, self.q):
            raise DimensionMismatchError(
                f"Field '{self.name}' declared ({self.p},{self.q}) in n={self.n}, produced {value!r}"
            )
        return value[0] if single else value


def metric_field(chart: MetricChart) -> FormField:
    return FormField(chart, 1, 1, lambda pts: metric(chart.dim, (len(pts),)), name="g")


def riemann_field(chart: MetricChart) -> FormField:
    return FormField(chart, 2, 2, lambda pts: riemann(chart, pts).form, name="R")


def lovelock_field(chart: MetricChart, k: int) -> FormField:
    return FormField(chart, 1, 1, lambda pts: lovelock_tensor(riemann(chart, pts), k).form, name=f"T{2 * k}")


def pq_curvature_field(chart: MetricChart, p: int, q: int) -> FormField:
    return FormField(chart, p, p, lambda pts: pq_curvature_tensor(riemann(chart, pts), p, q).form,
                     name=f"R({p},{q})")


def chart_tensor_field(chart: MetricChart, components: Callable[[np.ndarray], np.ndarray],
                       name: str = "h") -> FormField:
    """Symmetric (1,1) field from chart components h_ij(x)."""
    n = chart.dim

    def evaluate(pts):
        frame = orthonormal_frame(chart.metric(pts))
        return from_tensor(to_frame(np.asarray(components(pts), dtype=float), frame, 2), n, 1, 1)

    return FormField(chart, 1, 1, evaluate, name=name)


def scalar_field(chart: MetricChart, fn: Callable[[np.ndarray], np.ndarray], name: str = "f") -> FormField:
    n = chart.dim
    return FormField(chart, 0, 0, lambda pts: DoubleForm(n, 0, 0, np.asarray(fn(pts), dtype=float)[:, None, None]),
                     name=name)


def exterior_form_field(chart: MetricChart, components: Callable[[np.ndarray], np.ndarray], p: int,
                        name: str = "alpha") -> FormField:
    """(p,0) field from antisymmetric chart components α_{i1..ip}(x)."""
    n = chart.dim

    def evaluate(pts):
        frame = orthonormal_frame(chart.metric(pts))
        return from_tensor(to_frame(np.asarray(components(pts), dtype=float), frame, p), n, p, 0)

    return FormField(chart, p, 0, evaluate, name=name)


# --- Covariant derivatives ---

@dataclass(frozen=True)
class CovariantDerivative:
    """coeffs[..., c, I, J] = (∇_{e_c} ω)(e_I, e_J); `order` 2 adds a second direction axis in front."""
    n: int
    p: int
    q: int
    coeffs: np.ndarray
    order: int = 1

    def component(self, *directions: int) -> DoubleForm:
        index = (Ellipsis,) + tuple(directions) + (slice(None), slice(None))
        return DoubleForm(self.n, self.p, self.q, self.coeffs[index])

    def along(self, v) -> DoubleForm:
        """∇_v ω for a frame vector v (first-order derivatives only)."""
        if self.order != 1:
            raise DegreeError("along() applies to first covariant derivatives")
        v = np.asarray(v, dtype=float)
        return DoubleForm(self.n, self.p, self.q, np.einsum("...c,...cij->...ij", v, self.coeffs))

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.coeffs))) if self.coeffs.size else 0.0


def _connection(gamma: np.ndarray, tensor: np.ndarray, rank: int, direction: str, lead: str, output: str):
    """Σ_s Σ_z Γ^z_{direction, i_s} tensor[lead, ..., z at slot s, ...]."""
    slots = _SLOTS[:rank]
    total = 0.0
    for s in range(rank):
        replaced = slots[:s] + "z" + slots[s + 1:]
        total = total + np.einsum(f"...z{direction}{slots[s]},...{lead}{replaced}->...{output}{slots}",
                                  gamma, tensor)
    return total


def _coordinate_values(field: FormField, pts: np.ndarray) -> np.ndarray:
    field.chart.check_inside(pts)
    form = field.evaluator(pts)
    _, coframe = frame_and_coframe(field.chart.metric(pts))
    return to_coordinates(to_tensor(form), coframe, field.p + field.q)


def _covariant_arrays(field: FormField, pts: np.ndarray, order: int):
    """Frame-expressed ∇ω (and ∇²ω when order = 2) as coefficient arrays."""
    chart, n, rank = field.chart, field.n, field.p + field.q
    value, first, second = evaluate_jets(lambda P: _coordinate_values(field, P), pts, order=order)
    gamma, dgamma = levi_civita_derivative(chart, pts)
    slots = _SLOTS[:rank]
    nabla = first - _connection(gamma, value, rank, "m", "", "m")
    frame = orthonormal_frame(chart.metric(pts))
    nabla_frame = from_tensor(to_frame(nabla, frame, rank + 1), n, field.p, field.q).coeffs
    if order < 2:
        return nabla_frame, None
    d_nabla = (second
               - _dgamma_term(dgamma, value, rank)
               - _connection(gamma, first, rank, "k", "m", "mk"))
    nabla2 = (d_nabla
              - np.einsum(f"...zmk,...z{slots}->...mk{slots}", gamma, nabla)
              - _connection(gamma, nabla, rank, "m", "k", "mk"))
    nabla2_frame = from_tensor(to_frame(nabla2, frame, rank + 2), n, field.p, field.q).coeffs
    return nabla_frame, nabla2_frame


def _dgamma_term(dgamma: np.ndarray, tensor: np.ndarray, rank: int):
    """Σ_s ∂_m Γ^z_{k i_s} tensor[..., z at slot s, ...] as [m, k, slots]."""
    slots = _SLOTS[:rank]
    total = 0.0
    for s in range(rank):
        replaced = slots[:s] + "z" + slots[s + 1:]
        total = total + np.einsum(f"...mzk{slots[s]},...{replaced}->...mk{slots}", dgamma, tensor)
    return total


def _derivatives(field: FormField, x, order: int):
    pts, single = _as_points(x, field.n)
    nabla, nabla2 = _covariant_arrays(field, pts, order)
    if single:
        nabla = nabla[0]
        nabla2 = None if nabla2 is None else nabla2[0]
    return nabla, nabla2


def covariant_derivative(field: FormField, x) -> CovariantDerivative:
    nabla, _ = _derivatives(field, x, 1)
    return CovariantDerivative(field.n, field.p, field.q, nabla)


def second_covariant_derivative(field: FormField, x) -> CovariantDerivative:
    """coeffs[..., m, k, I, J] = (∇²_{e_m, e_k} ω)(e_I, e_J)."""
    _, nabla2 = _derivatives(field, x, 2)
    return CovariantDerivative(field.n, field.p, field.q, nabla2, order=2)


# --- Second Bianchi sums ---

@lru_cache(maxsize=None)
def _raise_table(n: int, p: int):
    """For every (p+1)-index K and slot j: direction k_j, position of K without k_j, sign (-1)^j (1-based)."""
    pos = _positions(n, p)
    uppers = basis(n, p + 1)
    direction = np.zeros((len(uppers), p + 1), dtype=np.intp)
    source = np.zeros((len(uppers), p + 1), dtype=np.intp)
    sign = np.zeros((len(uppers), p + 1))
    for a, K in enumerate(uppers):
        for j, kj in enumerate(K):
            direction[a, j] = kj
            source[a, j] = pos[K[:j] + K[j + 1:]]
            sign[a, j] = (-1) ** (j + 1)
    return direction, source, sign


def _d_from_nabla(nabla: np.ndarray, n: int, p: int, q: int) -> DoubleForm:
    if p + 1 > n:
        raise DegreeError(f"D raises the first degree past n={n}")
    direction, source, sign = _raise_table(n, p)
    gathered = nabla[..., direction, source, :]
    return DoubleForm(n, p + 1, q, np.einsum("...kjc,kj->...kc", gathered, sign))


def _dtilde_from_nabla(nabla: np.ndarray, n: int, p: int, q: int) -> DoubleForm:
    if q + 1 > n:
        raise DegreeError(f"D~ raises the second degree past n={n}")
    return transpose(_d_from_nabla(np.swapaxes(nabla, -1, -2), n, q, p))


def _second_sum(nabla2: np.ndarray, n: int, p: int, q: int, tilde_first: bool) -> DoubleForm:
    if p + 1 > n or q + 1 > n:
        raise DegreeError(f"Second Bianchi sums of ({p},{q}) forms overflow n={n}")
    rdir, rsrc, rsgn = _raise_table(n, p)
    cdir, csrc, csgn = _raise_table(n, q)
    outer = (rdir[:, None, :, None], cdir[None, :, None, :])
    first_dir, second_dir = (outer[1], outer[0]) if tilde_first else outer
    gathered = nabla2[..., first_dir, second_dir, rsrc[:, None, :, None], csrc[None, :, None, :]]
    sign = rsgn[:, None, :, None] * csgn[None, :, None, :]
    return DoubleForm(n, p + 1, q + 1, (gathered * sign).sum(axis=(-2, -1)))


def bianchi_D(field: FormField, x) -> DoubleForm:
    """(Dω)(x_1..x_{p+1}, y) = Σ_j (-1)^j (∇_{x_j} ω)(x_1..x̂_j..x_{p+1}, y)."""
    nabla, _ = _derivatives(field, x, 1)
    return _d_from_nabla(nabla, field.n, field.p, field.q)


def bianchi_Dtilde(field: FormField, x) -> DoubleForm:
    nabla, _ = _derivatives(field, x, 1)
    return _dtilde_from_nabla(nabla, field.n, field.p, field.q)


def bianchi_DDtilde(field: FormField, x) -> DoubleForm:
    _, nabla2 = _derivatives(field, x, 2)
    return _second_sum(nabla2, field.n, field.p, field.q, tilde_first=False)


def bianchi_DtildeD(field: FormField, x) -> DoubleForm:
    _, nabla2 = _derivatives(field, x, 2)
    return _second_sum(nabla2, field.n, field.p, field.q, tilde_first=True)


def hessian_operator(field: FormField, x) -> DoubleForm:
    """DD̃ + D̃D; on a scalar field DD̃ alone is the Hessian."""
    _, nabla2 = _derivatives(field, x, 2)
    n, p, q = field.n, field.p, field.q
    return _second_sum(nabla2, n, p, q, False) + _second_sum(nabla2, n, p, q, True)


# --- Divergences ---

@dataclass(frozen=True)
class DeltaResult:
    """δω and δ̃ω by definition (cD̃ + D̃c, cD + Dc) and by star conjugation."""
    delta: Optional[DoubleForm]
    delta_tilde: Optional[DoubleForm]
    delta_star: Optional[DoubleForm]
    delta_tilde_star: Optional[DoubleForm]

    @property
    def route_gap(self) -> float:
        gaps = [(a - b).max_abs() for a, b in ((self.delta, self.delta_star),
                                                (self.delta_tilde, self.delta_tilde_star)) if a is not None]
        return max(gaps, default=0.0)


def delta_star_sign(n: int, p: int, q: int) -> int:
    """δω = sign·*D*ω for ω of bidegree (p,q)."""
    return (-1) ** (n * (p + 1) + q * (n - q))


def _nabla_form(nabla: np.ndarray, n: int, p: int, q: int) -> DoubleForm:
    return DoubleForm(n, p, q, nabla)


def _delta_from_nabla(nabla: np.ndarray, n: int, p: int, q: int) -> Tuple[DoubleForm, DoubleForm]:
    """δω by definition and by star conjugation, from the frame-expressed ∇ω."""
    total = contract(_dtilde_from_nabla(nabla, n, p, q))
    if q >= 1:
        nabla_c = contract(_nabla_form(nabla, n, p, q)).coeffs
        total = total + _dtilde_from_nabla(nabla_c, n, p - 1, q - 1)
    nabla_star = hodge_star(_nabla_form(nabla, n, p, q)).coeffs
    starred = hodge_star(_d_from_nabla(nabla_star, n, n - p, n - q)) * delta_star_sign(n, p, q)
    return total, starred


def delta_ops(field: FormField, x) -> DeltaResult:
    """(δω, δ̃ω); δ needs p >= 1 and δ̃ needs q >= 1, otherwise the entry is None."""
    nabla, _ = _derivatives(field, x, 1)
    n, p, q = field.n, field.p, field.q
    delta = delta_star = delta_tilde = delta_tilde_star = None
    if p >= 1:
        delta, delta_star = _delta_from_nabla(nabla, n, p, q)
    if q >= 1:
        swapped, swapped_star = _delta_from_nabla(np.swapaxes(nabla, -1, -2), n, q, p)
        delta_tilde, delta_tilde_star = transpose(swapped), transpose(swapped_star)
    result = DeltaResult(delta, delta_tilde, delta_star, delta_tilde_star)
    logger.debug(f"delta routes for '{field.name}' differ by {result.route_gap:.3e}")
    return result


def delta_laplacian(field: FormField, x) -> DoubleForm:
    """δ̃δ + δδ̃ = (-1)^{n(p+q)} *(D̃D + DD̃)* , the formal adjoint of DD̃ + D̃D."""
    _, nabla2 = _derivatives(field, x, 2)
    n, p, q = field.n, field.p, field.q
    if p < 1 or q < 1:
        raise DegreeError(f"δ̃δ + δδ̃ needs p, q >= 1, got ({p},{q})")
    starred = hodge_star(DoubleForm(n, p, q, nabla2)).coeffs
    dd = _second_sum(starred, n, n - p, n - q, False) + _second_sum(starred, n, n - p, n - q, True)
    return hodge_star(dd) * (-1) ** (n * (p + q))


def exterior_derivative_fd(chart: MetricChart, components: Callable[[np.ndarray], np.ndarray], p: int,
                           x) -> DoubleForm:
    """dα of a p-form given by chart components, by finite differences, as a frame-expressed (p+1,0) form."""
    pts, single = _as_points(x, chart.dim)
    n = chart.dim
    if p + 1 > n:
        raise DegreeError(f"d of a {p}-form vanishes in dimension {n}")
    _, first, _ = evaluate_jets(lambda P: np.asarray(components(P), dtype=float), pts, order=1)
    d_alpha = sum((-1) ** s * np.moveaxis(first, 1, 1 + s) for s in range(p + 1))
    frame = orthonormal_frame(chart.metric(pts))
    out = from_tensor(to_frame(d_alpha, frame, p + 1), n, p + 1, 0)
    return out[0] if single else out
