"""
Curvature Invariants - Gauss-Bonnet curvatures, Lovelock tensors and (p,q)-curvatures of a curvature structure
"""

import logging
from dataclasses import dataclass
from math import factorial
from typing import Optional, Union

import numpy as np

import config
from core.double_forms import (
    BianchiStatus, CurvatureStructure, DoubleForm, FormLike, as_form, contract, contract_power,
    first_bianchi_residual, hodge_star, metric, metric_power, norm, power, primitive_decompose,
    sectional_value, wedge, zeros,
)
from utils.errors import DegreeError, NumericalBreakdownError

logger = logging.getLogger(__name__)

Scalar = Union[float, np.ndarray]


@dataclass(frozen=True)
class InvariantBundle:
    """h_2k, T_2k and the generalized Ricci contraction of one curvature structure."""
    n: int
    k: int
    h2k: Scalar
    T2k: CurvatureStructure
    generalized_ricci: CurvatureStructure


@dataclass(frozen=True)
class EinsteinDeviation:
    lambda_: Scalar
    residual: float
    omega1_norm: Optional[float]
    consistent: Optional[bool]


def _curvature_form(R: FormLike) -> DoubleForm:
    form = as_form(R)
    if form.bidegree != (2, 2):
        raise DegreeError(f"Expected a (2,2) curvature structure, got {form.bidegree}")
    if isinstance(R, CurvatureStructure):
        if R.bianchi_flag == BianchiStatus.VIOLATED:
            logger.warning("Curvature structure violates the first Bianchi identity; proceeding")
    else:
        residual = first_bianchi_residual(form)
        if residual > config.SYMMETRY_TOL * (1.0 + form.max_abs()):
            logger.warning(f"First Bianchi residual {residual:.3e} above tolerance; proceeding")
    return form


def _check_order(n: int, k: int):
    if int(k) != k or k < 1 or 2 * k > n:
        raise DegreeError(f"Order k={k} needs 2 <= 2k <= n={n}")


def _agree(first, second, label: str, tol: float = config.SOLVE_TOL):
    a, b = np.asarray(first, dtype=float), np.asarray(second, dtype=float)
    gap = float(np.max(np.abs(a - b))) if a.size else 0.0
    scale = 1.0 + float(np.max(np.abs(a))) if a.size else 1.0
    if gap > tol * scale:
        raise NumericalBreakdownError(f"{label}: the two formulas differ by {gap:.3e}")


def _scalar(value):
    return float(value) if np.ndim(value) == 0 else np.asarray(value)


def gauss_bonnet_curvature(R: FormLike, k: int) -> Scalar:
    """h_2k = *(g^{n-2k} R^k)/(n-2k)!, cross-checked against c^{2k} R^k/(2k)!."""
    form = _curvature_form(R)
    n = form.n
    _check_order(n, k)
    Rk = power(form, k)
    via_star = hodge_star(wedge(metric_power(n, n - 2 * k), Rk)).scalar() / factorial(n - 2 * k)
    via_contraction = contract_power(Rk, 2 * k).scalar() / factorial(2 * k)
    _agree(via_star, via_contraction, f"h_{2 * k}")
    return _scalar(via_star)


def generalized_ricci(R: FormLike, k: int) -> DoubleForm:
    """c^{2k-1} R^k / (2k-1)!."""
    form = _curvature_form(R)
    _check_order(form.n, k)
    return contract_power(power(form, k), 2 * k - 1) / factorial(2 * k - 1)


def lovelock_tensor(R: FormLike, k: int) -> CurvatureStructure:
    """T_2k = *(g^{n-2k-1} R^k)/(n-2k-1)!, cross-checked against h_2k g - c^{2k-1}R^k/(2k-1)!."""
    form = _curvature_form(R)
    n = form.n
    _check_order(n, k)
    h2k = gauss_bonnet_curvature(form, k)
    via_contraction = metric(n, form.batch_shape) * h2k - generalized_ricci(form, k)
    if 2 * k == n:
        _agree(via_contraction.coeffs, 0.0, f"T_{n} degenerate identity")
        return CurvatureStructure(zeros(n, 1, 1, form.batch_shape), BianchiStatus.VERIFIED)
    m = n - 2 * k - 1
    via_star = hodge_star(wedge(metric_power(n, m), power(form, k))) / factorial(m)
    _agree(via_star.coeffs, via_contraction.coeffs, f"T_{2 * k}")
    return CurvatureStructure(via_star, BianchiStatus.VERIFIED)


def invariant_bundle(R: FormLike, k: int) -> InvariantBundle:
    form = _curvature_form(R)
    T2k = lovelock_tensor(form, k)
    ricci_k = generalized_ricci(form, k)
    h2k = gauss_bonnet_curvature(form, k)
    _agree(contract(T2k.form).scalar(), (form.n - 2 * k) * np.asarray(h2k), "trace identity")
    return InvariantBundle(n=form.n, k=k, h2k=h2k, T2k=T2k,
                           generalized_ricci=CurvatureStructure(ricci_k))


def pq_curvature_tensor(R: FormLike, p: int, q: int) -> CurvatureStructure:
    """R_(p,q) = *(g^{n-2q-p} R^q)/(n-2q-p)!, a symmetric (p,p) structure."""
    form = _curvature_form(R)
    n = form.n
    if not (1 <= q and 2 * q <= n and 0 <= p <= n - 2 * q):
        raise DegreeError(f"(p,q)=({p},{q}) needs 1 <= q <= n/2 and 0 <= p <= n-2q for n={n}")
    m = n - 2 * q - p
    out = hodge_star(wedge(metric_power(n, m), power(form, q))) / factorial(m)
    return CurvatureStructure(out)


def sectional_pq_curvature(R: FormLike, p: int, q: int, plane=()) -> Scalar:
    """s_(p,q)(P): R_(p,q) on the unit p-vector of the plane P."""
    return sectional_value(pq_curvature_tensor(R, p, q), plane)


def scalar_curvature(R: FormLike) -> Scalar:
    return 2.0 * gauss_bonnet_curvature(R, 1)


def ricci(R: FormLike) -> DoubleForm:
    return contract(_curvature_form(R))


def curvature_operator_norm(R: FormLike) -> Scalar:
    return norm(_curvature_form(R))


def constant_curvature_h(n: int, k: int, kappa: float = 1.0) -> float:
    """h_2k of R = (κ/2)g²: (κ/2)^k n!/(n-2k)!."""
    _check_order(n, k)
    return (kappa / 2.0) ** k * factorial(n) / factorial(n - 2 * k)


def constant_curvature_T_factor(n: int, k: int, kappa: float = 1.0) -> float:
    """λ in T_2k = λ g for R = (κ/2)g²."""
    _check_order(n, k)
    return (n - 2 * k) * constant_curvature_h(n, k, kappa) / n


def einstein_deviation(R: FormLike, k: int, tol: float = config.EINSTEIN_TOL) -> EinsteinDeviation:
    """Distance of T_2k from λg, next to the (1,1) primitive component of R^k."""
    form = _curvature_form(R)
    n = form.n
    T2k = lovelock_tensor(form, k).form
    lam = contract(T2k).scalar() / n
    residual = (T2k - metric(n, form.batch_shape) * lam).max_abs()
    if n < 4 * k:
        logger.debug(f"n={n} < 4k={4 * k}: primitive decomposition of R^{k} unavailable")
        return EinsteinDeviation(lambda_=lam, residual=residual, omega1_norm=None, consistent=None)
    decomposition = primitive_decompose(power(form, k))
    omega1 = decomposition.components[2 * k - 1]
    omega1_norm = omega1.max_abs()
    threshold = tol * (1.0 + float(np.max(np.asarray(norm(form))))) ** k
    consistent = (residual <= threshold) == (omega1_norm <= threshold)
    return EinsteinDeviation(lambda_=lam, residual=residual, omega1_norm=omega1_norm,
                             consistent=bool(consistent))
