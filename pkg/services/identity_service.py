"""
Identity Service - Checks the double-form identities and the D / δ operator relations on seeded samples
"""

import logging
from itertools import product
from typing import Callable, Dict, List, Optional

import numpy as np

import config
from core.catalog import compile_chart, conformal_flat, flat_torus, sphere
from core.double_forms import (
    DoubleForm, basis, contract, contract_power, f_h, f_h_eigen, first_bianchi_residual, hodge_star, inner,
    metric, metric_mul, metric_power, power, primitive_decompose, to_tensor, wedge,
)
from core.geometry import (
    FormField, MetricChart, bianchi_D, bianchi_DDtilde, bianchi_Dtilde, bianchi_DtildeD, delta_laplacian, delta_ops,
    exterior_derivative_fd, exterior_form_field, hessian_operator, lovelock_field, metric_field, riemann_field,
    scalar_field, second_covariant_derivative,
)
from core.quadrature import QuadratureAtlas, l2_pair
from models.schemas import CheckRecord
from utils.errors import GBCError, NumericalBreakdownError
from utils.random_fields import named_rng, random_bianchi, random_double_form, random_symmetric
from services.variation_service import sample_points


def _gap(lhs, rhs) -> Dict[str, float]:
    a = np.asarray(lhs.coeffs if isinstance(lhs, DoubleForm) else lhs, dtype=float)
    b = np.asarray(rhs.coeffs if isinstance(rhs, DoubleForm) else rhs, dtype=float)
    gap = float(np.max(np.abs(a - b))) if a.size else 0.0
    scale = max(float(np.max(np.abs(a))) if a.size else 0.0, float(np.max(np.abs(b))) if b.size else 0.0)
    return {"max_gap": gap, "scale": scale, "rel_err": gap / (1.0 + scale)}


def degree_two_f_h_tensor(h: DoubleForm, omega: DoubleForm) -> np.ndarray:
    """F_h(ω)(x∧y, z∧u) from ω read as a (3,1) tensor: h(ω(x,y)z,u) - h(ω(x,y)u,z) + h(ω(z,u)x,y) - h(ω(z,u)y,x)."""
    W = to_tensor(omega)
    H = h.coeffs
    first = np.einsum("...xyzb,...bu->...xyzu", W, H)
    second = np.einsum("...xyub,...bz->...xyzu", W, H)
    third = np.einsum("...zuxb,...by->...xyzu", W, H)
    fourth = np.einsum("...zuyb,...bx->...xyzu", W, H)
    return first - second + third - fourth


def trig_coefficients(rng: np.random.Generator, n: int, p: int, q: int, modes: int = 2):
    """Coefficient function (N, n) -> (N, C(n,p), C(n,q)) built from a few integer Fourier modes."""
    shape = (len(basis(n, p)), len(basis(n, q)))
    waves = rng.integers(-1, 2, size=(modes, n))
    cosines = rng.standard_normal((modes,) + shape)
    sines = rng.standard_normal((modes,) + shape)
    constant = rng.standard_normal(shape)

    def coefficients(pts):
        phase = pts @ waves.T
        return (constant + np.einsum("nm,mij->nij", np.cos(phase), cosines)
                + np.einsum("nm,mij->nij", np.sin(phase), sines))

    return coefficients


def frame_field(chart: MetricChart, p: int, q: int, coefficients: Callable, name: str) -> FormField:
    """Field with the given frame coefficients; on a flat torus the frame is the coordinate frame."""
    n = chart.dim
    return FormField(chart, p, q, lambda pts: DoubleForm(n, p, q, coefficients(pts)), name=name)


class IdentityService:
    """Service for the fiber identity suite and the differential-operator suite."""

    def __init__(self, seed: int = config.DEFAULT_SEED, trials: int = config.IDENTITY_TRIALS,
                 tolerance: float = config.SOLVE_TOL, operator_tolerance: float = config.OPERATOR_TOL):
        self.seed = seed
        self.trials = trials
        self.tolerance = tolerance
        self.operator_tolerance = operator_tolerance

    def _record(self, name: str, anchor: str, lhs, rhs, provenance: Dict[str, str],
                tolerance: Optional[float] = None, relative: bool = True) -> CheckRecord:
        tolerance = self.tolerance if tolerance is None else tolerance
        values = _gap(lhs, rhs)
        measure = values["rel_err"] if relative else values["max_gap"]
        record = CheckRecord(name=name, anchor=anchor, values=values, tolerance=tolerance,
                             passed=measure <= tolerance, provenance=provenance)
        if not record.passed:
            logging.warning(f"❌ {name}: gap {values['max_gap']:.3e} (scale {values['scale']:.3e})")
        return record

    def _merge(self, records: List[CheckRecord]) -> CheckRecord:
        """Fold per-bidegree records of one identity into a single record holding the worst case."""
        worst = max(records, key=lambda r: r.values["rel_err"])
        return worst.model_copy(update={
            "passed": all(r.passed for r in records),
            "values": dict(worst.values, cases=float(len(records))),
        })

    # --- Fiber identities ---

    def fiber_suite(self, n: int) -> List[CheckRecord]:
        """Every fiber identity over `trials` random samples and all admissible bidegrees in dimension n."""
        rng = named_rng(self.seed, f"fiber:{n}")
        batch = (self.trials,)
        checks: Dict[str, List[CheckRecord]] = {}

        def add(record: CheckRecord):
            checks.setdefault(record.name, []).append(record)

        for p, q in product(range(n + 1), repeat=2):
            omega = random_double_form(rng, n, p, q, batch)
            theta = random_double_form(rng, n, p, q, batch)
            sign = (-1) ** ((p + q) * (n - p - q))
            add(self._record("double-star", "**ω = (-1)^{(p+q)(n-p-q)} ω",
                             hodge_star(hodge_star(omega)), omega * sign, {"lhs": "star twice", "rhs": "signed input"}))
            add(self._record("inner-star", "⟨ω,θ⟩ = *(ω·*θ) = ±*(*ω·θ)",
                             hodge_star(wedge(omega, hodge_star(theta))).coeffs[..., 0, 0],
                             inner(omega, theta), {"lhs": "star of top-degree product", "rhs": "coefficient dot product"}))
            add(self._record("inner-star", "⟨ω,θ⟩ = *(ω·*θ) = ±*(*ω·θ)",
                             hodge_star(wedge(hodge_star(omega), theta)).coeffs[..., 0, 0] * sign,
                             inner(omega, theta), {"lhs": "signed star of reversed product", "rhs": "coefficient dot product"}))
            if p <= n - 1 and q <= n - 1:
                add(self._record("metric-multiplication", "gω = (-1)^{n(p+q)} *c*ω",
                                 metric_mul(omega), hodge_star(contract(hodge_star(omega))) * (-1) ** (n * (p + q)),
                                 {"lhs": "shuffle product with g", "rhs": "star, contract, star"}))
                upper = random_double_form(rng, n, p + 1, q + 1, batch)
                add(self._record("contraction-adjoint", "⟨gω₁, ω₂⟩ = ⟨ω₁, cω₂⟩",
                                 inner(metric_mul(omega), upper), inner(omega, contract(upper)),
                                 {"lhs": "product with g", "rhs": "contraction"}))

        for r, s in product(range(n + 1), repeat=2):
            for p, q in ((1, 1), (2, 1), (1, 2), (2, 2)):
                if p + r > n or q + s > n:
                    continue
                omega = random_double_form(rng, n, p, q, batch)
                theta = random_double_form(rng, n, r, s, batch)
                add(self._record("graded-commutativity", "ω·θ = (-1)^{pr+qs} θ·ω",
                                 wedge(omega, theta), wedge(theta, omega) * (-1) ** (p * r + q * s),
                                 {"lhs": "ω·θ", "rhs": "signed θ·ω"}))
                if p + r + 1 <= n and q + s + 1 <= n:
                    xi = random_double_form(rng, n, 1, 1, batch)
                    add(self._record("associativity", "(ω·θ)·ξ = ω·(θ·ξ)",
                                     wedge(wedge(omega, theta), xi), wedge(omega, wedge(theta, xi)),
                                     {"lhs": "left grouping", "rhs": "right grouping"}))

        for m in range(1, n + 1):
            add(self._record("metric-power-contraction", "c(g^m) = m(n-m+1) g^{m-1}",
                             contract(metric_power(n, m)), metric_power(n, m - 1) * (m * (n - m + 1)),
                             {"lhs": "contraction", "rhs": "closed form"}))

        for record in self._f_h_checks(rng, n, batch):
            add(record)

        for p in (1, 2):
            if n < 2 * p:
                continue
            omega = random_symmetric(rng, n, p, batch)
            decomposition = primitive_decompose(omega)
            add(self._record("primitive-reassembly", "ω = Σ_j g^j ω_j with c ω_j = 0",
                             decomposition.reassemble(), omega, {"lhs": "reassembled", "rhs": "input"}))
            add(self._record("primitive-traceless", "c ω_j = 0",
                             decomposition.traceless_residual(), 0.0, {"lhs": "max |c ω_j|", "rhs": "zero"}))

        merged = [self._merge(records) for records in checks.values()]
        passed = sum(r.passed for r in merged)
        logging.info(f"{'✅' if passed == len(merged) else '❌'} fiber identities n={n}: {passed}/{len(merged)} passed")
        return merged

    def _f_h_checks(self, rng: np.random.Generator, n: int, batch) -> List[CheckRecord]:
        records = []
        g = metric(n, batch)
        for p in range(1, n + 1):
            h = random_symmetric(rng, n, 1, batch)
            omega = random_symmetric(rng, n, p, batch)
            theta = random_symmetric(rng, n, p, batch)
            records.append(self._record("f_h-eigenbasis", "F_h via derivation = F_h via an eigenbasis of h",
                                        f_h(h, omega), f_h_eigen(h, omega),
                                        {"lhs": "derivation extension", "rhs": "eigenvalue sums"}))
            records.append(self._record("f_h-self-adjoint", "⟨F_h ω, θ⟩ = ⟨ω, F_h θ⟩",
                                        inner(f_h(h, omega), theta), inner(omega, f_h(h, theta)),
                                        {"lhs": "F_h on the left", "rhs": "F_h on the right"}))
            records.append(self._record("f_h-metric", "F_g ω = 2p ω", f_h(g, omega), omega * (2 * p),
                                        {"lhs": "F_g", "rhs": "scaled input"}))
            records.append(self._record("f_h-metric-power", "F_h(g^p) = 2p g^{p-1} h",
                                        f_h(h, metric_power(n, p)), wedge(metric_power(n, p - 1), h) * (2 * p),
                                        {"lhs": "F_h of g^p", "rhs": "closed form"}))
            records.append(self._record("f_h-full-trace", "c^p F_h(ω) = 2p ⟨c^{p-1} ω, h⟩",
                                        contract_power(f_h(h, omega), p).coeffs[..., 0, 0],
                                        inner(contract_power(omega, p - 1), h) * (2 * p),
                                        {"lhs": "full contraction", "rhs": "pairing with h"}))
            for r in range(1, n - p + 1):
                xi = random_symmetric(rng, n, r, batch)
                records.append(self._record("f_h-derivation", "F_h(ω·θ) = F_h(ω)·θ + ω·F_h(θ)",
                                            f_h(h, wedge(omega, xi)),
                                            wedge(f_h(h, omega), xi) + wedge(omega, f_h(h, xi)),
                                            {"lhs": "F_h of the product", "rhs": "Leibniz sum"}))
            if 2 * p <= n:
                records.append(self._record("f_h-power-rule", "F_h(ω^2) = 2 ω F_h(ω)",
                                            f_h(h, power(omega, 2)), wedge(omega, f_h(h, omega)) * 2,
                                            {"lhs": "F_h of the square", "rhs": "power rule"}))
        h = random_symmetric(rng, n, 1, batch)
        k = random_symmetric(rng, n, 1, batch)
        records.append(self._record("f_h-operator-product", "F_h(k) = h∘k + k∘h on (1,1) forms",
                                    f_h(h, k), h.coeffs @ k.coeffs + k.coeffs @ h.coeffs,
                                    {"lhs": "F_h", "rhs": "matrix anticommutator"}))
        top = random_symmetric(rng, n, n, batch)
        records.append(self._record("f_h-top-degree", "F_h(ω) = 2 tr(h) ω for ω of degree n",
                                    f_h(h, top), top * (2 * contract(h).coeffs[..., 0, 0]),
                                    {"lhs": "F_h", "rhs": "trace multiple"}))
        if n >= 2:
            omega = random_symmetric(rng, n, 2, batch)
            records.append(self._record("f_h-degree-two", "F_h(ω)(x∧y,z∧u) from ω as a (3,1) tensor",
                                        to_tensor(f_h(h, omega)), degree_two_f_h_tensor(h, omega),
                                        {"lhs": "F_h", "rhs": "four-term tensor formula"}))
        if n >= 3:
            bianchi = random_bianchi(rng, n, 2, batch=batch)
            records.append(self._record("f_h-bianchi", "F_h preserves the first Bianchi identity",
                                        first_bianchi_residual(f_h(h, bianchi)), 0.0,
                                        {"lhs": "Bianchi residual of F_h(ω)", "rhs": "zero"}))
        return records

    # --- Differential operators ---

    def operator_suite(self, points: int = 3, quad_order: int = 6) -> List[CheckRecord]:
        """Second Bianchi identities, divergence-free Lovelock tensors, δ routes, D = -d and L² adjointness."""
        records: List[CheckRecord] = []
        tol = self.operator_tolerance
        rng = named_rng(self.seed, "operators")
        curved = compile_chart(conformal_flat(3))
        round_sphere = compile_chart(sphere(3))
        for chart in (round_sphere, curved):
            pts = sample_points(chart, points, rng)
            records.append(self._guard(lambda: self._record(
                f"D-metric:{chart.name}", "D g = 0", bianchi_D(metric_field(chart), pts), 0.0,
                {"lhs": "D of the metric field", "rhs": "zero"}, tol, relative=False)))
            records.append(self._guard(lambda: self._record(
                f"D-riemann:{chart.name}", "D R = D̃ R = 0",
                bianchi_D(riemann_field(chart), pts).max_abs() + bianchi_Dtilde(riemann_field(chart), pts).max_abs(),
                0.0, {"lhs": "second Bianchi sums of R", "rhs": "zero"}, tol, relative=False)))
            records.append(self._guard(lambda: self._record(
                f"delta-lovelock:{chart.name}", "δ T_2 = 0",
                delta_ops(lovelock_field(chart, 1), pts).delta, 0.0,
                {"lhs": "δ of the Lovelock field", "rhs": "zero"}, tol, relative=False)))
            records.append(self._guard(lambda: self._record(
                f"delta-routes:{chart.name}", "δ = cD̃ + D̃c = ±*D*",
                delta_ops(riemann_field(chart), pts).route_gap, 0.0,
                {"lhs": "definition vs star conjugation", "rhs": "zero"}, tol, relative=False)))

        pts = sample_points(curved, points, rng)
        waves = rng.integers(-1, 2, size=(3, 3))
        amplitudes = rng.standard_normal(3)

        def one_form(P):
            return np.sin(P @ waves.T) * amplitudes

        alpha = exterior_form_field(curved, one_form, 1, name="alpha")
        records.append(self._guard(lambda: self._record(
            "D-exterior", "D α = -dα on (1,0) forms", bianchi_D(alpha, pts),
            exterior_derivative_fd(curved, one_form, 1, pts) * -1.0,
            {"lhs": "second Bianchi sum", "rhs": "exterior derivative"}, tol)))

        f = scalar_field(curved, lambda P: np.sin(P[:, 0]) * np.cos(P[:, 1]) + np.cos(P[:, 2]), name="f")

        def hessian_check():
            hess = second_covariant_derivative(f, pts).coeffs[..., 0, 0]
            lhs = np.concatenate([bianchi_DDtilde(f, pts).coeffs, bianchi_DtildeD(f, pts).coeffs])
            return self._record("hessian-scalar", "DD̃ f = D̃D f = ∇²f", lhs, np.concatenate([hess, hess]),
                                {"lhs": "second Bianchi sums", "rhs": "second covariant derivative"}, tol)

        records.append(self._guard(hessian_check))
        records.extend(self._adjointness(rng, quad_order))
        return records

    def _adjointness(self, rng: np.random.Generator, quad_order: int) -> List[CheckRecord]:
        torus = compile_chart(flat_torus(3))
        atlas = QuadratureAtlas.build(torus, quad_order)
        tol = config.CURVATURE_VARIATION_TOL * 0.1
        omega = frame_field(torus, 1, 1, trig_coefficients(rng, 3, 1, 1), "omega")
        theta = frame_field(torus, 2, 1, trig_coefficients(rng, 3, 2, 1), "theta")
        xi = frame_field(torus, 2, 2, trig_coefficients(rng, 3, 2, 2), "xi")
        zeta = frame_field(torus, 1, 2, trig_coefficients(rng, 3, 1, 2), "zeta")

        def first_order():
            d_omega = FormField(torus, 2, 1, lambda P: bianchi_D(omega, P), name="D omega")
            delta_theta = FormField(torus, 1, 1, lambda P: delta_ops(theta, P).delta, name="delta theta")
            return self._record("adjoint-D", "∫⟨Dω, θ⟩ = -∫⟨ω, δθ⟩",
                                l2_pair(atlas, d_omega, theta), -l2_pair(atlas, omega, delta_theta),
                                {"lhs": "D then pair", "rhs": "pair with -δ"}, tol)

        def first_order_tilde():
            dt_omega = FormField(torus, 1, 2, lambda P: bianchi_Dtilde(omega, P), name="D~ omega")
            delta_zeta = FormField(torus, 1, 1, lambda P: delta_ops(zeta, P).delta_tilde, name="delta~ zeta")
            return self._record("adjoint-Dtilde", "∫⟨D̃ω, ζ⟩ = -∫⟨ω, δ̃ζ⟩",
                                l2_pair(atlas, dt_omega, zeta), -l2_pair(atlas, omega, delta_zeta),
                                {"lhs": "D̃ then pair", "rhs": "pair with -δ̃"}, tol)

        def second_order():
            lhs = atlas.integrate(lambda P: inner(hessian_operator(omega, P), xi.evaluator(P)))
            rhs = atlas.integrate(lambda P: inner(omega.evaluator(P), delta_laplacian(xi, P)))
            return self._record("adjoint-DDtilde", "∫⟨(DD̃ + D̃D)ω, ξ⟩ = ∫⟨ω, (δ̃δ + δδ̃)ξ⟩", lhs, rhs,
                                {"lhs": "DD̃ + D̃D then pair", "rhs": "pair with δ̃δ + δδ̃"}, tol)

        def composition():
            pts = sample_points(torus, 2, rng)
            delta_xi = FormField(torus, 1, 2, lambda P: delta_ops(xi, P).delta, name="delta xi")
            delta_tilde_xi = FormField(torus, 2, 1, lambda P: delta_ops(xi, P).delta_tilde, name="delta~ xi")
            composed = delta_ops(delta_xi, pts).delta_tilde + delta_ops(delta_tilde_xi, pts).delta
            return self._record("delta-laplacian-composition", "δ̃δ + δδ̃ = (-1)^{n(p+q)} *(D̃D + DD̃)*",
                                delta_laplacian(xi, pts), composed,
                                {"lhs": "star, second Bianchi sums, star", "rhs": "δ̃ of δξ plus δ of δ̃ξ"},
                                config.CURVATURE_VARIATION_TOL)

        return [self._guard(first_order), self._guard(first_order_tilde), self._guard(second_order),
                self._guard(composition)]

    def _guard(self, check: Callable[[], CheckRecord]) -> CheckRecord:
        try:
            return check()
        except NumericalBreakdownError as e:
            return CheckRecord(name="operator-check", anchor="numerical breakdown", passed=False,
                               error=str(e), breakdown=True)
        except GBCError as e:
            return CheckRecord(name="operator-check", anchor="library error", passed=False, error=str(e))
