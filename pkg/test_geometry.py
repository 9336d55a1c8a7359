#!/usr/bin/env python3
"""
Test script for charts, curvature and the differential operators.

Uses the metric catalog: round spheres, flat tori and a conformally flat
torus whose Gauss curvature is known in closed form.
"""

import sys

import numpy as np
import pytest
import sympy as sp

# Add the current directory to the path so we can import our modules
sys.path.insert(0, '.')

from core.catalog import (
    MetricDeformation,
    compile_chart,
    compile_scalar,
    conformal_flat,
    dimension_of,
    flat_torus,
    from_spec,
    perturbed_sphere,
    product,
    sphere,
)
from core.double_forms import metric_power
from core.geometry import (
    FormField,
    bianchi_D,
    christoffel,
    covariant_derivative,
    delta_laplacian,
    delta_ops,
    delta_star_sign,
    exterior_derivative_fd,
    exterior_form_field,
    frame_and_coframe,
    lovelock_field,
    metric_field,
    orthonormal_frame,
    pq_curvature_field,
    riemann,
    riemann_field,
    scalar_field,
    second_covariant_derivative,
)
from core.invariants import gauss_bonnet_curvature, lovelock_tensor
from core.quadrature import QuadratureAtlas, excluded_fraction
from services.identity_service import IdentityService, frame_field, trig_coefficients
from services.variation_service import sample_points
from utils.errors import DegreeError, NumericalBreakdownError
from utils.random_fields import named_rng


def test_round_sphere_curvature():
    """S^n(r) has R = g²/(2r²)."""
    print("Testing round-sphere curvature...")
    rng = named_rng(0, "test-sphere")
    for n, r in ((2, 1.0), (3, 1.0), (4, 2.0)):
        chart = compile_chart(sphere(n, r))
        pts = sample_points(chart, 4, rng)
        R = riemann(chart, pts).form
        expected = metric_power(n, 2).coeffs * (0.5 / r ** 2)
        assert np.allclose(R.coeffs, expected, atol=1e-9)
    print("✅ Round-sphere curvature tests passed")


def test_christoffel_symbols_of_two_sphere():
    """dθ² + sin²θ dφ²: Γ^θ_φφ = -sinθ cosθ and Γ^φ_θφ = cotθ."""
    chart = compile_chart(sphere(2))
    theta = 0.7
    gamma = christoffel(chart, np.array([theta, 1.3]))
    assert gamma.shape == (2, 2, 2)
    assert gamma[0, 1, 1] == pytest.approx(-np.sin(theta) * np.cos(theta))
    assert gamma[1, 0, 1] == pytest.approx(np.cos(theta) / np.sin(theta))
    assert gamma[1, 1, 0] == pytest.approx(gamma[1, 0, 1])
    assert gamma[0, 0, 0] == pytest.approx(0.0, abs=1e-12)


def test_covariant_derivatives():
    chart = compile_chart(perturbed_sphere(3, 1.0, 0.1, seed=2))
    pts = sample_points(chart, 2, named_rng(5, "test-nabla"))
    nabla_g = covariant_derivative(metric_field(chart), pts)
    assert nabla_g.max_abs() < 1e-6
    assert nabla_g.along(np.ones(3)).max_abs() < 1e-6

    f = scalar_field(chart, lambda P: np.cos(P[:, 0]) + np.sin(P[:, 1]) * np.cos(P[:, 2]))
    hess = second_covariant_derivative(f, pts)
    assert hess.coeffs.shape == (2, 3, 3, 1, 1)
    assert np.allclose(hess.component(0, 1).coeffs, hess.component(1, 0).coeffs, atol=1e-5)
    with pytest.raises(DegreeError):
        hess.along(np.ones(3))


def test_pq_curvature_field_on_round_sphere():
    """The (0,1) curvature of S³ is the constant h_2 = 3."""
    chart = compile_chart(sphere(3))
    pts = sample_points(chart, 3, named_rng(6, "test-pq"))
    values = pq_curvature_field(chart, 0, 1)(pts)
    assert values.bidegree == (0, 0)
    assert np.allclose(values.coeffs[..., 0, 0], 3.0, atol=1e-9)


def test_flat_torus_and_product_curvature():
    rng = named_rng(0, "test-flat")
    torus = compile_chart(flat_torus(3))
    assert riemann(torus, sample_points(torus, 3, rng)).form.max_abs() < 1e-14

    chart = compile_chart(product(sphere(2), flat_torus(2)))
    R = riemann(chart, sample_points(chart, 2, rng)).form
    # only the sphere plane (12,12) is curved; the frame keeps the factor order
    assert R.value((1, 2), (1, 2)) == pytest.approx(np.ones(2), abs=1e-9)
    assert abs(R.coeffs).sum() == pytest.approx(2.0, abs=1e-8)


def test_conformal_torus_gauss_curvature():
    """K = -e^{-2u} Δu for e^{2u}δ on T²."""
    chart = compile_chart(conformal_flat(2))
    pts = np.array([[0.3, 1.2], [2.0, 4.5], [5.1, 0.7]])
    x, y = pts[:, 0], pts[:, 1]
    u = 0.1 * np.cos(x) + 0.05 * np.cos(x + y + 0.3)
    laplacian = -0.1 * np.cos(x) - 0.1 * np.cos(x + y + 0.3)
    expected = -np.exp(-2 * u) * laplacian
    assert np.allclose(riemann(chart, pts).form.value((1, 2), (1, 2)), expected, atol=1e-9)


def test_frames_are_orthonormal():
    chart = compile_chart(perturbed_sphere(3, 1.0, 0.1, seed=4))
    pts = sample_points(chart, 5, named_rng(0, "test-frames"))
    g = chart.metric(pts)
    E, M = frame_and_coframe(g, order=[2, 0, 1])
    identity = np.broadcast_to(np.eye(3), g.shape)
    assert np.allclose(np.swapaxes(E, -1, -2) @ g @ E, identity)
    assert np.allclose(E @ np.swapaxes(M, -1, -2), identity)
    assert np.allclose(np.swapaxes(orthonormal_frame(g), -1, -2) @ g @ orthonormal_frame(g), identity)


def test_chart_guards():
    chart = compile_chart(sphere(2))
    with pytest.raises(NumericalBreakdownError):
        chart.metric(np.array([4.0, 1.0]))
    with pytest.raises(NumericalBreakdownError):
        frame_and_coframe(np.array([[1.0, 2.0], [2.0, 1.0]]))
    with pytest.raises(DegreeError):
        sphere(1)


def test_catalog_lookup():
    params = {"factors": [{"id": "sphere", "params": {"n": 3}}, {"id": "flat_torus", "params": {"n": 3}}]}
    symbols = from_spec("product", params)
    assert symbols.name == "S3xT3"
    assert symbols.dim == dimension_of("product", params) == 6
    assert symbols.periodic == (False, False, True, True, True, True)
    with pytest.raises(DegreeError):
        from_spec("hyperbolic", {})


def test_deformation_family():
    base = sphere(2)
    f = sp.cos(base.coords[0])
    deformation = MetricDeformation.conformal(base, f)
    pts = np.array([[0.7, 1.0], [2.1, 3.3]])
    g0 = compile_chart(base).metric(pts)
    gt = deformation.chart_at(0.2).metric(pts)
    factor = 1.0 + 0.2 * np.cos(pts[:, 0])
    assert np.allclose(gt, g0 * factor[:, None, None])
    assert np.allclose(deformation.factor_fn(pts), np.cos(pts[:, 0]))
    shifted = deformation.shifted(0.5)
    assert np.allclose(shifted.factor_fn(pts), np.cos(pts[:, 0]) - 0.5)
    assert shifted.conformal_factor is not None
    general = MetricDeformation.general(base, 2 * base.metric).shifted(2.0)
    assert general.factor_fn is None
    assert np.allclose(general.direction_fn(pts), 0.0)
    assert np.allclose(compile_scalar(base, f)(pts), np.cos(pts[:, 0]))


def test_quadrature_volumes():
    """vol(S²) = 4π and vol(S³) = 2π², less the excised polar caps."""
    s2 = QuadratureAtlas.build(compile_chart(sphere(2)), order=16)
    assert s2.volume() == pytest.approx(4 * np.pi, rel=1e-5)
    assert s2.excluded_measure == pytest.approx(excluded_fraction(1, s2.pole_margin))
    s3 = QuadratureAtlas.build(compile_chart(sphere(3)), order=12)
    assert s3.volume() == pytest.approx(2 * np.pi ** 2, rel=1e-5)
    torus = QuadratureAtlas.build(compile_chart(flat_torus(2, [1.0, 3.0])), order=4)
    assert torus.volume() == pytest.approx(3.0)
    assert torus.mean(lambda pts: np.cos(2 * np.pi * pts[:, 0]) + 2.0) == pytest.approx(2.0)


def test_second_bianchi_and_divergence_free_lovelock():
    rng = named_rng(1, "test-operators")
    for chart in (compile_chart(sphere(3)), compile_chart(conformal_flat(3))):
        pts = sample_points(chart, 2, rng)
        assert bianchi_D(metric_field(chart), pts).max_abs() < 1e-6
        assert bianchi_D(riemann_field(chart), pts).max_abs() < 1e-6
        result = delta_ops(lovelock_field(chart, 1), pts)
        assert result.delta.max_abs() < 1e-6
        assert result.route_gap < 1e-6


def test_D_is_minus_exterior_derivative():
    chart = compile_chart(conformal_flat(3))
    pts = sample_points(chart, 3, named_rng(2, "test-d"))

    def components(P):
        return np.stack([np.sin(P[:, 1]), np.cos(P[:, 0] + P[:, 2]), np.sin(P[:, 0]) * np.cos(P[:, 1])], axis=-1)

    alpha = exterior_form_field(chart, components, 1)
    lhs = bianchi_D(alpha, pts)
    rhs = exterior_derivative_fd(chart, components, 1, pts) * -1.0
    assert np.allclose(lhs.coeffs, rhs.coeffs, atol=1e-6)


def test_delta_star_sign_values():
    """(-1)^{n(p+1)+q(n-q)}: (-1)^q for even n, (-1)^{p+1} for odd n."""
    expected = {(2, 1, 1): -1, (3, 1, 0): 1, (3, 1, 1): 1, (3, 2, 0): -1, (3, 2, 1): -1,
                (4, 1, 0): 1, (4, 2, 1): -1, (5, 2, 2): -1, (6, 3, 2): 1}
    for (n, p, q), sign in expected.items():
        assert delta_star_sign(n, p, q) == sign, (n, p, q)
    for n in range(2, 7):
        for p in range(1, n + 1):
            for q in range(0, n + 1):
                closed = (-1) ** (p + 1) if n % 2 else (-1) ** q
                assert delta_star_sign(n, p, q) == closed


def test_delta_laplacian_matches_composition():
    """δ̃δ + δδ̃ in closed form equals δ̃ applied to δξ plus δ applied to δ̃ξ."""
    torus = compile_chart(flat_torus(3))
    rng = named_rng(4, "test-delta-laplacian")
    pts = sample_points(torus, 3, rng)
    for p, q in ((2, 2), (1, 2), (2, 1)):
        xi = frame_field(torus, p, q, trig_coefficients(rng, 3, p, q), "xi")
        delta_xi = FormField(torus, p - 1, q, lambda P: delta_ops(xi, P).delta, name="delta xi")
        delta_tilde_xi = FormField(torus, p, q - 1, lambda P: delta_ops(xi, P).delta_tilde, name="delta~ xi")
        composed = delta_ops(delta_xi, pts).delta_tilde + delta_ops(delta_tilde_xi, pts).delta
        closed = delta_laplacian(xi, pts)
        assert closed.bidegree == composed.bidegree == (p - 1, q - 1)
        assert np.allclose(closed.coeffs, composed.coeffs, atol=1e-4 * (1.0 + closed.max_abs()))


def test_invariants_do_not_depend_on_frame_order():
    chart = compile_chart(perturbed_sphere(4, 1.0, 0.1, seed=3))
    pts = sample_points(chart, 3, named_rng(7, "test-frame-order"))
    R = riemann(chart, pts)
    h2, h4 = np.asarray(gauss_bonnet_curvature(R, 1)), np.asarray(gauss_bonnet_curvature(R, 2))
    T2 = lovelock_tensor(R, 1).form
    for order in ([3, 2, 1, 0], [1, 0, 3, 2], [2, 0, 3, 1]):
        R_perm = riemann(chart, pts, order=order)
        assert np.allclose(np.asarray(gauss_bonnet_curvature(R_perm, 1)), h2, atol=1e-10)
        assert np.allclose(np.asarray(gauss_bonnet_curvature(R_perm, 2)), h4, atol=1e-10)
        T2_perm = lovelock_tensor(R_perm, 1).form
        assert np.allclose(np.linalg.norm(T2_perm.coeffs, axis=(-2, -1)),
                           np.linalg.norm(T2.coeffs, axis=(-2, -1)), atol=1e-10)


def test_fiber_suites_pass_in_every_dimension():
    service = IdentityService(seed=11, trials=100)
    for n in (3, 4, 5, 6):
        records = service.fiber_suite(n)
        assert records
        assert all(record.passed for record in records), (n, [r.name for r in records if not r.passed])


def test_identity_suites_pass():
    service = IdentityService(seed=3, trials=4)
    fiber = service.fiber_suite(4)
    assert fiber and all(record.passed for record in fiber)
    operators = service.operator_suite(points=2)
    assert not any(record.breakdown for record in operators)
    assert all(record.passed for record in operators), [r.name for r in operators if not r.passed]


def main():
    """Run all tests."""
    print("🧪 Testing Charts, Curvature and Operators")
    print("=" * 50)

    try:
        test_round_sphere_curvature()
        test_christoffel_symbols_of_two_sphere()
        test_covariant_derivatives()
        test_pq_curvature_field_on_round_sphere()
        test_flat_torus_and_product_curvature()
        test_conformal_torus_gauss_curvature()
        test_frames_are_orthonormal()
        test_chart_guards()
        test_catalog_lookup()
        test_deformation_family()
        test_quadrature_volumes()
        test_second_bianchi_and_divergence_free_lovelock()
        test_D_is_minus_exterior_derivative()
        test_delta_star_sign_values()
        test_delta_laplacian_matches_composition()
        test_invariants_do_not_depend_on_frame_order()
        test_fiber_suites_pass_in_every_dimension()
        test_identity_suites_pass()

        print("=" * 50)
        print("🎉 All tests passed! Geometry layer is working correctly.")

    except Exception as e:
        print(f"❌ Test failed: {e}")
        import traceback
        traceback.print_exc()
        sys.exit(1)


if __name__ == "__main__":
    main()
