#!/usr/bin/env python3
"""
Test script for integrated invariants and their first variations.

Finite-difference derivatives of H_2k along metric deformations are compared
with the closed-form pairings on round spheres and flat tori.
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
    conformal_flat,
    flat_torus,
    perturbed_sphere,
    product,
    sphere,
)
from services.variation_service import VariationService
from utils.errors import DegreeError
from utils.numerics import central_difference, five_point_derivative, relative_error, richardson
from utils.random_fields import named_rng, random_harmonic_expr, random_symmetric_expr


def test_difference_helpers():
    print("Testing finite-difference helpers...")
    assert central_difference(lambda t: t ** 2 + 3 * t, 0.1) == pytest.approx(3.0)
    assert five_point_derivative(lambda t: np.array([np.exp(t), t ** 4]), 1e-2) == pytest.approx([1.0, 0.0], abs=1e-8)
    coarse = central_difference(np.sin, 0.1)
    fine = central_difference(np.sin, 0.05)
    assert abs(richardson(coarse, fine) - 1.0) < abs(fine - 1.0) / 100
    assert relative_error(1.0, 1.001) == pytest.approx(0.001 / 1.001)
    assert relative_error(0.0, 1e-12, floor=1.0) == pytest.approx(1e-12)
    print("✅ Finite-difference helper tests passed")


def test_integrated_invariants():
    """H_2(S²) = 4π, H_2(S³) = 3·vol(S³), and the flat torus integrates to zero."""
    service = VariationService(quad_order=16)
    s2 = service.atlas_for(compile_chart(sphere(2)))
    assert service.integrate_invariant(s2, 1) == pytest.approx(4 * np.pi, rel=1e-6)
    s3 = service.atlas_for(compile_chart(sphere(3)), order=10)
    assert service.integrate_invariant(s3, 1) == pytest.approx(3 * service.volume(s3), rel=1e-9)
    torus = service.atlas_for(compile_chart(flat_torus(2)), order=4)
    assert service.integrate_invariant(torus, 1) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(DegreeError):
        service.integrate_invariant(s2, 2)


def test_main_theorem_along_the_metric():
    """H_2((1+t)g) on S³ grows like (1+t)^{1/2}."""
    service = VariationService(quad_order=8)
    deformation = MetricDeformation.metric_direction(sphere(3))
    report = service.verify_main_theorem(deformation, 1)
    assert report.passed
    assert report.fd_value == pytest.approx(0.5 * report.extras["H2k"], rel=1e-6)


def test_main_theorem_along_random_direction():
    base = sphere(3)
    h = random_symmetric_expr(named_rng(0, "test-main"), base, scale=0.3)
    service = VariationService(quad_order=8)
    report = service.verify_main_theorem(MetricDeformation.general(base, h, label="random h"), 1)
    assert report.passed, report
    assert report.rel_err < 1e-3


MAIN_THEOREM_CASES = [
    ("S2-random", lambda: sphere(2), 1, "random", 12),
    ("S3-metric", lambda: sphere(3), 1, "metric", 8),
    ("S3-random", lambda: sphere(3), 1, "random", 8),
    ("S3-conformal", lambda: sphere(3), 1, "conformal", 8),
    ("S3r2-random", lambda: sphere(3, 2.0), 1, "random", 8),
    ("perturbed-S3-random", lambda: perturbed_sphere(3, 1.0, 0.05, seed=1), 1, "random", 8),
    ("S4-random-k1", lambda: sphere(4), 1, "random", 8),
    ("S4-random-k2", lambda: sphere(4), 2, "random", 8),
    ("S5-metric-k1", lambda: sphere(5), 1, "metric", 6),
    ("S5-metric-k2", lambda: sphere(5), 2, "metric", 6),
    ("S2xT2-random", lambda: product(sphere(2), flat_torus(2)), 1, "random", 8),
    ("conformal-T4-random", lambda: conformal_flat(4), 1, "random", 8),
]


def _grid_deformation(name, base, direction):
    if direction == "metric":
        return MetricDeformation.metric_direction(base)
    rng = named_rng(0, f"test-grid:{name}")
    if direction == "conformal":
        return MetricDeformation.conformal(base, 1 + random_harmonic_expr(rng, base, scale=0.3))
    return MetricDeformation.general(base, random_symmetric_expr(rng, base, scale=0.3), label="random h")


@pytest.mark.parametrize("name,build,k,direction,order", MAIN_THEOREM_CASES, ids=[c[0] for c in MAIN_THEOREM_CASES])
def test_main_theorem_case_grid(name, build, k, direction, order):
    """d/dt H_2k = ½∫⟨T_2k, h⟩ across spheres, a product, a conformal torus and a non-homogeneous sphere."""
    deformation = _grid_deformation(name, build(), direction)
    report = VariationService(quad_order=order).verify_main_theorem(deformation, k)
    assert report.passed, (name, report.rel_err)
    assert report.rel_err < 1e-3


def test_gauss_bonnet_direction_on_two_sphere():
    """In dimension 2, H_2 is constant along every deformation and T_2 vanishes."""
    base = sphere(2)
    h = random_symmetric_expr(named_rng(1, "test-gb-direction"), base, scale=0.3)
    service = VariationService(quad_order=12)
    report = service.verify_main_theorem(MetricDeformation.general(base, h), 1)
    assert report.pairing_value == pytest.approx(0.0, abs=1e-12)
    assert abs(report.fd_value) < 1e-4 * 4 * np.pi
    assert report.passed


def test_conformal_variation():
    """d/dt H_2((1 + tf)g) = ½(n - 2)∫ f h_2 on S³."""
    base = sphere(3)
    f = 1 + sp.cos(base.coords[0]) / 2
    service = VariationService(quad_order=8)
    report = service.verify_conformal_variation(MetricDeformation.conformal(base, f), 1)
    assert report.passed, report
    # cos of the first polar angle has zero mean, so only the constant part contributes
    assert report.pairing_value == pytest.approx(0.5 * report.extras["H2k"], rel=1e-6)
    assert report.extras["mean_f"] == pytest.approx(1.0, abs=1e-9)
    assert report.extras["zero_mean_abs_err"] < 1e-6 * report.floor
    with pytest.raises(DegreeError):
        service.verify_conformal_variation(MetricDeformation.conformal(sphere(2), f), 1)


def test_volume_and_divergence_terms():
    base = sphere(2)
    h = random_symmetric_expr(named_rng(2, "test-volume"), base, scale=0.3)
    deformation = MetricDeformation.general(base, h)
    service = VariationService(quad_order=12)
    volume = service.verify_volume_derivative(deformation)
    assert volume.passed, volume
    divergence = service.verify_divergence_terms(deformation, 1)
    assert divergence.passed, divergence


def test_projected_derivative():
    base = sphere(3)
    h = random_symmetric_expr(named_rng(3, "test-projected"), base, scale=0.3)
    service = VariationService(quad_order=8)
    report = service.projected_derivative(MetricDeformation.general(base, h), 1)
    assert report.passed, report
    assert report.direction.endswith("- c g")


def test_curvature_variation_residual():
    """R' = -¼(DD̃ + D̃D)h + ¼F_h(R) at interior points of S², S³ and a flat torus."""
    service = VariationService()
    planar = np.array([[1.0, 2.0], [2.2, 0.5]])
    spatial = np.array([[1.0, 2.0, 3.0], [2.0, 1.2, 0.5]])
    for base, pts in ((sphere(2), planar), (flat_torus(2), planar), (sphere(3), spatial)):
        h = random_symmetric_expr(named_rng(4, f"test-curvature:{base.name}"), base, scale=0.3)
        deformation = MetricDeformation.general(base, h)
        assert service.verify_curvature_variation(deformation, pts) < 1e-4


def test_gauss_bonnet_invariance_in_dimension_two():
    service = VariationService(quad_order=16)
    report = service.verify_gb_invariance(2, amplitude=0.05, seed=0)
    assert report.passed, report
    assert report.labels == ["S2", "perturbed_S2", "perturbed_S2"]
    assert report.classical_ratio == pytest.approx(1.0, abs=1e-6)
    assert report.normalization == pytest.approx(2 * np.pi, rel=1e-6)
    with pytest.raises(DegreeError):
        service.verify_gb_invariance(3)


def test_gauss_bonnet_invariance_in_dimension_four():
    """H_4 = 16π² on S⁴ and its perturbations; no classical ratio outside n = 2."""
    report = VariationService(quad_order=12).verify_gb_invariance(4, amplitude=0.05, seed=0)
    assert report.passed, report
    assert report.max_deviation < 1e-6
    assert report.classical_ratio is None
    assert report.normalization == pytest.approx(8 * np.pi ** 2, rel=1e-5)


def test_gauss_bonnet_invariance_without_perturbation():
    report = VariationService(quad_order=12).verify_gb_invariance(2, amplitude=0.0, seed=0)
    assert report.passed
    assert report.max_deviation == pytest.approx(0.0, abs=1e-12)
    assert report.values[1] == pytest.approx(report.values[0], rel=1e-12)


def test_schur_constancy_on_round_sphere():
    service = VariationService()
    spreads = service.verify_schur_constancy(compile_chart(sphere(3)), 1, 1, points=2, planes=3)
    assert spreads["global_spread"] < 1e-8
    assert spreads["mean"] == pytest.approx(1.0, rel=1e-8)


def main():
    """Run all tests."""
    print("🧪 Testing Integrated Invariants and First Variations")
    print("=" * 50)

    try:
        test_difference_helpers()
        test_integrated_invariants()
        test_main_theorem_along_the_metric()
        test_main_theorem_along_random_direction()
        for case in MAIN_THEOREM_CASES:
            test_main_theorem_case_grid(*case)
        test_gauss_bonnet_direction_on_two_sphere()
        test_conformal_variation()
        test_volume_and_divergence_terms()
        test_projected_derivative()
        test_curvature_variation_residual()
        test_gauss_bonnet_invariance_in_dimension_two()
        test_gauss_bonnet_invariance_in_dimension_four()
        test_gauss_bonnet_invariance_without_perturbation()
        test_schur_constancy_on_round_sphere()

        print("=" * 50)
        print("🎉 All tests passed! Variational formulas check out.")

    except Exception as e:
        print(f"❌ Test failed: {e}")
        import traceback
        traceback.print_exc()
        sys.exit(1)


if __name__ == "__main__":
    main()
