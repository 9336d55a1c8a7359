#!/usr/bin/env python3
"""
Test script for the double-form algebra.

Checks the product, contraction, Hodge star and F_h against closed forms
and against each other on seeded random forms.
"""

import sys
from itertools import permutations
from math import factorial

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

# Add the current directory to the path so we can import our modules
sys.path.insert(0, '.')

from core.double_forms import (
    DoubleForm,
    MultiIndex,
    contract,
    contract_power,
    dump,
    f_h,
    f_h_eigen,
    first_bianchi_residual,
    from_tensor,
    hodge_star,
    inner,
    metric,
    metric_mul,
    metric_power,
    orthogonal_contraction,
    primitive_decompose,
    sectional_value,
    to_tensor,
    wedge,
)
from utils.errors import DegreeError, DimensionMismatchError, RankDeficientError, SymmetryError
from utils.random_fields import random_bianchi, random_double_form, random_symmetric

bidegrees = st.integers(min_value=2, max_value=5).flatmap(
    lambda n: st.tuples(st.just(n), st.integers(0, n), st.integers(0, n))
)


def test_metric_power_top_degree():
    """g^n on the top pair equals n!."""
    print("Testing metric powers...")
    for n in range(1, 7):
        assert hodge_star(metric_power(n, n)).scalar() == pytest.approx(factorial(n))
    print("✅ Metric power tests passed")


def test_contraction_of_metric_powers():
    """c(g^k) = k(n-k+1) g^(k-1)."""
    print("Testing contraction of g^k...")
    for n in range(2, 6):
        assert contract(metric(n)).scalar() == pytest.approx(n)
        for k in range(2, n + 1):
            lhs = contract(metric_power(n, k))
            rhs = metric_power(n, k - 1) * (k * (n - k + 1))
            assert np.allclose(lhs.coeffs, rhs.coeffs)
    print("✅ Contraction tests passed")


@settings(max_examples=40, deadline=None)
@given(space=bidegrees, seed=st.integers(0, 2 ** 16))
def test_double_star(space, seed):
    n, p, q = space
    omega = random_double_form(np.random.default_rng(seed), n, p, q)
    sign = (-1) ** (p * (n - p) + q * (n - q))
    assert np.allclose(hodge_star(hodge_star(omega)).coeffs, sign * omega.coeffs)


@settings(max_examples=40, deadline=None)
@given(space=bidegrees, seed=st.integers(0, 2 ** 16))
def test_inner_product_through_star(space, seed):
    """⟨ω, θ⟩ = *(ω·*θ)."""
    n, p, q = space
    rng = np.random.default_rng(seed)
    omega = random_double_form(rng, n, p, q)
    theta = random_double_form(rng, n, p, q)
    assert hodge_star(wedge(omega, hodge_star(theta))).scalar() == pytest.approx(inner(omega, theta), abs=1e-9)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2 ** 16), n=st.integers(2, 5))
def test_graded_commutativity(seed, n):
    rng = np.random.default_rng(seed)
    p, q, r, s = (int(v) for v in rng.integers(0, 3, size=4))
    omega = random_double_form(rng, n, min(p, n), min(q, n))
    theta = random_double_form(rng, n, min(r, n), min(s, n))
    sign = (-1) ** (omega.p * theta.p + omega.q * theta.q)
    assert np.allclose(wedge(omega, theta).coeffs, sign * wedge(theta, omega).coeffs)


def test_wedge_beyond_top_degree_vanishes():
    n = 3
    omega = random_double_form(np.random.default_rng(1), n, 2, 2)
    out = wedge(omega, omega)
    assert out.bidegree == (3, 3)
    assert out.max_abs() == 0.0


def test_metric_multiplication_is_adjoint_to_contraction():
    """⟨g·ω, θ⟩ = ⟨ω, c θ⟩."""
    rng = np.random.default_rng(7)
    for n, p, q in ((4, 1, 2), (5, 2, 2), (5, 0, 3)):
        omega = random_double_form(rng, n, p, q)
        theta = random_double_form(rng, n, p + 1, q + 1)
        assert inner(wedge(metric(n), omega), theta) == pytest.approx(inner(omega, contract(theta)))


def test_metric_multiplication_through_star():
    """g·ω = (-1)^{n(p+q)} *c*ω for p, q <= n-1; the sign flips only when n and p+q are odd."""
    rng = np.random.default_rng(17)
    for n in (3, 4, 5, 6):
        for p in range(n):
            for q in range(n):
                omega = random_double_form(rng, n, p, q, (3,))
                lhs = metric_mul(omega)
                starred = hodge_star(contract(hodge_star(omega)))
                assert np.allclose(lhs.coeffs, starred.coeffs * (-1) ** (n * (p + q)), atol=1e-12)
                if n % 2 and (p + q) % 2 and lhs.max_abs() > 0:
                    assert not np.allclose(lhs.coeffs, starred.coeffs)


def test_value_lookup_signs():
    omega = DoubleForm(3, 1, 2, np.arange(9, dtype=float).reshape(3, 3))
    assert omega.value((2,), (1, 3)) == 4.0
    assert omega.value((2,), (3, 1)) == -4.0
    assert omega.value((2,), (3, 3)) == 0.0
    assert omega.value((2,), MultiIndex((1, 3))) == 4.0
    with pytest.raises(ValueError):
        MultiIndex((2, 1))


def test_shape_and_degree_errors():
    with pytest.raises(DimensionMismatchError):
        DoubleForm(3, 1, 1, np.zeros((3, 2)))
    with pytest.raises(DimensionMismatchError):
        metric(3) + metric(4)
    with pytest.raises(DegreeError):
        contract(DoubleForm(3, 0, 1, np.zeros((1, 3))))
    with pytest.raises(SymmetryError):
        f_h(random_double_form(np.random.default_rng(0), 3, 1, 1), metric_power(3, 2))


def test_tensor_conversion_matches_lookup():
    omega = random_double_form(np.random.default_rng(3), 4, 2, 1)
    full = to_tensor(omega)
    assert full.shape == (4, 4, 4)
    assert full[2, 0, 3] == pytest.approx(omega.value((3, 1), (4,)))
    assert full[1, 1, 0] == 0.0
    assert np.allclose(from_tensor(full, 4, 2, 1).coeffs, omega.coeffs)


def test_constant_curvature_structure():
    """R = ½g² has sectional curvature 1 on every 2-plane."""
    rng = np.random.default_rng(11)
    R = metric_power(5, 2) * 0.5
    assert first_bianchi_residual(R) < 1e-14
    for _ in range(5):
        assert sectional_value(R, rng.standard_normal((2, 5))) == pytest.approx(1.0)
    with pytest.raises(RankDeficientError):
        sectional_value(R, np.array([[1.0, 0, 0, 0, 0], [2.0, 0, 0, 0, 0]]))


def test_orthogonal_contraction_on_round_three_sphere():
    """Normalized T_2(v, v) = 1 for unit v on S^3; the raw contraction is twice that."""
    R = metric_power(3, 2) * 0.5
    v = np.array([1.0, 2.0, -0.5])
    assert orthogonal_contraction(R, v) == pytest.approx(1.0)
    assert orthogonal_contraction(R, v, normalized=False) == pytest.approx(2.0)


def test_generated_structures_satisfy_bianchi():
    rng = np.random.default_rng(5)
    for n in (3, 4, 6):
        R = random_bianchi(rng, n, 2, batch=(4,))
        assert first_bianchi_residual(R) < 1e-12
        assert R.is_symmetric()


def test_primitive_decomposition_reassembles():
    rng = np.random.default_rng(2)
    for n, p in ((4, 2), (5, 2), (6, 3)):
        omega = random_symmetric(rng, n, p)
        decomposition = primitive_decompose(omega)
        assert np.allclose(decomposition.reassemble().coeffs, omega.coeffs)
        assert decomposition.traceless_residual() < 1e-10
    with pytest.raises(DegreeError):
        primitive_decompose(random_symmetric(rng, 3, 2))


def test_f_h_routes_agree():
    rng = np.random.default_rng(9)
    for n, p in ((3, 1), (4, 2), (5, 2)):
        h = random_symmetric(rng, n, 1)
        omega = random_symmetric(rng, n, p)
        assert np.allclose(f_h(h, omega).coeffs, f_h_eigen(h, omega).coeffs)


def test_f_h_of_metric_scales_by_twice_the_degree():
    rng = np.random.default_rng(4)
    omega = random_symmetric(rng, 5, 2)
    assert np.allclose(f_h(metric(5), omega).coeffs, 4.0 * omega.coeffs)


def test_full_contraction_against_permutation_sum():
    """h_4 in n = 4 equals the determinant-style double sum over S_4."""
    rng = np.random.default_rng(13)
    R = random_bianchi(rng, 4, 2)
    T = to_tensor(R)
    total = 0.0
    for sigma in permutations(range(4)):
        s_sigma = _perm_sign(sigma)
        for tau in permutations(range(4)):
            total += s_sigma * _perm_sign(tau) * (T[sigma[0], sigma[1], tau[0], tau[1]]
                                                  * T[sigma[2], sigma[3], tau[2], tau[3]])
    expected = total / 16.0
    assert hodge_star(wedge(R, R)).scalar() == pytest.approx(expected)
    assert (contract_power(wedge(R, R), 4).scalar() / factorial(4)) == pytest.approx(expected)


def _perm_sign(perm) -> int:
    inversions = sum(1 for a in range(len(perm)) for b in range(a + 1, len(perm)) if perm[a] > perm[b])
    return -1 if inversions % 2 else 1


def test_dump_lists_nonzero_coefficients():
    text = dump(metric(2))
    assert text.splitlines() == ["(1) (1) 1.000000000000e+00", "(2) (2) 1.000000000000e+00"]


def main():
    """Run all tests."""
    print("🧪 Testing Double-Form Algebra")
    print("=" * 50)

    try:
        test_metric_power_top_degree()
        test_contraction_of_metric_powers()
        test_double_star()
        test_inner_product_through_star()
        test_graded_commutativity()
        test_wedge_beyond_top_degree_vanishes()
        test_metric_multiplication_is_adjoint_to_contraction()
        test_metric_multiplication_through_star()
        test_value_lookup_signs()
        test_shape_and_degree_errors()
        test_tensor_conversion_matches_lookup()
        test_constant_curvature_structure()
        test_orthogonal_contraction_on_round_three_sphere()
        test_generated_structures_satisfy_bianchi()
        test_primitive_decomposition_reassembles()
        test_f_h_routes_agree()
        test_f_h_of_metric_scales_by_twice_the_degree()
        test_full_contraction_against_permutation_sum()
        test_dump_lists_nonzero_coefficients()

        print("=" * 50)
        print("🎉 All tests passed! Double-form algebra is working correctly.")

    except Exception as e:
        print(f"❌ Test failed: {e}")
        import traceback
        traceback.print_exc()
        sys.exit(1)


if __name__ == "__main__":
    main()
