"""Unit tests for Hermite functions, coefficients and tail bounds."""

import math
import unittest

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import eval_hermite, erf, factorial, roots_hermite

from wavepax.errors import DomainError, IntegrabilityError
from wavepax.hermite import (
    HermiteCoeffs,
    b_from_d,
    hermite_coeffs,
    hermite_fn,
    hermite_functions,
    hermite_polys,
    hermite_series,
    ladder_factor,
    tail_bound,
    tail_factor,
    tail_series,
    truncation_tail,
    weighted_h3_norm,
)


class TestHermiteFunctions(unittest.TestCase):
    """Test cases for the Hermite function recurrence."""

    def test_golden_values(self):
        """Test h_0(0), h_1(0) and h_2(1)."""
        self.assertAlmostEqual(hermite_fn(0, 0.0), math.pi**-0.25, places=12)
        self.assertAlmostEqual(hermite_fn(0, 0.0), 0.751126, places=6)
        self.assertAlmostEqual(hermite_fn(1, 0.0), 0.0, places=15)
        self.assertAlmostEqual(hermite_fn(2, 1.0), 2.0 * math.exp(-0.5) / math.sqrt(8.0 * math.sqrt(math.pi)), places=12)
        self.assertAlmostEqual(hermite_fn(2, 1.0), 0.3221442, places=6)

    def test_negative_order(self):
        """Test a negative order raises DomainError."""
        with self.assertRaises(DomainError):
            hermite_fn(-1, 0.0)

    def test_orthonormality(self):
        """Test the Gram matrix of h_0..h_20 is the identity."""
        nodes, weights = roots_hermite(64)
        psi = hermite_polys(20, nodes)
        gram = (psi * weights) @ psi.T
        np.testing.assert_allclose(gram, np.eye(21), atol=1e-10)

    def test_recurrence_matches_direct_polynomials(self):
        """Test the recurrence against H_n / sqrt(2^n n! sqrt(pi)) e^{-x^2/2}."""
        x = np.linspace(-5.0, 5.0, 101)
        values = hermite_functions(12, x)
        for n in range(13):
            direct = eval_hermite(n, x) * np.exp(-0.5 * x**2) / math.sqrt(2.0**n * factorial(n) * math.sqrt(math.pi))
            np.testing.assert_allclose(values[n], direct, atol=1e-10)

    def test_functions_are_polys_times_weight(self):
        """Test h_n = psi_n e^{-x^2/2}."""
        x = np.linspace(-3.0, 3.0, 13)
        np.testing.assert_allclose(hermite_functions(6, x), hermite_polys(6, x) * np.exp(-0.5 * x**2), atol=1e-14)


class TestHermiteCoeffs(unittest.TestCase):
    """Test cases for hermite_coeffs and b_from_d."""

    def test_ground_state(self):
        """Test f = h_0 e^{-x^2/2} has d = (1, 0, 0, ...)."""
        f = hermite_series([1.0])
        coeffs = hermite_coeffs(f, 6)
        expected = np.zeros(7)
        expected[0] = 1.0
        np.testing.assert_allclose(coeffs.d, expected, atol=1e-12)

    def test_two_modes(self):
        """Test f = (h_1 + h_3) e^{-x^2/2} has d_1 = d_3 = 1."""
        f = hermite_series([0.0, 1.0, 0.0, 1.0])
        coeffs = hermite_coeffs(f, 8)
        expected = np.zeros(9)
        expected[[1, 3]] = 1.0
        np.testing.assert_allclose(coeffs.d, expected, atol=1e-12)

    def test_indicator_with_breakpoints(self):
        """Test d_0 of the truncated Gaussian by adaptive quadrature."""

        def f(points):
            x = points[..., 0]
            return np.where(np.abs(x) <= 1.0, np.exp(-0.5 * x**2), 0.0)

        coeffs = hermite_coeffs(f, 2, breakpoints=[-1.0, 1.0])
        expected = math.pi**-0.25 * math.sqrt(2.0 * math.pi) * erf(1.0 / math.sqrt(2.0))
        self.assertAlmostEqual(coeffs.d[0], expected, places=10)
        self.assertAlmostEqual(coeffs.d[0], 1.2853627, places=6)
        self.assertAlmostEqual(coeffs.d[1], 0.0, places=10)

    def test_two_dimensional_product(self):
        """Test coefficients of a product are the outer product."""
        f = hermite_series(np.outer([1.0, 0.5], [0.0, 2.0, 1.0]), dim=2)
        coeffs = hermite_coeffs(f, 3, dim=2)
        expected = np.zeros((4, 4))
        expected[:2, :3] = np.outer([1.0, 0.5], [0.0, 2.0, 1.0])
        np.testing.assert_allclose(coeffs.d, expected, atol=1e-11)

    def test_non_integrable(self):
        """Test a function growing like e^{x^2} raises IntegrabilityError."""

        def f(points):
            return np.exp(points[..., 0] ** 2 * 400.0)

        with self.assertRaises(IntegrabilityError):
            hermite_coeffs(f, 3)

    def test_breakpoints_only_in_one_dimension(self):
        """Test breakpoint quadrature is rejected in dimension 2."""
        with self.assertRaises(DomainError):
            hermite_coeffs(hermite_series(np.ones((1, 1)), dim=2), 2, dim=2, breakpoints=[-1.0, 1.0])

    def test_b_from_d_golden(self):
        """Test the normalization factors for n = 0, 1, 2."""
        b = b_from_d(HermiteCoeffs(2, 1, np.ones(3)))
        np.testing.assert_allclose(b, [0.751126, -0.531126, 0.265563], atol=1e-6)

    def test_b_from_d_tensorizes(self):
        """Test b_from_d applies the factor per coordinate."""
        b1 = b_from_d(HermiteCoeffs(2, 1, np.ones(3)))
        b2 = b_from_d(HermiteCoeffs(2, 2, np.ones((3, 3))))
        np.testing.assert_allclose(b2, np.outer(b1, b1), rtol=1e-14)

    def test_truncated_and_rows(self):
        """Test truncation and CSV rows with joined multi-indices."""
        coeffs = HermiteCoeffs(3, 2, np.arange(16.0).reshape(4, 4))
        small = coeffs.truncated(1)
        self.assertEqual(small.d.shape, (2, 2))
        rows = small.rows()
        self.assertEqual(rows[1], ["0:1", 1.0])
        with self.assertRaises(DomainError):
            small.truncated(2)

    @settings(max_examples=25, deadline=None)
    @given(
        st.lists(st.floats(-2.0, 2.0), min_size=4, max_size=4),
        st.lists(st.floats(-2.0, 2.0), min_size=4, max_size=4),
    )
    def test_linearity(self, first, second):
        """Test hermite_coeffs is linear in f."""
        f = hermite_series(first)
        g = hermite_series(second)

        def total(points):
            return f(points) + g(points)

        lhs = hermite_coeffs(total, 5).d
        rhs = hermite_coeffs(f, 5).d + hermite_coeffs(g, 5).d
        np.testing.assert_allclose(lhs, rhs, atol=1e-10)


class TestTails(unittest.TestCase):
    """Test cases for truncation tails and their analytic bound."""

    def test_truncation_tail(self):
        """Test E_N from a longer expansion."""
        coeffs = HermiteCoeffs(4, 1, np.array([1.0, 0.0, 0.0, 3.0, 4.0]))
        self.assertAlmostEqual(truncation_tail(coeffs, 2), 5.0)
        self.assertEqual(truncation_tail(coeffs, 4), 0.0)

    def test_finite_series_has_zero_tail(self):
        """Test a finite Hermite series has E_N = 0 below the bound."""
        f = hermite_series([1.0, -0.5, 0.25, 0.1])
        coeffs = hermite_coeffs(f, 16)
        tail = truncation_tail(coeffs, 3)
        self.assertLess(tail, 1e-12)
        self.assertLessEqual(tail, tail_bound(weighted_h3_norm(f, 4.0), 4.0, 3))

    def test_tail_series_against_direct_sum(self):
        """Test the zeta form of the tail series against a partial sum."""
        n = np.arange(17, 2_000_001, dtype=float)
        partial = float(np.sum((2.0 * (n + 1.0)) ** -1.5))
        remainder = 2.0**-1.5 * 2.0 / math.sqrt(2_000_001.0)
        self.assertAlmostEqual(tail_series(16), partial + remainder, delta=1e-8)
        self.assertLessEqual(tail_series(16), tail_factor(16) ** 2)

    def test_bound_decreases_with_order(self):
        """Test the bound decays monotonically in N."""
        bounds = [tail_bound(1.0, 2.0, N) for N in range(3, 40)]
        self.assertTrue(all(a > b for a, b in zip(bounds, bounds[1:])))

    def test_bound_domain(self):
        """Test N <= 2 and M < 1 raise DomainError."""
        with self.assertRaises(DomainError):
            tail_bound(1.0, 2.0, 2)
        with self.assertRaises(DomainError):
            tail_bound(1.0, 0.5, 5)

    def test_ladder_factor(self):
        """Test the ladder factor at M = 1."""
        self.assertAlmostEqual(ladder_factor(1.0), math.sqrt(2.0) * 14.0)

    def test_weighted_h3_norm_of_constant(self):
        """Test f = e^{-x^2/2} has weighted norm sqrt(2M)."""

        def f(points):
            return np.exp(-0.5 * points[..., 0] ** 2)

        self.assertAlmostEqual(weighted_h3_norm(f, 2.0), 2.0, places=10)


if __name__ == "__main__":
    unittest.main()
