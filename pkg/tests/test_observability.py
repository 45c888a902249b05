"""Unit tests for observability constants and conditions."""

import math
import unittest

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import erf, erfc

from wavepax.decompose import GaussianMixture, random_mixture
from wavepax.errors import CertificateError, DomainError
from wavepax.observability import (
    DomainSpec,
    certificate_times,
    certify,
    check_R1,
    check_req,
    counterexample_mass,
    delta_lower,
    epsilon_lower,
    erfc_lb,
    erfc_lb_displayed,
    gamma_modulus,
    linfty_check,
    linfty_eta,
    lower_inner_check,
    linfty_constant,
    observability_constant,
    observability_inequality,
    packet_box_norms,
    quadrature_ratio,
    spread_A,
)
from wavepax.oscillator import make_oscillator
from wavepax.riccati import solve_riccati


class TestErfcBound(unittest.TestCase):
    """Test cases for the erfc lower bound."""

    def test_golden_values(self):
        """Test the bound at x=0 and x=1 with beta=2."""
        scale = math.sqrt(2.0 * math.e / math.pi) / 2.0
        self.assertAlmostEqual(erfc_lb(0.0, 2.0), scale, places=12)
        self.assertAlmostEqual(erfc_lb(0.0, 2.0), 0.6577, places=4)
        self.assertAlmostEqual(erfc_lb(1.0, 2.0), scale * math.exp(-2.0), places=12)
        self.assertLessEqual(erfc_lb(1.0, 2.0), erfc(1.0))

    def test_displayed_form_is_not_a_bound(self):
        """Test the sqrt((beta-1)/beta) form exceeds erfc at x=0.5, beta=2."""
        self.assertAlmostEqual(erfc_lb_displayed(0.0, 2.0), math.sqrt(math.e / math.pi), places=12)
        self.assertGreater(erfc_lb_displayed(0.5, 2.0), erfc(0.5))
        self.assertLessEqual(erfc_lb(0.5, 2.0), erfc(0.5))

    def test_beta_to_one(self):
        """Test the bound vanishes as beta decreases to 1."""
        self.assertLess(erfc_lb(0.3, 1.0 + 1e-12), 1e-5)

    def test_domain(self):
        """Test x < 0 and beta <= 1 raise DomainError."""
        with self.assertRaises(DomainError):
            erfc_lb(-0.1, 2.0)
        with self.assertRaises(DomainError):
            erfc_lb(0.1, 1.0)

    def test_random_samples(self):
        """Test the bound on 10^4 random samples."""
        rng = np.random.default_rng(0)
        x = rng.uniform(0.0, 6.0, 10_000)
        beta = rng.uniform(1.0, 10.0, 10_000) + 1e-9
        self.assertTrue(np.all(erfc_lb(x, beta) <= erfc(x) * (1.0 + 1e-12)))

    @settings(max_examples=200, deadline=None)
    @given(
        st.floats(min_value=0.0, max_value=6.0),
        st.floats(min_value=1.0, max_value=10.0, exclude_min=True),
    )
    def test_bound_property(self, x, beta):
        """Test erfc_lb(x, beta) <= erfc(x)."""
        self.assertLessEqual(erfc_lb(x, beta), erfc(x) * (1.0 + 1e-12))


class TestLowerConstants(unittest.TestCase):
    """Test cases for A, eps and delta."""

    def setUp(self):
        """Set up test fixtures."""
        self.free = solve_riccati(make_oscillator("free"), 1.0)
        self.harmonic = solve_riccati(make_oscillator("harmonic"), 1.4)

    def test_spread_closed_forms(self):
        """Test A(t) = 2/(1+16t^2) (free) and 2/(1+3 sin^2 t) (harmonic)."""
        t = np.linspace(0.0, 1.0, 11)
        np.testing.assert_allclose(spread_A(self.free, t), 2.0 / (1.0 + 16.0 * t**2), rtol=1e-7)
        np.testing.assert_allclose(spread_A(self.harmonic, t), 2.0 / (1.0 + 3.0 * np.sin(t) ** 2), rtol=1e-7)
        self.assertAlmostEqual(spread_A(self.harmonic, 0.0), 2.0)

    def test_gamma_modulus(self):
        """Test |gamma(0)| = 1."""
        self.assertAlmostEqual(gamma_modulus(self.free, 0.0), 1.0)

    def test_epsilon_golden(self):
        """Test eps(0, 1) in dimension 1."""
        expected = math.exp(0.25) * 2.0**-0.75 * math.exp(-2.0)
        self.assertAlmostEqual(epsilon_lower(self.free, 0.0, 1.0), expected, places=12)
        self.assertAlmostEqual(epsilon_lower(self.free, 0.0, 1.0), 0.10333, places=5)

    def test_epsilon_limits(self):
        """Test eps decreases in R and saturates at (pi/8)^(d/4)."""
        values = [epsilon_lower(self.free, 0.5, R) for R in (0.5, 1.0, 2.0, 4.0)]
        self.assertTrue(all(a > b for a, b in zip(values, values[1:])))
        for dim in (1, 2, 3):
            cap = (math.pi / 8.0) ** (dim / 4.0)
            self.assertLessEqual(epsilon_lower(self.free, 0.5, 1e-6, dim), cap + 1e-15)
        with self.assertRaises(DomainError):
            epsilon_lower(self.free, 0.0, 0.0)

    def test_delta_golden(self):
        """Test delta(0, 1) in dimension 1."""
        expected = math.exp(0.25) * 2.0**-1.25 * (4.0 * math.pi) ** -0.25 * math.exp(-2.0)
        self.assertAlmostEqual(delta_lower(self.free, 0.0, 1.0), expected, places=12)
        self.assertAlmostEqual(delta_lower(self.free, 0.0, 1.0), 0.038805, places=5)
        self.assertAlmostEqual(delta_lower(self.free, 0.0, 1.3), delta_lower(self.harmonic, 0.0, 1.3), places=12)

    def test_delta_domain(self):
        """Test R0 < 1 raises DomainError."""
        with self.assertRaises(DomainError):
            delta_lower(self.free, 0.0, 0.5)

    def test_delta_positive(self):
        """Test delta stays positive across the horizon."""
        t = certificate_times(1.4)
        self.assertTrue(np.all(delta_lower(self.harmonic, t, 2.0, 2) > 0.0))


class TestObservabilityConstant(unittest.TestCase):
    """Test cases for C_T and its quadrature."""

    def setUp(self):
        """Set up test fixtures."""
        self.free = solve_riccati(make_oscillator("free"), 1.0)
        self.dom = DomainSpec(diam_omega=2.0, R0=1.0, R=2.0)

    def test_finite_and_converged(self):
        """Test C_T is finite and stable under halving the quadrature step."""
        coarse = observability_constant(self.free, self.dom, 1.0)
        fine = observability_constant(self.free, self.dom, 1.0, intervals=4096)
        self.assertTrue(math.isfinite(coarse) and coarse > 0.0)
        self.assertLess(abs(coarse - fine) / fine, 1e-6)

    def test_richardson_ratio(self):
        """Test the composite trapezoid converges at second order."""
        self.assertAlmostEqual(quadrature_ratio(self.free, self.dom, 1.0), 4.0, delta=0.3)

    def test_short_time_scaling(self):
        """Test C_T grows like T^(-1/2) as T decreases."""
        ratio = observability_constant(self.free, self.dom, 1e-4) / observability_constant(self.free, self.dom, 4e-4)
        self.assertAlmostEqual(ratio, 2.0, delta=1e-2)

    def test_harmonic_near_horizon(self):
        """Test C_T stays finite for the harmonic oscillator close to pi/2."""
        ric = solve_riccati(make_oscillator("harmonic"), math.pi / 2.0 - 1e-3)
        self.assertTrue(math.isfinite(observability_constant(ric, self.dom, ric.horizon)))

    def test_nonpositive_time(self):
        """Test T <= 0 raises DomainError."""
        with self.assertRaises(DomainError):
            observability_constant(self.free, self.dom, 0.0)

    def test_linfty_constant(self):
        """Test C_T = e / ((e - 1) T)."""
        self.assertAlmostEqual(linfty_constant(2.0), math.e / ((math.e - 1.0) * 2.0))

    def test_inequality(self):
        """Test the approximate observability inequality predicate."""
        self.assertTrue(observability_inequality(1.0, 0.5, 3.0, 0.0, 1.0))
        self.assertFalse(observability_inequality(1.0, 0.1, 3.0, 0.0, 1.0))
        self.assertTrue(observability_inequality(1.0, 0.1, 3.0, 0.2, 1.0))


class TestConditions(unittest.TestCase):
    """Test cases for check_req and check_R1."""

    def setUp(self):
        """Set up test fixtures."""
        self.free = solve_riccati(make_oscillator("free"), 1.0)
        self.harmonic = solve_riccati(make_oscillator("harmonic"), 1.0)
        self.dom = DomainSpec(diam_omega=2.0, R0=2.0, R=2.0)

    def test_req_admissible_set(self):
        """Test the free condition at N=3, R0=2 admits a positive eps."""
        result = check_req(3, 0.0, self.free, self.dom, 1.0)
        self.assertTrue(result.ok)
        self.assertGreater(result.eps_max, 0.0)
        self.assertGreaterEqual(result.margin, 0.0)

    def test_req_eps_above_max(self):
        """Test eps above eps_max fails the condition."""
        eps_max = check_req(3, 0.0, self.free, self.dom, 1.0).eps_max
        self.assertTrue(check_req(3, 0.5 * eps_max, self.free, self.dom, 1.0).ok)
        self.assertFalse(check_req(3, 2.0 * eps_max, self.free, self.dom, 1.0).ok)

    def test_req_shrinks_with_order(self):
        """Test eps_max decreases as N grows."""
        values = [check_req(N, 0.0, self.free, self.dom, 1.0).eps_max for N in (3, 4, 5, 6)]
        self.assertTrue(all(a > b for a, b in zip(values, values[1:])))

    def test_req_domain(self):
        """Test N <= 2 raises DomainError."""
        with self.assertRaises(DomainError):
            check_req(2, 0.0, self.free, self.dom, 1.0)

    def test_R1_at_initial_time(self):
        """Test the distance bound at t=0 with alpha_N = 0 and diameter 2."""
        result = check_R1(0.0, 2.0, 2.0, self.free, 0.0)
        self.assertAlmostEqual(result.rhs_max, math.sqrt(0.5) + 1.0, places=6)
        self.assertTrue(result.ok)

    def test_R1_harmonic_uniform_form(self):
        """Test the harmonic maximum stays below 2 sqrt(6) + 1."""
        result = check_R1(0.0, 10.0, 2.0, self.harmonic, 1.0)
        self.assertLess(result.rhs_max, 2.0 * math.sqrt(6.0) + 1.0)
        self.assertAlmostEqual(result.rhs_max, 2.71, delta=0.01)

    def test_R1_grows_with_spread(self):
        """Test the bound grows without limit in alpha_N."""
        values = [check_R1(alpha, 1.0, 2.0, self.harmonic, 1.0).rhs_max for alpha in (0.0, 10.0, 100.0)]
        self.assertTrue(values[0] < values[1] < values[2])
        self.assertGreater(values[2], 100.0)

    def test_R1_domain(self):
        """Test a negative alpha_N raises DomainError."""
        with self.assertRaises(DomainError):
            check_R1(-1.0, 1.0, 2.0, self.harmonic, 1.0)


class TestCounterexampleAndInner(unittest.TestCase):
    """Test cases for counterexample_mass, lower_inner_check and linfty_check."""

    def setUp(self):
        """Set up test fixtures."""
        self.harmonic = solve_riccati(make_oscillator("harmonic"), 1.0)

    def test_counterexample_golden(self):
        """Test the unshifted mass at t=0, R=0."""
        self.assertAlmostEqual(counterexample_mass(0.0, self.harmonic, 0.0, 0.0), math.sqrt(math.pi / 8.0), places=12)

    def test_counterexample_decreasing(self):
        """Test the mass decreases to zero as the shift grows."""
        masses = [counterexample_mass(s, self.harmonic, 0.8, 1.0) for s in np.linspace(0.0, 20.0, 41)]
        self.assertTrue(all(a > b for a, b in zip(masses, masses[1:]) if a > 0.0))
        self.assertLess(masses[-1], 1e-50)
        with self.assertRaises(DomainError):
            counterexample_mass(-1.0, self.harmonic, 0.0, 0.0)

    def test_single_packet_inner(self):
        """Test the inner bound for one packet at the origin at t=0 against closed forms."""
        mix = GaussianMixture(1, 0, 0.0, [[0.0]], [1.0])
        expected = math.sqrt(0.5 * math.sqrt(math.pi / 2.0) * (erf(math.sqrt(2.0)) - erf(-math.sqrt(2.0))))
        self.assertAlmostEqual(packet_box_norms(mix, self.harmonic, 0.0, 1.0)[0], expected, places=10)
        self.assertTrue(lower_inner_check(mix, self.harmonic, 0.0, 1.0))

    def test_random_mixtures_inner(self):
        """Test the inner bound on random 5-packet mixtures."""
        rng = np.random.default_rng(5)
        for _ in range(10):
            mix = random_mixture(rng, 5, center_scale=0.5)
            for t in (0.0, 0.3, 0.7):
                self.assertTrue(lower_inner_check(mix, self.harmonic, t, 1.5))

    def test_inner_saturation(self):
        """Test the box norms approach (pi/2)^(d/4) |c| for a large box."""
        mix = GaussianMixture(2, 0, 0.0, [[0.3, -0.2]], [2.0])
        norms = packet_box_norms(mix, self.harmonic, 0.6, 50.0)
        self.assertAlmostEqual(2.0 * norms[0], (math.pi / 2.0) ** 0.5 * 2.0, places=6)

    def test_linfty(self):
        """Test the L2-Linfty condition for good and bad step data."""
        self.assertAlmostEqual(linfty_eta(2.0, 0.5), 2.0 * math.exp(-1.0) + 1.0)
        self.assertFalse(linfty_check(2.0, 0.5, 1, 2.0))
        self.assertTrue(linfty_check(6.0, 1e-3, 1, 2.5))
        self.assertLess(linfty_eta(6.0, 1e-3, 3), linfty_eta(6.0, 1e-3, 1))
        with self.assertRaises(DomainError):
            linfty_check(1.0, 0.1, 1, 1.0)


class TestCertify(unittest.TestCase):
    """Test cases for certify."""

    def setUp(self):
        """Set up test fixtures."""
        self.ric = solve_riccati(make_oscillator("harmonic"), 1.0)
        self.dom = DomainSpec(diam_omega=2.0, R0=1.0, R=1.0)

    def test_certificate_report(self):
        """Test the certificate JSON carries every constant."""
        cert = certify(self.ric, self.dom, 1.0, 3, 0.0, alpha_N=0.0, R1=4.0, linfty=(6.0, 1e-3, 2.5))
        report = cert.to_dict()
        self.assertTrue(math.isfinite(report["C_T"]) and report["C_T"] > 0.0)
        self.assertTrue(report["req"]["ok"])
        self.assertTrue(report["R1"]["ok"])
        self.assertTrue(report["linfty"])
        self.assertAlmostEqual(report["A_max"], 2.0)
        self.assertAlmostEqual(report["C_T_linfty"], linfty_constant(1.0))
        self.assertTrue(np.all(cert.eps > 0.0) and np.all(cert.delta > 0.0))

    def test_certificate_rows(self):
        """Test the certificate series has four columns."""
        cert = certify(self.ric, self.dom, 1.0, 3, 0.0)
        rows = cert.rows()
        self.assertEqual(len(rows[0]), 4)
        self.assertIsNone(cert.R1)
        self.assertIsNone(cert.linfty)

    def test_vanishing_constant(self):
        """Test an underflowing integrand raises CertificateError."""
        far = DomainSpec(diam_omega=2.0, R0=40.0, R=40.0)
        with self.assertRaises(CertificateError):
            certify(self.ric, far, 1.0, 3, 0.0)

    def test_domain_spec_validation(self):
        """Test inconsistent radii raise DomainError."""
        with self.assertRaises(DomainError):
            DomainSpec(diam_omega=4.0, R0=1.0, R=2.0)
        with self.assertRaises(DomainError):
            DomainSpec(diam_omega=1.0, R0=2.0, R=1.0)


if __name__ == "__main__":
    unittest.main()
