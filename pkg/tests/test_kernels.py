import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, special

from sqg_decay.initial_data import ProfileKind, ProfileSpec, generate
from sqg_decay.kernels import (
    KernelProbeReport,
    KernelQuadratureError,
    bilinear_estimate_probe,
    exponential_test_function,
    gaussian_test_function,
    kernel_eval,
    kernel_lp_norm,
    kernel_mass,
    kernel_norm_scaling_probe,
    kernel_profile,
    smoothing_estimate_probe,
    tail_coefficient,
)
from sqg_decay.spectral import GridSpec, SpectralField


def heat_kernel(r, t):
    return np.exp(-np.square(r) / (4 * t)) / (4 * math.pi * t)


class TestKernelEval:
    def test_gaussian_closed_form(self):
        assert kernel_eval(0.0, 1.0, 1.0) == pytest.approx(1 / (4 * math.pi), rel=1e-12)
        assert kernel_eval(2.0, 1.0, 1.0) == pytest.approx(math.exp(-1) / (4 * math.pi), rel=1e-10)

    @pytest.mark.parametrize("r,t", [(0.5, 0.1), (3.0, 2.0), (10.0, 5.0), (1.0, 100.0)])
    def test_gaussian_relative_accuracy(self, r, t):
        assert kernel_eval(r, t, 1.0) == pytest.approx(heat_kernel(r, t), rel=1e-8)

    def test_origin_value_alpha_075(self):
        # (1/2pi) int e^{-r^1.5} r dr, with u = r^1.5, is Gamma(4/3)/(3 pi)
        assert kernel_eval(0.0, 1.0, 0.75) == pytest.approx(special.gamma(4 / 3) / (3 * math.pi), rel=1e-10)

    @pytest.mark.parametrize("alpha", [0.55, 0.6, 0.8, 0.95])
    def test_origin_value_general(self, alpha):
        t = 3.0
        expected = special.gamma(1 / alpha) / (2 * alpha) / (2 * math.pi) * t ** (-1 / alpha)
        assert kernel_eval(0.0, t, alpha) == pytest.approx(expected, rel=1e-10)

    @pytest.mark.parametrize("alpha", [0.6, 0.75])
    def test_independent_quadrature(self, alpha):
        r = 1.7
        direct, _ = integrate.quad(
            lambda rho: math.exp(-(rho ** (2 * alpha))) * special.j0(rho * r) * rho, 0, 200, limit=1000
        )
        assert kernel_eval(r, 1.0, alpha) == pytest.approx(direct / (2 * math.pi), rel=1e-8)

    @settings(max_examples=20, deadline=None)
    @given(x=st.floats(0.0, 20.0), t=st.floats(0.01, 100.0), alpha=st.sampled_from([0.6, 0.75, 0.9, 1.0]))
    def test_self_similarity(self, x, t, alpha):
        lhs = kernel_eval(x, t, alpha)
        rhs = t ** (-1 / alpha) * kernel_eval(x * t ** (-1 / (2 * alpha)), 1.0, alpha)
        assert lhs == pytest.approx(rhs, rel=1e-8)

    def test_rejects_bad_arguments(self):
        with pytest.raises(ValueError):
            kernel_eval(1.0, 0.0, 0.75)
        with pytest.raises(ValueError):
            kernel_eval(1.0, 1.0, 0.5)

    def test_unreachable_tolerance_reported(self):
        with pytest.raises(KernelQuadratureError):
            kernel_eval(50.0, 1.0, 0.6, tol=1e-300)


class TestKernelProfile:
    def test_matches_gaussian(self):
        r = np.linspace(0, 12, 40)
        for t in (0.5, 4.0):
            np.testing.assert_allclose(kernel_profile(r, t, 1.0), heat_kernel(r, t), rtol=1e-8, atol=1e-14)

    def test_radial_and_time_derivatives_alpha_one(self):
        r, t = np.linspace(0.1, 6, 25), 1.5
        k = heat_kernel(r, t)
        np.testing.assert_allclose(kernel_profile(r, t, 1.0, radial_derivative=True), -r / (2 * t) * k, atol=1e-12)
        np.testing.assert_allclose(kernel_profile(r, t, 1.0, j=1), k * (r**2 / (4 * t**2) - 1 / t), atol=1e-12)

    @pytest.mark.parametrize("alpha", [0.6, 0.75, 0.9])
    def test_agrees_with_adaptive_quadrature(self, alpha):
        r = np.array([0.0, 0.3, 1.0, 2.5, 7.0])
        expected = [kernel_eval(x, 2.0, alpha) for x in r]
        np.testing.assert_allclose(kernel_profile(r, 2.0, alpha), expected, rtol=1e-8, atol=1e-13)

    @pytest.mark.parametrize("alpha", [0.6, 0.75])
    def test_far_field_series(self, alpha):
        r = 60.0
        series = sum(tail_coefficient(alpha, k) * r ** (-2 * alpha * k - 2) for k in range(1, 9))
        assert float(kernel_profile(np.array([r]), 1.0, alpha)[0]) == pytest.approx(series, rel=1e-6)


class TestTailCoefficient:
    def test_poisson_limit(self):
        assert tail_coefficient(0.5, 1) == pytest.approx(1 / (2 * math.pi), rel=1e-14)

    def test_vanishes_for_integer_products(self):
        assert tail_coefficient(1.0, 1) == 0.0
        assert tail_coefficient(0.75, 4) == 0.0

    def test_first_coefficient_positive(self):
        for alpha in (0.6, 0.75, 0.9):
            assert tail_coefficient(alpha, 1) > 0


class TestMassAndNorms:
    @pytest.mark.parametrize("alpha", [0.6, 0.75, 0.9, 1.0])
    @pytest.mark.parametrize("t", [0.01, 1.0, 100.0])
    def test_unit_mass(self, alpha, t):
        assert kernel_mass(t, alpha) == pytest.approx(1.0, abs=1e-6)

    @pytest.mark.parametrize("alpha", [0.6, 0.8])
    def test_positive_kernel_has_unit_l1_norm(self, alpha):
        assert kernel_lp_norm(2.0, alpha, 1) == pytest.approx(1.0, abs=1e-6)

    def test_heat_kernel_norms(self):
        t = 2.0
        assert kernel_lp_norm(t, 1.0, 2) == pytest.approx(math.sqrt(1 / (8 * math.pi * t)), rel=1e-8)
        assert kernel_lp_norm(t, 1.0, math.inf) == pytest.approx(1 / (4 * math.pi * t), rel=1e-10)
        assert kernel_lp_norm(t, 1.0, 1, beta=(1, 0)) == pytest.approx(1 / math.sqrt(math.pi * t), rel=1e-8)
        # E|X1| for a centered normal of variance 2t
        assert kernel_lp_norm(t, 1.0, 1, gamma=(1, 0)) == pytest.approx(2 * math.sqrt(t / math.pi), rel=1e-8)

    def test_second_derivatives_unsupported(self):
        with pytest.raises(ValueError):
            kernel_lp_norm(1.0, 0.75, 1, beta=(1, 1))

    def test_non_integrable_tail_is_infinite(self):
        # |x|^2 K ~ r^{-2 alpha} is not in L^1 for alpha < 1
        assert kernel_lp_norm(1.0, 0.75, 1, gamma=(2, 0)) == math.inf


class TestScalingProbe:
    times = np.geomspace(1, 100, 9)

    @pytest.mark.parametrize("alpha", [0.6, 0.75, 1.0])
    def test_l1_and_l2_exponents(self, alpha):
        l1 = kernel_norm_scaling_probe((0, 0), (0, 0), 0, 1, alpha, self.times)
        l2 = kernel_norm_scaling_probe((0, 0), (0, 0), 0, 2, alpha, self.times)
        assert l1.predicted_exponent == 0
        assert l1.fitted_exponent == pytest.approx(0, abs=0.02)
        assert l2.predicted_exponent == pytest.approx(-1 / (2 * alpha))
        assert l2.fitted_exponent == pytest.approx(l2.predicted_exponent, abs=0.02)

    def test_gradient_of_heat_kernel(self):
        rep = kernel_norm_scaling_probe((0, 0), (1, 0), 0, 1, 1.0, self.times)
        assert rep.fitted_exponent == pytest.approx(-0.5, abs=1e-6)
        assert rep.probe_id == "gamma=0:0;beta=1:0;j=0;p=1"

    def test_time_derivative(self):
        rep = kernel_norm_scaling_probe((0, 0), (0, 0), 1, 1, 0.75, self.times)
        assert rep.fitted_exponent == pytest.approx(-1.0, abs=0.02)

    def test_hypothesis_enforced(self):
        with pytest.raises(ValueError, match="gamma"):
            kernel_norm_scaling_probe((2, 0), (0, 0), 0, 1, 0.75, self.times)

    def test_two_decades_required(self):
        with pytest.raises(ValueError, match="decades"):
            kernel_norm_scaling_probe((0, 0), (0, 0), 0, 1, 0.75, np.geomspace(1, 50, 5))


class TestSmoothingProbe:
    times = np.geomspace(1, 1000, 13)

    def test_gaussian_closed_form(self):
        # K(t) f for f = exp(-r^2/2w^2) at alpha = 1 is a Gaussian of variance w^2 + 2t
        w = 1.0
        rep = smoothing_estimate_probe(1, 2, 1.0, [gaussian_test_function(w)], self.times)
        s = np.sqrt(w**2 + 2 * self.times)
        np.testing.assert_allclose(rep.measured_norms, math.sqrt(math.pi) / (2 * math.pi * s), rtol=1e-8)
        assert rep.predicted_exponent == pytest.approx(-0.5)
        assert rep.fitted_exponent == pytest.approx(-0.5, abs=0.01)

    @pytest.mark.parametrize("p", [1, 2])
    def test_contraction_when_p_equals_q(self, p):
        tests = [gaussian_test_function(1.0), exponential_test_function(1.0)]
        rep = smoothing_estimate_probe(p, p, 0.75, tests, self.times)
        # 2e-6 covers the radial quadrature and far-field continuation
        assert np.all(rep.measured_norms <= 1 + 2e-6)

    @pytest.mark.parametrize("alpha", [0.6, 0.9])
    def test_l1_mass_preserved(self, alpha):
        # K is positive with unit mass, so ||K(t) f||_1 = ||f||_1 for f >= 0
        tests = [gaussian_test_function(1.0), exponential_test_function(1.0)]
        rep = smoothing_estimate_probe(1, 1, alpha, tests, np.geomspace(0.1, 100, 4))
        np.testing.assert_allclose(rep.measured_norms, 1.0, atol=2e-6)

    def test_sup_norm_exponent(self):
        rep = smoothing_estimate_probe(1, math.inf, 0.75, [gaussian_test_function(1.0)], self.times)
        assert rep.predicted_exponent == pytest.approx(-4 / 3)
        assert rep.fitted_exponent == pytest.approx(-4 / 3, abs=0.02)

    def test_running_sup_stable(self):
        tests = [gaussian_test_function(1.0), exponential_test_function(1.0)]
        rep = smoothing_estimate_probe(1, 2, 0.6, tests, self.times)
        assert np.all(np.isfinite(rep.running_sup))
        assert rep.decade_variation() < 0.1

    def test_gradient_variant_exponent(self):
        rep = smoothing_estimate_probe(1, 2, 1.0, [gaussian_test_function(1.0)], self.times, gradient_variant=True)
        assert rep.predicted_exponent == pytest.approx(-1.0)
        assert rep.fitted_exponent == pytest.approx(-1.0, abs=0.02)

    def test_p_above_q_rejected(self):
        with pytest.raises(ValueError):
            smoothing_estimate_probe(2, 1, 0.75, [gaussian_test_function()], self.times)


class TestReport:
    def test_times_must_increase(self):
        with pytest.raises(ValueError):
            KernelProbeReport(0.75, "x", np.array([1.0, 1.0]), np.ones(2), 0.0, 0.0, 1.0)

    def test_decade_variation(self):
        times = np.geomspace(1, 1000, 4)
        rep = KernelProbeReport(0.75, "x", times, np.ones(4), 0.0, 0.0, 1.0, normalized=np.array([1.0, 2.0, 1.5, 2.2]))
        np.testing.assert_array_equal(rep.running_sup, [1.0, 2.0, 2.0, 2.2])
        assert rep.decade_variation() == pytest.approx(0.1)


class TestBilinearProbe:
    @staticmethod
    def _theta(n):
        grid = GridSpec(n, 32 * math.pi)
        return generate(ProfileSpec(ProfileKind.GAUSSIAN, length_scale=math.pi, aspect=0.5), grid)

    def test_zero_field(self):
        assert bilinear_estimate_probe(1.0, 0.5, 0.5, 1.0, SpectralField.zeros(GridSpec(16, 1.0))) == 0.0

    def test_finite_and_refinement_stable(self):
        coarse = bilinear_estimate_probe(1.0, 0.5, 0.5, 1.0, self._theta(64))
        fine = bilinear_estimate_probe(1.0, 0.5, 0.5, 1.0, self._theta(128))
        assert 0 < coarse < 10
        assert abs(fine / coarse - 1) < 0.05

    def test_constraints(self):
        theta = self._theta(32)
        with pytest.raises(ValueError):
            bilinear_estimate_probe(1.5, 0.5, 0.5, 1.0, theta)
        with pytest.raises(ValueError):
            bilinear_estimate_probe(1.0, 1.0, 1.0, 1.0, theta)
