import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import brute_force_dft, random_field
from sqg_decay.spectral import (
    Dealias,
    GridSpec,
    SpectralField,
    forward_transform,
    fractional_symbol,
    gradient,
    hermitian_defect,
    inner_product,
    inverse_transform,
    lp_norm,
    nonlinear_term,
    parseval_energy,
    riesz_velocity,
)

seeds = st.integers(min_value=0, max_value=2**31 - 1)
sizes = st.sampled_from([8, 16, 32, 64])
lengths = st.sampled_from([2 * math.pi, 1.0, 64 * math.pi])


class TestGridSpec:
    def test_rejects_odd_or_small(self):
        with pytest.raises(ValueError):
            GridSpec(9, 1.0)
        with pytest.raises(ValueError):
            GridSpec(6, 1.0)
        with pytest.raises(ValueError):
            GridSpec(8, 0.0)

    def test_lattice_symmetric_with_single_zero_mode(self):
        g = GridSpec(16, 3.0)
        assert np.count_nonzero(g.xi_abs == 0) == 1
        k = g.k_index
        assert k.min() == -8 and k.max() == 7

    def test_two_thirds_mask_rule(self):
        g = GridSpec(8, 2 * math.pi)
        k = np.abs(g.k_index)
        kept = (3 * k[:, None] < 8) & (3 * k[None, :] < 8)
        np.testing.assert_array_equal(g.two_thirds_mask, kept)


class TestForwardTransform:
    def test_constant_has_only_zero_mode(self, grid64):
        c = forward_transform(np.full(grid64.shape, 3.5), grid64).coefficients
        assert c[0, 0] == pytest.approx(3.5, rel=1e-15)
        c[0, 0] = 0
        assert np.max(np.abs(c)) < 1e-15

    def test_single_harmonic_gives_two_modes(self):
        g = GridSpec(32, 5.0)
        x1, _ = g.mesh
        c = forward_transform(np.cos(2 * math.pi * x1 / g.box_length), g).coefficients
        assert c[1, 0] == pytest.approx(0.5, abs=1e-15)
        assert c[-1, 0] == pytest.approx(0.5, abs=1e-15)
        c[1, 0] = c[-1, 0] = 0
        assert np.max(np.abs(c)) < 1e-15

    def test_matches_brute_force_dft(self, grid8):
        values = np.random.default_rng(3).standard_normal(grid8.shape)
        c = forward_transform(values, grid8).coefficients
        np.testing.assert_allclose(c, brute_force_dft(values, grid8.box_length), rtol=0, atol=1e-12)

    def test_shape_mismatch_rejected(self, grid8):
        with pytest.raises(ValueError, match="shape"):
            forward_transform(np.zeros((8, 16)), grid8)

    def test_complex_input_rejected(self, grid8):
        with pytest.raises(ValueError, match="real"):
            forward_transform(np.zeros(grid8.shape, dtype=complex), grid8)

    @settings(max_examples=30, deadline=None)
    @given(seed=seeds, n=sizes, length=lengths)
    def test_round_trip_and_parseval(self, seed, n, length):
        g = GridSpec(n, length)
        values = np.random.default_rng(seed).standard_normal(g.shape)
        field = forward_transform(values, g)
        back = inverse_transform(field)
        assert np.max(np.abs(back - values)) <= 1e-12 * np.max(np.abs(values))
        assert parseval_energy(field) == pytest.approx(lp_norm(field, 2) ** 2, rel=1e-12)
        assert hermitian_defect(field) == 0.0


class TestFractionalSymbol:
    def test_s2_is_laplacian_symbol(self, grid64):
        np.testing.assert_allclose(fractional_symbol(2, grid64), grid64.xi1**2 + grid64.xi2**2, rtol=1e-14)

    def test_s0_is_identity(self, grid64):
        np.testing.assert_array_equal(fractional_symbol(0, grid64), np.ones(grid64.shape))

    def test_euclidean_norm_at_3_4(self):
        g = GridSpec(16, 2 * math.pi)
        assert fractional_symbol(1, g)[3, 4] == pytest.approx(5.0, rel=1e-15)

    def test_zero_mode_vanishes_for_positive_s(self, grid64):
        assert fractional_symbol(1.5, grid64)[0, 0] == 0.0

    def test_negative_power_rejected(self, grid64):
        with pytest.raises(ValueError):
            fractional_symbol(-1, grid64)


class TestRieszVelocity:
    def test_cosine_gives_sine(self, grid64):
        x1, _ = grid64.mesh
        vel = riesz_velocity(forward_transform(np.cos(x1), grid64))
        assert np.max(np.abs(vel.u1.to_physical())) < 1e-14
        np.testing.assert_allclose(vel.u2.to_physical(), np.sin(x1), atol=1e-14)

    def test_zero_mode_only_gives_zero(self, grid64):
        vel = riesz_velocity(forward_transform(np.full(grid64.shape, 2.0), grid64))
        assert not np.any(vel.u1.coefficients) and not np.any(vel.u2.coefficients)

    def test_divergence_free_on_8x8(self, grid8):
        vel = riesz_velocity(random_field(grid8, 11))
        assert vel.divergence_defect() < 1e-14

    @settings(max_examples=20, deadline=None)
    @given(seed=seeds, n=sizes)
    def test_unit_modulus_multiplier(self, seed, n):
        g = GridSpec(n, 2 * math.pi)
        theta = random_field(g, seed)
        # Nyquist modes are removed from the velocity, so compare with them removed too.
        keep = g.nyquist_free & (g.xi_abs > 0)
        reduced = theta.with_coefficients(np.where(keep, theta.coefficients, 0.0))
        vel = riesz_velocity(theta)
        energy_u = parseval_energy(vel.u1) + parseval_energy(vel.u2)
        assert energy_u == pytest.approx(parseval_energy(reduced), rel=1e-12)
        assert vel.divergence_defect() < 1e-12
        assert hermitian_defect(vel.u1) == 0.0 and hermitian_defect(vel.u2) == 0.0


def _convolution_oracle(theta: SpectralField) -> np.ndarray:
    """div(u theta) by direct convolution over retained modes, no FFTs."""
    g = theta.grid
    n = g.n_points
    dk = 2 * math.pi / g.box_length
    kept = [int(k) for k in g.k_index if 3 * abs(k) < n]
    modes = [(a, b) for a in kept for b in kept]
    c = {m: theta.coefficients[m[0] % n, m[1] % n] for m in modes}

    def vel(m):
        if m == (0, 0):
            return 0j, 0j
        x1, x2 = dk * m[0], dk * m[1]
        r = math.hypot(x1, x2)
        return 1j * x2 / r * c[m], -1j * x1 / r * c[m]

    out = np.zeros(g.shape, dtype=np.complex128)
    for k in modes:
        f1 = f2 = 0j
        for p in modes:
            q = (k[0] - p[0], k[1] - p[1])
            if q in c:
                u1, u2 = vel(p)
                f1 += u1 * c[q]
                f2 += u2 * c[q]
        out[k[0] % n, k[1] % n] = 1j * dk * (k[0] * f1 + k[1] * f2)
    return out


class TestNonlinearTerm:
    def test_single_mode_is_stationary(self, grid64):
        x1, _ = grid64.mesh
        nl = nonlinear_term(forward_transform(np.cos(x1), grid64))
        assert np.max(np.abs(nl.coefficients)) < 1e-15

    def test_matches_convolution_oracle_8x8(self, grid8):
        theta = random_field(grid8, 5)
        expected = _convolution_oracle(theta)
        np.testing.assert_allclose(nonlinear_term(theta).coefficients, expected, rtol=0, atol=1e-10)

    def test_matches_convolution_oracle_other_box(self):
        g = GridSpec(8, 3.0)
        theta = random_field(g, 6)
        np.testing.assert_allclose(nonlinear_term(theta).coefficients, _convolution_oracle(theta), atol=1e-10)

    def test_band_limited_input_needs_no_dealiasing(self):
        g = GridSpec(32, 2 * math.pi)
        c = np.zeros(g.shape, dtype=complex)
        rng = np.random.default_rng(0)
        # modes with |k| <= 3 produce products with |k| <= 6, far from aliasing
        for a in range(-3, 4):
            for b in range(-3, 4):
                c[a % 32, b % 32] = rng.standard_normal() + 1j * rng.standard_normal()
        c = 0.5 * (c + np.conj(g.negate_index(c)))
        theta = SpectralField(c, g)
        np.testing.assert_allclose(
            nonlinear_term(theta, Dealias.NONE).coefficients, nonlinear_term(theta).coefficients, atol=1e-13
        )

    @settings(max_examples=25, deadline=None)
    @given(seed=seeds, n=st.sampled_from([16, 32, 64]), length=lengths)
    def test_skew_symmetry_and_reality(self, seed, n, length):
        g = GridSpec(n, length)
        theta = random_field(g, seed)
        nl = nonlinear_term(theta)
        assert abs(inner_product(nl, theta)) <= 1e-10 * parseval_energy(theta)
        assert hermitian_defect(nl) == 0.0

    def test_equals_advective_form_for_retained_data(self, grid64):
        theta = random_field(grid64, 2, smooth=True)
        vel = riesz_velocity(theta)
        g1, g2 = gradient(theta)
        advect = vel.u1.to_physical() * g1.to_physical() + vel.u2.to_physical() * g2.to_physical()
        adv = forward_transform(advect, grid64).coefficients
        np.testing.assert_allclose(
            nonlinear_term(theta).coefficients, np.where(grid64.two_thirds_mask, adv, 0), atol=1e-12
        )


class TestLpNorm:
    def test_constant(self, grid64):
        assert lp_norm(forward_transform(np.full(grid64.shape, 3.0), grid64), 2) == pytest.approx(6 * math.pi, rel=1e-14)

    def test_cosine(self, grid64):
        x1, _ = grid64.mesh
        theta = forward_transform(np.cos(x1), grid64)
        assert lp_norm(theta, 2) == pytest.approx(math.pi * math.sqrt(2), rel=1e-13)
        assert lp_norm(theta, math.inf) == pytest.approx(1.0, rel=1e-15)

    def test_p_below_one_rejected(self, grid64):
        with pytest.raises(ValueError):
            lp_norm(random_field(grid64, 0), 0.5)

    def test_physical_array_needs_grid(self, grid64):
        with pytest.raises(ValueError):
            lp_norm(np.ones(grid64.shape), 2)

    def test_zero_field(self, grid64):
        assert lp_norm(SpectralField.zeros(grid64), 3) == 0.0

    @settings(max_examples=20, deadline=None)
    @given(seed=seeds, p=st.floats(min_value=1, max_value=40))
    def test_monotone_under_normalized_measure(self, seed, p):
        # Jensen: (avg |f|^p)^(1/p) is non-decreasing in p.
        g = GridSpec(16, 1.0)
        theta = random_field(g, seed)
        assert lp_norm(theta, p) <= lp_norm(theta, p + 1) * (1 + 1e-12)
        assert lp_norm(theta, p + 1) <= lp_norm(theta, math.inf) * (1 + 1e-12)
