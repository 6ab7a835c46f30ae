"""
Initial data generators and the lambda-rescaled family
theta0^lambda(x) = lambda theta0(lambda x), whose L^2 norm is scale invariant
in two dimensions while the linear decay slows down as lambda -> 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Sequence

import numpy as np

from .evolution import SimConfig, simulate
from .spectral import GridSpec, SpectralField, forward_transform, lp_norm, parseval_energy

__all__ = [
    "ProfileKind",
    "ProfileSpec",
    "generate",
    "lambda_rescale",
    "slow_decay_experiment",
    "gap_slope",
]


class ProfileKind(str, Enum):
    GAUSSIAN = "gaussian"
    RING_SPECTRUM_RANDOM = "ring_spectrum_random"
    SINGLE_MODE = "single_mode"
    ALGEBRAIC_BUMP = "algebraic_bump"


@dataclass(frozen=True)
class ProfileSpec:
    """Initial profile description.

    Attributes:
        kind: profile family.
        amplitude: peak value (gaussian, algebraic_bump), mode amplitude
            (single_mode) or RMS value (ring_spectrum_random).
        length_scale: Gaussian width, bump radius, or inverse inner radius of
            the random ring 1/length_scale <= |xi| <= 2/length_scale.
        seed: random seed for ring_spectrum_random.
        target_norms: at most one (p, value) pair; the field is rescaled so
            that ||theta0||_{L^p} = value.
        aspect: y-axis stretch of the Gaussian. Radial data has
            u . grad theta = 0, so aspect != 1 is needed for a genuinely
            nonlinear run.
        mode: integer wavenumber (k1, k2) of single_mode.
    """

    kind: ProfileKind
    amplitude: float = 1.0
    length_scale: float = 1.0
    seed: int = 0
    target_norms: tuple[tuple[float, float], ...] = ()
    aspect: float = 1.0
    mode: tuple[int, int] = (1, 0)

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", ProfileKind(self.kind))
        if not math.isfinite(self.amplitude):
            raise ValueError("amplitude must be finite")
        if not self.length_scale > 0:
            raise ValueError("length_scale must be positive")
        if not self.aspect > 0:
            raise ValueError("aspect must be positive")
        targets = tuple((float(p), float(v)) for p, v in self.target_norms)
        if len(targets) > 1:
            raise ValueError("a single rescaling factor can meet at most one target norm")
        for p, v in targets:
            if p < 1 or v <= 0:
                raise ValueError(f"target norm needs p >= 1 and a positive value, got ({p}, {v})")
        object.__setattr__(self, "target_norms", targets)
        object.__setattr__(self, "mode", tuple(int(k) for k in self.mode))


def _check_support(spec: ProfileSpec, grid: GridSpec) -> None:
    if spec.kind is ProfileKind.SINGLE_MODE:
        return
    if spec.length_scale > grid.box_length / 8 * (1 + 1e-12):
        raise ValueError(
            f"length_scale {spec.length_scale:g} exceeds box_length/8 = {grid.box_length / 8:g}; "
            "periodic images would not be negligible"
        )


def _single_mode(spec: ProfileSpec, grid: GridSpec) -> SpectralField:
    k1, k2 = spec.mode
    n = grid.n_points
    if (k1, k2) == (0, 0) or max(abs(k1), abs(k2)) >= n // 2:
        raise ValueError(f"mode {spec.mode} must be nonzero and below the Nyquist index {n // 2}")
    c = np.zeros(grid.shape, dtype=np.complex128)
    c[k1 % n, k2 % n] = spec.amplitude / 2
    c[-k1 % n, -k2 % n] = spec.amplitude / 2
    return SpectralField(c, grid)


def _ring_modes(grid: GridSpec, length_scale: float) -> list[tuple[int, int]]:
    """Half-plane integer modes with 1 <= length_scale |xi| <= 2, in a fixed
    order that does not depend on the resolution."""
    dk = 2 * math.pi / grid.box_length
    kmax = int(math.ceil(2 / (length_scale * dk)))
    modes = []
    for k1 in range(0, kmax + 1):
        for k2 in range(-kmax, kmax + 1):
            if k1 == 0 and k2 <= 0:
                continue
            r = length_scale * dk * math.hypot(k1, k2)
            if 1 <= r <= 2:
                modes.append((k1, k2))
    return modes


def _ring_spectrum(spec: ProfileSpec, grid: GridSpec) -> SpectralField:
    modes = _ring_modes(grid, spec.length_scale)
    if not modes:
        raise ValueError("no box modes fall in the ring 1 <= length_scale |xi| <= 2")
    n = grid.n_points
    if max(max(abs(a), abs(b)) for a, b in modes) * 3 >= n:
        raise ValueError("ring spectrum extends beyond the dealiased band; increase n_points or length_scale")
    rng = np.random.default_rng(spec.seed)
    draws = rng.standard_normal((len(modes), 2))
    c = np.zeros(grid.shape, dtype=np.complex128)
    for (k1, k2), (re, im) in zip(modes, draws):
        c[k1 % n, k2 % n] = re + 1j * im
        c[-k1 % n, -k2 % n] = re - 1j * im
    rms = math.sqrt(float(np.sum(np.abs(c) ** 2)))
    return SpectralField(c * (spec.amplitude / rms), grid)


def generate(spec: ProfileSpec, grid: GridSpec) -> SpectralField:
    """Sample a profile on the grid, centered at the box center.

    Raises:
        ValueError: if length_scale > box_length / 8 or the profile cannot be
            represented on the grid.
    """
    _check_support(spec, grid)
    if spec.kind is ProfileKind.SINGLE_MODE:
        field = _single_mode(spec, grid)
    elif spec.kind is ProfileKind.RING_SPECTRUM_RANDOM:
        field = _ring_spectrum(spec, grid)
    else:
        x1, x2 = grid.mesh
        c = grid.center
        r2 = (x1 - c) ** 2 + ((x2 - c) / spec.aspect) ** 2
        ell2 = spec.length_scale**2
        if spec.kind is ProfileKind.GAUSSIAN:
            values = spec.amplitude * np.exp(-r2 / (2 * ell2))
        else:
            values = spec.amplitude * (1 + r2 / ell2) ** -1.5
        field = forward_transform(values, grid)
    for p, value in spec.target_norms:
        current = lp_norm(field, p)
        if current == 0:
            raise ValueError("cannot rescale a zero field")
        field = field * (value / current)
    return field


def lambda_rescale(theta0: SpectralField, lam: float) -> SpectralField:
    """x -> lam theta0(c + lam (x - c)), dilation about the box center c.

    The Fourier series of theta0 is evaluated at the scaled points; the
    evaluation is separable, so it costs two dense n x n matrix products.

    Raises:
        ValueError: unless 0 < lam <= 1.
    """
    if not (0 < lam <= 1):
        raise ValueError(f"lambda must lie in (0, 1], got {lam}")
    grid = theta0.grid
    if lam == 1:
        return theta0.with_coefficients(theta0.coefficients.copy())
    c = grid.center
    y = c + lam * (grid.coordinates - c)
    xi = 2 * math.pi / grid.box_length * grid.k_index
    basis = np.exp(1j * np.outer(y, xi))
    values = (basis @ theta0.coefficients @ basis.T).real
    return forward_transform(lam * values, grid)


def slow_decay_experiment(
    theta0: SpectralField,
    lambdas: Sequence[float],
    T: float,
    config: SimConfig,
) -> list[tuple[float, float]]:
    """ratio(lambda) = ||theta^lambda(T)||_{L^2} / ||theta0^lambda||_{L^2} for each lambda.

    ``config`` supplies alpha, dt, integrator, dealiasing and the nonlinear
    switch; its horizon and record times are replaced by T.
    """
    lams = [float(v) for v in lambdas]
    if not lams:
        raise ValueError("need at least one lambda")
    if any(b >= a for a, b in zip(lams, lams[1:])):
        raise ValueError("lambdas must be strictly decreasing")
    if not T > 0:
        raise ValueError(f"T must be positive, got {T}")
    cfg = replace(config, t_end=float(T), record_times=(0.0, float(T)), dt=min(config.dt, T / 2))
    out = []
    for lam in lams:
        start = lambda_rescale(theta0, lam)
        traj = simulate(start, cfg)
        ratio = math.sqrt(parseval_energy(traj.samples[-1][1]) / parseval_energy(start))
        out.append((lam, ratio))
    return out


def gap_slope(series: Sequence[tuple[float, float]]) -> float:
    """Least-squares slope of log(1 - ratio) against log(lambda)."""
    lam = np.array([s[0] for s in series])
    gap = 1.0 - np.array([s[1] for s in series])
    if lam.size < 2 or np.any(gap <= 0):
        raise ValueError("need at least two lambdas with positive gaps")
    slope, _ = np.polyfit(np.log(lam), np.log(gap), 1)
    return float(slope)
