"""
Fourier representation of real scalar fields on the periodic square [0, L)^2.

Coefficients follow the Fourier-series convention

    f(x) = sum_k c_k exp(i xi_k . x),    c_k = n^-2 sum_j f(x_j) exp(-i xi_k . x_j),

with xi_k = 2 pi k / L, so a constant field has c_0 equal to its value and
Parseval reads  int |f|^2 dx = L^2 sum_k |c_k|^2.

Arrays are stored in FFT order on both axes (axis 0 is x1 / k1, axis 1 is
x2 / k2). Hermitian symmetry c(-k) = conj(c(k)) is enforced bit-exactly after
every forward transform; all multipliers used here are either even and real or
odd and imaginary with the Nyquist row/column removed, so symmetry survives
every operation without further correction.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from enum import Enum
from functools import cached_property

import numpy as np
import scipy.fft as sfft

__all__ = [
    "Dealias",
    "GridSpec",
    "SpectralField",
    "VelocityField",
    "forward_transform",
    "inverse_transform",
    "fractional_symbol",
    "riesz_velocity",
    "gradient",
    "nonlinear_term",
    "lp_norm",
    "parseval_energy",
    "inner_product",
    "hermitian_defect",
]


def _workers() -> int:
    try:
        return max(1, int(os.environ.get("SQG_DECAY_THREADS", "1")))
    except ValueError:
        return 1


class Dealias(str, Enum):
    """Dealiasing rule for quadratic products."""

    TWO_THIRDS = "two_thirds"
    NONE = "none"

    @classmethod
    def parse(cls, value: "Dealias | str | None") -> "Dealias":
        if value is None:
            return cls.NONE
        if isinstance(value, cls):
            return value
        aliases = {"2/3": cls.TWO_THIRDS, "two_thirds": cls.TWO_THIRDS, "none": cls.NONE}
        try:
            return aliases[str(value).lower()]
        except KeyError:
            raise ValueError(f"unknown dealias rule {value!r}; use 'two_thirds' or 'none'") from None


@dataclass(frozen=True)
class GridSpec:
    """Uniform n x n grid on the periodic box [0, L)^2.

    Attributes:
        n_points: points per axis, even and at least 8.
        box_length: side length L of the box.
    """

    n_points: int
    box_length: float

    def __post_init__(self) -> None:
        if int(self.n_points) != self.n_points:
            raise ValueError(f"n_points must be an integer, got {self.n_points!r}")
        if self.n_points < 8 or self.n_points % 2:
            raise ValueError(f"n_points must be even and >= 8, got {self.n_points}")
        if not (np.isfinite(self.box_length) and self.box_length > 0):
            raise ValueError(f"box_length must be positive, got {self.box_length}")
        object.__setattr__(self, "n_points", int(self.n_points))
        object.__setattr__(self, "box_length", float(self.box_length))

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_points, self.n_points)

    @property
    def spacing(self) -> float:
        return self.box_length / self.n_points

    @property
    def cell_area(self) -> float:
        return self.spacing**2

    @cached_property
    def k_index(self) -> np.ndarray:
        """Integer wavenumbers in FFT order, -n/2 <= k < n/2."""
        n = self.n_points
        return np.fft.fftfreq(n, d=1.0 / n).astype(np.int64)

    @cached_property
    def xi1(self) -> np.ndarray:
        return np.broadcast_to((2 * np.pi / self.box_length) * self.k_index[:, None], self.shape)

    @cached_property
    def xi2(self) -> np.ndarray:
        return np.broadcast_to((2 * np.pi / self.box_length) * self.k_index[None, :], self.shape)

    @cached_property
    def xi_abs(self) -> np.ndarray:
        return np.sqrt(self.xi1**2 + self.xi2**2)

    @cached_property
    def nyquist_free(self) -> np.ndarray:
        """False on the row and column holding the unpaired Nyquist wavenumber."""
        k = self.k_index
        keep = k != -self.n_points // 2
        return keep[:, None] & keep[None, :]

    @cached_property
    def xi1_odd(self) -> np.ndarray:
        """xi1 with the Nyquist row/column zeroed; used for odd (derivative-like) multipliers."""
        return np.where(self.nyquist_free, self.xi1, 0.0)

    @cached_property
    def xi2_odd(self) -> np.ndarray:
        return np.where(self.nyquist_free, self.xi2, 0.0)

    @cached_property
    def two_thirds_mask(self) -> np.ndarray:
        # 3|k| < n keeps triple products of retained modes alias-free.
        keep = 3 * np.abs(self.k_index) < self.n_points
        return keep[:, None] & keep[None, :]

    def dealias_mask(self, rule: Dealias | str | None) -> np.ndarray | None:
        if Dealias.parse(rule) is Dealias.TWO_THIRDS:
            return self.two_thirds_mask
        return None

    @cached_property
    def coordinates(self) -> np.ndarray:
        """1D grid coordinates x_j = j L / n."""
        return np.arange(self.n_points) * self.spacing

    @cached_property
    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        x = self.coordinates
        return np.meshgrid(x, x, indexing="ij")

    @property
    def center(self) -> float:
        """Box center L/2; a grid point because n is even."""
        return 0.5 * self.box_length

    def negate_index(self, arr: np.ndarray) -> np.ndarray:
        """Return arr evaluated at -k (index i -> -i mod n on both axes)."""
        return np.roll(arr[::-1, ::-1], 1, axis=(0, 1))


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Modal coefficients of a real field on ``grid`` (FFT order, Fourier-series normalization)."""

    coefficients: np.ndarray
    grid: GridSpec

    def __post_init__(self) -> None:
        c = np.asarray(self.coefficients, dtype=np.complex128)
        if c.shape != self.grid.shape:
            raise ValueError(f"coefficient shape {c.shape} does not match grid {self.grid.shape}")
        object.__setattr__(self, "coefficients", c)

    @classmethod
    def zeros(cls, grid: GridSpec) -> "SpectralField":
        return cls(np.zeros(grid.shape, dtype=np.complex128), grid)

    def to_physical(self) -> np.ndarray:
        return inverse_transform(self)

    def with_coefficients(self, coefficients: np.ndarray) -> "SpectralField":
        return SpectralField(coefficients, self.grid)

    def __add__(self, other: "SpectralField") -> "SpectralField":
        _same_grid(self, other)
        return self.with_coefficients(self.coefficients + other.coefficients)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        _same_grid(self, other)
        return self.with_coefficients(self.coefficients - other.coefficients)

    def __mul__(self, scalar: float) -> "SpectralField":
        return self.with_coefficients(self.coefficients * float(scalar))

    __rmul__ = __mul__

    @property
    def mean(self) -> float:
        return float(self.coefficients[0, 0].real)

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.coefficients)))


@dataclass(frozen=True, eq=False)
class VelocityField:
    u1: SpectralField
    u2: SpectralField

    def divergence_defect(self) -> float:
        """max_k |xi1 u1_k + xi2 u2_k|; zero for a spectrally divergence-free field."""
        g = self.u1.grid
        return float(np.max(np.abs(g.xi1 * self.u1.coefficients + g.xi2 * self.u2.coefficients)))


def _same_grid(a: SpectralField, b: SpectralField) -> None:
    if a.grid != b.grid:
        raise ValueError("fields live on different grids")


def _symmetrize(c: np.ndarray, grid: GridSpec) -> np.ndarray:
    # (a + conj b)/2 and conj((b + conj a)/2) agree bitwise, so the result is exactly Hermitian.
    return 0.5 * (c + np.conj(grid.negate_index(c)))


def _forward(values: np.ndarray, grid: GridSpec) -> np.ndarray:
    n = grid.n_points
    c = sfft.fft2(values, workers=_workers()) / (n * n)
    return _symmetrize(c, grid)


def _inverse(c: np.ndarray, grid: GridSpec) -> np.ndarray:
    n = grid.n_points
    half = c[:, : n // 2 + 1] * (n * n)
    return sfft.irfft2(half, s=(n, n), workers=_workers())


def forward_transform(physical_values: np.ndarray, grid: GridSpec) -> SpectralField:
    """Fourier coefficients of a real array sampled on ``grid``.

    Raises:
        ValueError: if the array is not real or its shape differs from the grid.
    """
    values = np.asarray(physical_values)
    if values.shape != grid.shape:
        raise ValueError(f"array shape {values.shape} does not match grid {grid.shape}")
    if np.iscomplexobj(values):
        raise ValueError("physical values must be real")
    return SpectralField(_forward(values.astype(np.float64, copy=False), grid), grid)


def inverse_transform(field: SpectralField) -> np.ndarray:
    """Grid values of ``field`` (real array)."""
    return _inverse(field.coefficients, field.grid)


def fractional_symbol(s: float, grid: GridSpec) -> np.ndarray:
    """Multiplier |xi|^s of Lambda^s; the zero mode gets 0 for s > 0 and 1 for s = 0."""
    if s < 0:
        raise ValueError(f"fractional_symbol needs s >= 0, got {s}")
    if s == 0:
        return np.ones(grid.shape)
    return grid.xi_abs**s


def riesz_velocity(theta: SpectralField) -> VelocityField:
    """Velocity u = (-d2 psi, d1 psi) with Lambda psi = -theta.

    In Fourier space u1 = i xi2 theta / |xi|, u2 = -i xi1 theta / |xi|. The
    zero mode is set to zero, and so are the Nyquist row and column: their
    odd multipliers would break the reality of the field.
    """
    g = theta.grid
    inv_abs = np.zeros(g.shape)
    np.divide(1.0, g.xi_abs, out=inv_abs, where=g.xi_abs > 0)
    c = theta.coefficients
    u1 = 1j * g.xi2_odd * inv_abs * c
    u2 = -1j * g.xi1_odd * inv_abs * c
    return VelocityField(SpectralField(u1, g), SpectralField(u2, g))


def gradient(theta: SpectralField) -> tuple[SpectralField, SpectralField]:
    g = theta.grid
    c = theta.coefficients
    return SpectralField(1j * g.xi1_odd * c, g), SpectralField(1j * g.xi2_odd * c, g)


def nonlinear_term(theta: SpectralField, dealias: Dealias | str | None = Dealias.TWO_THIRDS) -> SpectralField:
    """Coefficients of div(u theta) = u . grad theta, computed pseudo-spectrally.

    With the 2/3 rule the input is truncated to retained modes before the
    product and the output is truncated again, which makes
    <div(u theta), theta> vanish to rounding for any input.
    """
    g = theta.grid
    mask = g.dealias_mask(dealias)
    c = theta.coefficients if mask is None else np.where(mask, theta.coefficients, 0.0)
    src = SpectralField(c, g)
    vel = riesz_velocity(src)
    th = _inverse(c, g)
    f1 = _forward(_inverse(vel.u1.coefficients, g) * th, g)
    f2 = _forward(_inverse(vel.u2.coefficients, g) * th, g)
    out = 1j * (g.xi1_odd * f1 + g.xi2_odd * f2)
    if mask is not None:
        out = np.where(mask, out, 0.0)
    return SpectralField(out, g)


def lp_norm(theta: SpectralField | np.ndarray, p: float, grid: GridSpec | None = None) -> float:
    """Equal-weight grid quadrature of the L^p norm; p = inf gives the grid maximum of |theta|.

    ``theta`` may also be a physical array, in which case ``grid`` is required.
    """
    if p < 1:
        raise ValueError(f"L^p norm needs p >= 1, got {p}")
    if isinstance(theta, SpectralField):
        values, grid = inverse_transform(theta), theta.grid
    else:
        if grid is None:
            raise ValueError("grid is required for physical arrays")
        values = np.asarray(theta)
    a = np.abs(values)
    if np.isinf(p):
        return float(a.max())
    peak = a.max()
    if peak == 0:
        return 0.0
    # Scaling by the peak keeps large p from overflowing.
    return float(peak * (grid.cell_area * np.sum((a / peak) ** p)) ** (1.0 / p))


def parseval_energy(theta: SpectralField) -> float:
    """||theta||_{L^2}^2 = L^2 sum |c_k|^2."""
    return float(theta.grid.box_length**2 * np.sum(np.abs(theta.coefficients) ** 2))


def inner_product(a: SpectralField, b: SpectralField) -> float:
    """Real L^2 inner product of two real fields, evaluated in Fourier space."""
    _same_grid(a, b)
    return float(a.grid.box_length**2 * np.real(np.vdot(b.coefficients, a.coefficients)))


def hermitian_defect(theta: SpectralField) -> float:
    c = theta.coefficients
    return float(np.max(np.abs(c - np.conj(theta.grid.negate_index(c)))))
