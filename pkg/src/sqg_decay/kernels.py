"""
The fractional heat kernel K_alpha(x, t), inverse Fourier transform of
exp(-|xi|^{2 alpha} t) on the plane, and numerical probes of its smoothing
and scaling estimates.

K is radial, so everything reduces to Hankel integrals

    K(r, t) = (1/2pi) int_0^inf exp(-rho^{2 alpha} t) J0(rho r) rho drho.

For alpha < 1 the kernel has algebraic tails. Expanding the exponential and
transforming term by term gives the far-field series

    K(r, t) ~ sum_{k>=1} A_k t^k r^{-2 alpha k - 2},
    A_k = (-1)^{k+1} 4^{alpha k} Gamma(1 + alpha k)^2 sin(pi alpha k) / (pi^2 k!),

which supplies the L^p tail beyond the quadrature radius. A_1 at alpha = 1/2
reproduces the Poisson kernel tail 1/(2 pi r^3), and every A_k vanishes at
alpha = 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy import integrate, special

from .spectral import SpectralField, gradient, lp_norm, riesz_velocity

__all__ = [
    "KernelQuadratureError",
    "KernelProbeReport",
    "RadialTestFunction",
    "gaussian_test_function",
    "exponential_test_function",
    "tail_coefficient",
    "kernel_eval",
    "kernel_profile",
    "kernel_mass",
    "kernel_lp_norm",
    "kernel_norm_scaling_probe",
    "smoothing_estimate_probe",
    "bilinear_estimate_probe",
]

# exp(-RHO_DECAY) is the largest neglected symbol value
RHO_DECAY = 40.0
# L^p quadrature radius in units of the kernel length t^{1/(2 alpha)}
RADIUS_FACTOR = 50.0
SERIES_TERMS = 8


class KernelQuadratureError(RuntimeError):
    def __init__(self, achieved: float, requested: float):
        super().__init__(f"Bessel quadrature reached only {achieved:.3g} (requested {requested:.3g})")
        self.achieved = achieved


@dataclass
class KernelProbeReport:
    alpha: float
    probe_id: str
    times: np.ndarray
    measured_norms: np.ndarray
    predicted_exponent: float
    fitted_exponent: float
    max_ratio: float
    normalized: np.ndarray = field(default_factory=lambda: np.empty(0))

    def __post_init__(self) -> None:
        self.times = np.asarray(self.times, dtype=float)
        self.measured_norms = np.asarray(self.measured_norms, dtype=float)
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("probe times must be strictly increasing")
        if not math.isfinite(self.fitted_exponent):
            raise ValueError("fitted exponent is not finite")

    @property
    def running_sup(self) -> np.ndarray:
        """sup over s <= t of the normalized ratio."""
        return np.maximum.accumulate(self.normalized)

    def decade_variation(self, series: np.ndarray | None = None) -> float:
        """Relative spread max/min - 1 of ``series`` (default: running sup) over the last decade of times."""
        series = self.running_sup if series is None else np.asarray(series)
        last = self.times >= self.times[-1] / 10 * (1 - 1e-12)
        s = series[last]
        return float(s.max() / s.min() - 1.0)


@dataclass(frozen=True)
class RadialTestFunction:
    """Radial profile f(r) with its Hankel transform f_hat(rho) = 2 pi int f(r) J0(rho r) r dr."""

    name: str
    profile: Callable[[np.ndarray], np.ndarray]
    hankel: Callable[[np.ndarray], np.ndarray]
    length_scale: float
    rho_cutoff: float = math.inf

    def lp_norm(self, p: float) -> float:
        if math.isinf(p):
            return float(self.profile(np.array([0.0]))[0])
        val, _ = integrate.quad(lambda r: abs(self.profile(np.array([r]))[0]) ** p * r, 0, np.inf, limit=200)
        return (2 * math.pi * val) ** (1 / p)


def gaussian_test_function(width: float = 1.0) -> RadialTestFunction:
    s2 = width * width
    return RadialTestFunction(
        f"gaussian(width={width:g})",
        lambda r: np.exp(-np.square(r) / (2 * s2)),
        lambda rho: 2 * math.pi * s2 * np.exp(-s2 * np.square(rho) / 2),
        width,
        math.sqrt(2 * RHO_DECAY) / width,
    )


def exponential_test_function(scale: float = 1.0) -> RadialTestFunction:
    a2 = scale * scale
    return RadialTestFunction(
        f"exponential(scale={scale:g})",
        lambda r: np.exp(-np.asarray(r) / scale),
        lambda rho: 2 * math.pi * a2 / (1 + a2 * np.square(rho)) ** 1.5,
        scale,
    )


def _check_alpha(alpha: float) -> None:
    if not (0.5 < alpha <= 1.0):
        raise ValueError(f"alpha must lie in (0.5, 1], got {alpha}")


def _check_t(t: float) -> None:
    if not t > 0:
        raise ValueError(f"t must be positive, got {t}")


def tail_coefficient(alpha: float, k: int) -> float:
    """A_k of the far-field series (zero whenever alpha k is an integer)."""
    ak = alpha * k
    if abs(ak - round(ak)) < 1e-13:
        return 0.0
    log_mag = ak * math.log(4.0) + 2 * math.lgamma(1 + ak) - math.lgamma(k + 1)
    return (-1) ** (k + 1) * math.exp(log_mag) * math.sin(math.pi * ak) / math.pi**2


def _series(alpha: float, t: float, j: int, radial_derivative: bool) -> list[tuple[float, float]]:
    """(coefficient, power) pairs of the far-field series of d_t^j (d_r)^{0|1} K."""
    terms = []
    for k in range(max(j, 1), SERIES_TERMS + 1):
        a = tail_coefficient(alpha, k)
        if a == 0.0:
            continue
        a *= math.perm(k, j) * t ** (k - j)
        power = 2 * alpha * k + 2
        if radial_derivative:
            a *= -power
            power += 1
        terms.append((a, power))
    return terms


def _series_eval(terms: list[tuple[float, float]], r: np.ndarray) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    out = np.zeros_like(r)
    for a, power in terms:
        out += a * r ** (-power)
    return out


@lru_cache(maxsize=8)
def _gauss_legendre(order: int) -> tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(order)


def _panel_nodes(edges: np.ndarray, order: int = 20) -> tuple[np.ndarray, np.ndarray]:
    x, w = _gauss_legendre(order)
    a, b = edges[:-1, None], edges[1:, None]
    nodes = 0.5 * (b - a) * x + 0.5 * (b + a)
    weights = 0.5 * (b - a) * w
    return nodes.ravel(), weights.ravel()


def _rho_quadrature(rho_max: float, r_max: float, levels: int = 40) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre panels on [0, rho_max]: geometric grading toward 0 (where
    rho^{2 alpha} is not smooth) then uniform panels no wider than pi / r_max
    so that every J(rho r) oscillation is resolved."""
    width = rho_max / 16
    if r_max > 0:
        width = min(width, math.pi / r_max)
    graded = width * 2.0 ** -np.arange(levels, -1, -1, dtype=float)
    n_uniform = max(1, math.ceil((rho_max - width) / width))
    uniform = np.linspace(width, rho_max, n_uniform + 1)[1:]
    edges = np.concatenate([[0.0], graded, uniform])
    return _panel_nodes(edges)


def _hankel(weights_fn: Callable[[np.ndarray], np.ndarray], order: int, r: np.ndarray,
            rho_max: float, block: int = 256) -> np.ndarray:
    """(1/2pi) int_0^rho_max weights_fn(rho) J_order(rho r) drho for every r."""
    r = np.asarray(r, dtype=float)
    rho, w = _rho_quadrature(rho_max, float(r.max(initial=0.0)))
    vec = w * weights_fn(rho) / (2 * math.pi)
    bessel = special.j0 if order == 0 else special.j1
    out = np.empty_like(r)
    flat_r, flat_out = r.ravel(), out.ravel()
    for s in range(0, flat_r.size, block):
        flat_out[s : s + block] = bessel(np.outer(flat_r[s : s + block], rho)) @ vec
    return flat_out.reshape(r.shape)


def _rho_max(t: float, alpha: float) -> float:
    return (RHO_DECAY / t) ** (1 / (2 * alpha))


def _symbol_weights(t: float, alpha: float, j: int, radial_derivative: bool):
    def weights(rho: np.ndarray) -> np.ndarray:
        s = rho ** (2 * alpha)
        w = np.exp(-s * t) * (-s) ** j * rho
        return -w * rho if radial_derivative else w

    return weights


def kernel_profile(r: np.ndarray, t: float, alpha: float, j: int = 0, radial_derivative: bool = False) -> np.ndarray:
    """Vectorized d_t^j K(r, t), or its radial derivative, on an array of radii.

    The radial derivative uses d_r J0 = -rho J1, so no numerical
    differentiation is involved.
    """
    _check_alpha(alpha)
    _check_t(t)
    weights = _symbol_weights(t, alpha, j, radial_derivative)
    return _hankel(weights, 1 if radial_derivative else 0, np.asarray(r, dtype=float), _rho_max(t, alpha))


def kernel_eval(x_radius: float, t: float, alpha: float, tol: float = 1e-10) -> float:
    """K_alpha(|x|, t) by adaptive quadrature of the radial Bessel integral.

    The integral is computed in the self-similar variable rho t^{1/(2 alpha)}
    and rescaled by t^{-1/alpha}; ``tol`` is an absolute tolerance on K(., 1).
    When r rho_max exceeds 10 the range is split at the zeros of J0.

    Raises:
        ValueError: for t <= 0 or alpha outside (1/2, 1].
        KernelQuadratureError: if the accumulated error estimate exceeds ``tol``.
    """
    _check_alpha(alpha)
    _check_t(t)
    sigma = abs(float(x_radius)) * t ** (-1 / (2 * alpha))
    s_max = RHO_DECAY ** (1 / (2 * alpha))

    def f(s: float) -> float:
        return math.exp(-(s ** (2 * alpha))) * special.j0(s * sigma) * s

    if sigma * s_max <= 10:
        edges = [0.0, s_max]
    else:
        n_zeros = int(sigma * s_max / math.pi) + 1
        zeros = special.jn_zeros(0, n_zeros) / sigma
        edges = [0.0, *zeros[zeros < s_max], s_max]
    total, err = 0.0, 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        val, e = integrate.quad(f, a, b, epsabs=1e-3 * tol / len(edges), epsrel=1e-13, limit=200)
        total += val
        err += e
    if err > tol:
        raise KernelQuadratureError(err, tol)
    return total / (2 * math.pi) * t ** (-1 / alpha)


def _radial_grid(r_max: float, inner: float) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes on [0, r_max]: uniform panels up to ``inner`` then geometric."""
    edges = list(np.linspace(0.0, inner, 9))
    while edges[-1] < r_max:
        edges.append(min(edges[-1] * 1.4, r_max))
    return _panel_nodes(np.asarray(edges))


def _angular_integral(a: int, b: int, p: float) -> float:
    """int_0^{2pi} |cos phi|^{a p} |sin phi|^{b p} dphi, or the max of |cos^a sin^b| for p = inf."""
    if math.isinf(p):
        if a == 0 or b == 0:
            return 1.0
        c2 = a / (a + b)
        return c2 ** (a / 2) * (1 - c2) ** (b / 2)
    return 2 * special.beta((a * p + 1) / 2, (b * p + 1) / 2)


def _check_multi_index(idx: Sequence[int], name: str) -> tuple[int, int]:
    if len(idx) != 2 or any(int(v) != v or v < 0 for v in idx):
        raise ValueError(f"{name} must be a pair of non-negative integers, got {idx}")
    return int(idx[0]), int(idx[1])


def kernel_lp_norm(
    t: float,
    alpha: float,
    p: float,
    gamma: Sequence[int] = (0, 0),
    beta: Sequence[int] = (0, 0),
    j: int = 0,
) -> float:
    """|| x^gamma d_t^j D^beta K_alpha(t) ||_{L^p(R^2)} for |beta| <= 1.

    The radial factor is integrated on [0, R], R = 50 t^{1/(2 alpha)}, and the
    far-field series supplies the rest. The angular factor is exact.
    """
    _check_alpha(alpha)
    _check_t(t)
    g1, g2 = _check_multi_index(gamma, "gamma")
    b1, b2 = _check_multi_index(beta, "beta")
    if b1 + b2 > 1:
        raise ValueError("only |beta| <= 1 is supported")
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    grad = b1 + b2 == 1
    gabs = g1 + g2
    scale = t ** (1 / (2 * alpha))
    r_max = RADIUS_FACTOR * scale
    r, w = _radial_grid(r_max, scale)
    radial = kernel_profile(r, t, alpha, j, grad) * r**gabs
    angular = _angular_integral(g1 + b1, g2 + b2, p)
    terms = [(a, power - gabs) for a, power in _series(alpha, t, j, grad)]
    if math.isinf(p):
        peak = max(float(np.max(np.abs(radial))), abs(float(kernel_profile(np.array([0.0]), t, alpha, j, grad)[0])) if gabs == 0 else 0.0)
        if terms and terms[0][1] <= 0:
            return math.inf
        return angular * peak
    body = float(np.sum(w * np.abs(radial) ** p * r))
    tail = 0.0
    if terms:
        if p * terms[0][1] <= 2:
            return math.inf
        tail, _ = integrate.quad(lambda x: abs(_series_eval(terms, x)) ** p * x, r_max, np.inf, epsrel=1e-12, limit=200)
    return float((angular * (body + tail)) ** (1 / p))


def kernel_mass(t: float, alpha: float) -> float:
    """Signed integral of K_alpha(., t) over the plane (exactly 1 in theory)."""
    scale = t ** (1 / (2 * alpha))
    r_max = RADIUS_FACTOR * scale
    r, w = _radial_grid(r_max, scale)
    body = float(np.sum(w * kernel_profile(r, t, alpha) * r))
    terms = _series(alpha, t, 0, False)
    tail = sum(a * r_max ** (2 - power) / (power - 2) for a, power in terms)
    return 2 * math.pi * (body + tail)


def _fit_slope(times: np.ndarray, values: np.ndarray) -> float:
    slope, _ = np.polyfit(np.log(times), np.log(values), 1)
    return float(slope)


def _check_times(times: Sequence[float]) -> np.ndarray:
    times = np.asarray(times, dtype=float)
    if times.size < 2 or np.any(times <= 0) or np.any(np.diff(times) <= 0):
        raise ValueError("times must be positive and strictly increasing")
    if times[-1] / times[0] < 100 * (1 - 1e-12):
        raise ValueError("times must span at least two decades")
    return times


def kernel_norm_scaling_probe(
    gamma: Sequence[int],
    beta: Sequence[int],
    j: int,
    p: float,
    alpha: float,
    times: Sequence[float],
) -> KernelProbeReport:
    """Measure t -> ||x^gamma d_t^j D^beta K_alpha(t)||_{L^p} and fit its log-log slope.

    The prediction is (|gamma| - |beta|)/(2 alpha) - j - (p - 1)/(p alpha).

    Raises:
        ValueError: if |gamma| >= |beta| + 2 alpha max(j, 1), or the times span
            less than two decades.
    """
    _check_alpha(alpha)
    g = _check_multi_index(gamma, "gamma")
    b = _check_multi_index(beta, "beta")
    if j < 0:
        raise ValueError(f"j must be non-negative, got {j}")
    if not sum(g) < sum(b) + 2 * alpha * max(j, 1):
        raise ValueError("need |gamma| < |beta| + 2 alpha max(j, 1)")
    times = _check_times(times)
    inv_p = 0.0 if math.isinf(p) else 1 / p
    predicted = (sum(g) - sum(b)) / (2 * alpha) - j - (1 - inv_p) / alpha
    norms = np.array([kernel_lp_norm(t, alpha, p, g, b, j) for t in times])
    normalized = (norms / norms[0]) / (times / times[0]) ** predicted
    return KernelProbeReport(
        alpha=alpha,
        probe_id=f"gamma={g[0]}:{g[1]};beta={b[0]}:{b[1]};j={j};p={p:g}",
        times=times,
        measured_norms=norms,
        predicted_exponent=predicted,
        fitted_exponent=_fit_slope(times, norms),
        max_ratio=float(normalized.max()),
        normalized=normalized,
    )


def _smoothed_norm(f: RadialTestFunction, t: float, alpha: float, q: float, grad: bool) -> float:
    """|| K(t) f ||_{L^q} (or of its gradient), via the Hankel transform of f."""
    scale = max(t ** (1 / (2 * alpha)), f.length_scale)
    r_max = RADIUS_FACTOR * scale
    rho_max = min(_rho_max(t, alpha), f.rho_cutoff)

    def weights(rho: np.ndarray) -> np.ndarray:
        w = np.exp(-(rho ** (2 * alpha)) * t) * f.hankel(rho) * rho
        return -w * rho if grad else w

    order = 1 if grad else 0
    if math.isinf(q):
        r, _ = _radial_grid(r_max, scale)
        vals = np.abs(_hankel(weights, order, np.concatenate([[0.0], r]), rho_max))
        return float(vals.max())
    r, w = _radial_grid(r_max, scale)
    vals = np.abs(_hankel(weights, order, r, rho_max))
    body = float(np.sum(w * vals**q * r))
    # Far from the support of f, K(t) f ~ S(r) (c0 + c1 / r^2) where S is the
    # kernel's far-field series and c1 carries the second moment of f; c0 and
    # c1 are matched at the last node and at a node near 0.7 r_end.
    tail = 0.0
    terms = _series(alpha, t, 0, grad)
    if terms:
        i_a, i_b = r.size - 1, int(np.searchsorted(r, 0.7 * r[-1]))
        ra, rb = float(r[i_a]), float(r[i_b])
        sa, sb = (abs(float(_series_eval(terms, x))) for x in (ra, rb))
        c1 = (vals[i_a] / sa - vals[i_b] / sb) / (ra**-2 - rb**-2)
        c0 = vals[i_a] / sa - c1 * ra**-2
        tail, _ = integrate.quad(
            lambda x: abs(float(_series_eval(terms, x)) * (c0 + c1 / x**2)) ** q * x,
            r_max, np.inf, epsrel=1e-10, limit=200,
        )
    angular = _angular_integral(1, 0, q) if grad else 2 * math.pi
    return float((angular * (body + tail)) ** (1 / q))


def smoothing_estimate_probe(
    p: float,
    q: float,
    alpha: float,
    test_functions: Sequence[RadialTestFunction],
    times: Sequence[float],
    gradient_variant: bool = False,
) -> KernelProbeReport:
    """Normalized ratios t^{e} ||K_alpha(t) f||_{L^q} / ||f||_{L^p}, sup over the test functions.

    e = (1/alpha)(1/p - 1/q), plus 1/(2 alpha) for the gradient variant.
    ``measured_norms`` holds the unnormalized sup_f ||K(t) f||_q / ||f||_p,
    ``normalized`` the weighted ratio and ``running_sup`` its supremum over
    earlier times, which is the quantity that has to stay bounded.
    """
    _check_alpha(alpha)
    if not (1 <= p <= q):
        raise ValueError(f"need 1 <= p <= q, got p={p}, q={q}")
    if not test_functions:
        raise ValueError("at least one test function is required")
    times = _check_times(times)
    inv_q = 0.0 if math.isinf(q) else 1 / q
    exponent = (1 / alpha) * (1 / p - inv_q) + (1 / (2 * alpha) if gradient_variant else 0.0)
    f_norms = [f.lp_norm(p) for f in test_functions]
    raw = np.array(
        [max(_smoothed_norm(f, t, alpha, q, gradient_variant) / n for f, n in zip(test_functions, f_norms)) for t in times]
    )
    normalized = raw * times**exponent
    last = times >= times[-1] / 10 * (1 - 1e-12)
    return KernelProbeReport(
        alpha=alpha,
        probe_id=f"p={p:g};q={q:g}" + (";grad" if gradient_variant else ""),
        times=times,
        measured_norms=raw,
        predicted_exponent=-exponent,
        fitted_exponent=_fit_slope(times[last], raw[last]),
        max_ratio=float(np.max(normalized / normalized[0])),
        normalized=normalized,
    )


def bilinear_estimate_probe(eta: float, mu: float, nu: float, alpha: float, theta: SpectralField) -> float:
    """||u . grad theta||_{L^{2/(mu+nu)}} / (||theta||_{L^{2/mu}} ||grad theta||_{L^{2/nu}}) on the grid.

    This is the Holder plus Riesz-transform step of the bilinear Duhamel
    estimate; the time-singularity exponent (mu + nu - eta)/(2 alpha) does
    not enter the ratio.
    """
    _check_alpha(alpha)
    if not (0 < eta <= mu + nu < 2):
        raise ValueError(f"need 0 < eta <= mu + nu < 2, got eta={eta}, mu={mu}, nu={nu}")
    if not (0 < mu <= 2 and 0 < nu <= 2):
        raise ValueError("need 2/mu >= 1 and 2/nu >= 1")
    grid = theta.grid
    u = riesz_velocity(theta)
    g1, g2 = gradient(theta)
    d1, d2 = g1.to_physical(), g2.to_physical()
    advect = u.u1.to_physical() * d1 + u.u2.to_physical() * d2
    denom = lp_norm(theta, 2 / mu) * lp_norm(np.hypot(d1, d2), 2 / nu, grid)
    if denom == 0:
        return 0.0
    return lp_norm(advect, 2 / (mu + nu), grid) / denom
