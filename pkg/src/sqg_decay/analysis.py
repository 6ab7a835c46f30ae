"""
Decay-rate catalog, power-law fitting and the frequency-splitting diagnostics.

Every theoretical rate is a single function of (alpha, p or q) in
``catalog_rate``; measured series are compared against it through
``fit_decay`` and ``DecayReport``. The remaining functions evaluate the
individual quantities that appear in the decay arguments (split energies,
ball integrals, the f_m integral, the nonlinear spectrum bound and the
interpolation inequality) so that each step can be checked numerically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Sequence

import numpy as np
from scipy import integrate

from .evolution import Trajectory, critical_exponent
from .spectral import SpectralField, lp_norm, nonlinear_term

__all__ = [
    "TheoremId",
    "RateCatalogEntry",
    "DecayReport",
    "SplittingReport",
    "LinearDecaySeries",
    "catalog_entry",
    "catalog_rate",
    "catalog_table",
    "fit_decay",
    "default_fit_window",
    "decay_report",
    "linear_decay_oracle",
    "splitting_report",
    "f_m",
    "f_m_bound_check",
    "ball_spectrum_bound_probe",
    "nonlinear_spectrum_bound_probe",
    "interpolation_check",
    "optimal_rate",
    "waiting_time",
]


class TheoremId(str, Enum):
    CW_13 = "CW_13"
    CC_bound = "CC_bound"
    JU_14 = "JU_14"
    THM_13 = "THM_13"
    THM_14 = "THM_14"
    THM_14_grad = "THM_14_grad"
    THM_15 = "THM_15"
    LOG_PRELIM = "LOG_PRELIM"


@dataclass(frozen=True)
class RateCatalogEntry:
    """One decay law ``quantity <= C variable^exponent``.

    ``variable`` is "t" for the algebraic laws and "ln(e+t)" for the
    preliminary logarithmic bound, which also applies to the squared L^2 norm.
    """

    theorem_id: TheoremId
    alpha: float
    pq: float | None
    exponent: float
    validity: str
    quantity: str
    variable: str = "t"

    def shape(self, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        base = np.log(np.e + t) if self.variable == "ln(e+t)" else 1.0 + t
        return base**self.exponent


_VALIDITY = {
    TheoremId.CW_13: "theta0 in L1 and L2 (no exponent parameter)",
    TheoremId.CC_bound: "1 < p < inf",
    TheoremId.JU_14: "p >= 2",
    TheoremId.THM_13: "1 <= p < 2",
    TheoremId.THM_14: "m <= q < inf, m = 2/(2 alpha - 1)",
    TheoremId.THM_14_grad: "m <= q < inf, m = 2/(2 alpha - 1)",
    TheoremId.THM_15: "m <= q < inf, m = 2/(2 alpha - 1)",
    TheoremId.LOG_PRELIM: "theta0 in L^p and L2, 1 <= p < 2",
}


def _require(ok: bool, theorem: TheoremId, alpha: float, pq: float | None) -> None:
    if not ok:
        raise ValueError(f"{theorem.value}: parameters violate '{_VALIDITY[theorem]}' (alpha={alpha}, p/q={pq})")


def catalog_entry(theorem_id: TheoremId | str, alpha: float, pq: float | None = None) -> RateCatalogEntry:
    """Build the catalog entry for a theorem at (alpha, p or q).

    Raises:
        ValueError: if alpha is outside (1/2, 1] or p/q violates the theorem's range,
            naming the violated constraint.
    """
    tid = TheoremId(theorem_id)
    if not (0.5 < alpha <= 1.0):
        raise ValueError(f"alpha must lie in (0.5, 1], got {alpha}")
    a = float(alpha)
    m = critical_exponent(a)
    quantity = "L2 norm"
    variable = "t"
    if tid is TheoremId.CW_13:
        exponent = -1 / (2 * a)
    elif tid is TheoremId.CC_bound:
        _require(pq is not None and 1 < pq < math.inf, tid, a, pq)
        exponent = -(pq - 1) / (a * pq)
        quantity = "Lp norm"
    elif tid is TheoremId.JU_14:
        _require(pq is not None and pq >= 2, tid, a, pq)
        exponent = (2 - pq) / (2 * pq * a)
        quantity = "Lp norm"
    elif tid is TheoremId.THM_13:
        _require(pq is not None and 1 <= pq < 2, tid, a, pq)
        exponent = -(1 / (2 * a)) * (2 / pq - 1)
    elif tid in (TheoremId.THM_14, TheoremId.THM_14_grad, TheoremId.THM_15):
        _require(pq is not None and m * (1 - 1e-12) <= pq < math.inf, tid, a, pq)
        q = float(pq)
        if tid is TheoremId.THM_15:
            exponent = (1 / q) * (4 * a - 3) / (a * (2 * a - 1)) - 1 + 1 / (2 * a)
            quantity = "Lq norm"
        else:
            exponent = -(1 / a) * (1 / m - 1 / q)
            quantity = "Lq norm"
            if tid is TheoremId.THM_14_grad:
                exponent -= 1 / (2 * a)
                quantity = "Lq norm of gradient"
    else:
        _require(pq is None or 1 <= pq < 2, tid, a, pq)
        exponent = -(1 + 1 / a)
        quantity = "squared L2 norm"
        variable = "ln(e+t)"
    return RateCatalogEntry(tid, a, None if pq is None else float(pq), float(exponent), _VALIDITY[tid], quantity, variable)


def catalog_rate(entry: TheoremId | str, alpha: float, pq: float | None = None) -> float:
    """The printed exponent of a decay law; negative values mean decay."""
    return catalog_entry(entry, alpha, pq).exponent


def catalog_table(alphas: Sequence[float] = (0.6, 0.75, 0.9, 1.0)) -> list[RateCatalogEntry]:
    """All catalog exponents over an alpha grid at representative exponents.

    p = 1 for THM_13 and LOG_PRELIM, p = 4 for CC_bound and JU_14, q = 2m for
    the L^q laws.
    """
    rows = []
    for a in alphas:
        m = critical_exponent(a)
        choices = {
            TheoremId.CW_13: None,
            TheoremId.CC_bound: 4.0,
            TheoremId.JU_14: 4.0,
            TheoremId.THM_13: 1.0,
            TheoremId.THM_14: 2 * m,
            TheoremId.THM_14_grad: 2 * m,
            TheoremId.THM_15: 2 * m,
            TheoremId.LOG_PRELIM: 1.0,
        }
        rows.extend(catalog_entry(tid, a, pq) for tid, pq in choices.items())
    return rows


def optimal_rate(q: float, alpha: float) -> float:
    """lim_{r -> inf} f(r) = C1 - C2 of the interpolated rate
    f(r) = C1 (r - q)/(r - m) - C2, C1 = (1 - 1/alpha) m/q, C2 = (1/alpha)(1/m - 1/q).

    Also asserts that f is non-increasing in r and that the limit agrees with
    the THM_15 catalog exponent.
    """
    if not (0.5 < alpha <= 1.0):
        raise ValueError(f"alpha must lie in (0.5, 1], got {alpha}")
    m = critical_exponent(alpha)
    if q < m * (1 - 1e-12):
        raise ValueError(f"q must be >= m = 2/(2 alpha - 1) = {m:.6g}, got {q}")
    c1 = (1 - 1 / alpha) * m / q
    c2 = (1 / alpha) * (1 / m - 1 / q)

    def f(r: float) -> float:
        return c1 * (r - q) / (r - m) - c2

    samples = [f(r) for r in (q + 1, 2 * q, 10 * q)]
    assert all(b <= a + 1e-15 for a, b in zip(samples, samples[1:])), "f(r) is not non-increasing"
    rate = c1 - c2
    if math.isfinite(q):
        thm = catalog_rate(TheoremId.THM_15, alpha, q)
        assert math.isclose(rate, thm, rel_tol=1e-12, abs_tol=1e-14), (rate, thm)
    return rate


def fit_decay(times: Sequence[float], norms: Sequence[float], window: tuple[float, float] | None = None) -> tuple[float, float]:
    """Least-squares slope of log(norm) against log(t) inside ``window``.

    Returns:
        (exponent, r_squared); r_squared is 1 for a constant series.

    Raises:
        ValueError: fewer than 8 samples in the window, or non-positive norms/times.
    """
    t = np.asarray(times, dtype=float)
    y = np.asarray(norms, dtype=float)
    if t.shape != y.shape:
        raise ValueError("times and norms must have the same length")
    sel = np.ones_like(t, dtype=bool) if window is None else (t >= window[0] * (1 - 1e-12)) & (t <= window[1] * (1 + 1e-12))
    t, y = t[sel], y[sel]
    if t.size < 8:
        raise ValueError(f"need at least 8 samples in the fit window, got {t.size}")
    if np.any(t <= 0):
        raise ValueError("times in the fit window must be positive")
    if np.any(y <= 0) or not np.all(np.isfinite(y)):
        raise ValueError("norms must be positive and finite")
    x, ly = np.log(t), np.log(y)
    slope, intercept = np.polyfit(x, ly, 1)
    resid = ly - (slope * x + intercept)
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 if np.ptp(ly) == 0 else 1.0 - float(np.sum(resid**2)) / ss_tot
    return float(slope), float(min(1.0, r2))


def default_fit_window(t_end: float) -> tuple[float, float]:
    return (0.1 * t_end, 0.8 * t_end)


@dataclass
class DecayReport:
    q: float
    times: np.ndarray
    norms: np.ndarray
    fit_window: tuple[float, float]
    fitted_exponent: float
    catalog_exponent: float
    relative_error: float
    r_squared: float = math.nan
    theorem_id: TheoremId | None = None

    def __post_init__(self) -> None:
        lo, hi = self.fit_window
        if lo < self.times[0] * (1 - 1e-12) or hi > self.times[-1] * (1 + 1e-12) or lo >= hi:
            raise ValueError(f"fit window {self.fit_window} not inside the series")
        if np.any(self.norms <= 0):
            raise ValueError("norms must be positive")


def _relative_error(fitted: float, reference: float) -> float:
    return abs(fitted - reference) / abs(reference) if reference != 0 else abs(fitted)


def decay_report(
    times: Sequence[float],
    norms: Sequence[float],
    q: float,
    theorem: TheoremId | str,
    alpha: float,
    pq: float | None = None,
    window: tuple[float, float] | None = None,
) -> DecayReport:
    """Fit a measured norm series and compare with a catalog exponent (pq defaults to q)."""
    times = np.asarray(times, dtype=float)
    norms = np.asarray(norms, dtype=float)
    window = window or default_fit_window(float(times[-1]))
    entry = catalog_entry(theorem, alpha, q if pq is None and TheoremId(theorem) is not TheoremId.CW_13 else pq)
    slope, r2 = fit_decay(times, norms, window)
    return DecayReport(q, times, norms, window, slope, entry.exponent, _relative_error(slope, entry.exponent), r2, entry.theorem_id)


@dataclass
class LinearDecaySeries:
    times: np.ndarray
    norms: np.ndarray
    predicted_exponent: float


def linear_decay_oracle(
    profile: Callable[[np.ndarray], np.ndarray],
    alpha: float,
    p_origin_order: float,
    times: Sequence[float],
    breakpoints: Sequence[float] = (),
) -> LinearDecaySeries:
    """Whole-plane L^2 norm of the linear flow from a radial spectrum.

    ||K(t) theta0||^2 = 2 pi int_0^inf exp(-2 r^{2 alpha} t) |theta0_hat(r)|^2 r dr,
    evaluated in the self-similar variable s = r t^{1/(2 alpha)}. ``profile``
    is theta0_hat(r) in the unitary Fourier normalization and behaves like
    c r^{p_origin_order} near 0; the predicted late-time exponent of the norm
    is -(p_origin_order + 1)/(2 alpha). ``breakpoints`` are radii where the
    profile is not smooth (e.g. the edge of a compact spectrum).

    Raises:
        ValueError: if the origin order makes the integral diverge, or the
            profile is not square integrable.
    """
    if not (0.5 < alpha <= 1.0):
        raise ValueError(f"alpha must lie in (0.5, 1], got {alpha}")
    if p_origin_order <= -1:
        raise ValueError(f"origin order {p_origin_order} <= -1: |theta0_hat|^2 r is not integrable at 0")
    times = np.asarray(times, dtype=float)
    if np.any(times < 0):
        raise ValueError("times must be non-negative")

    def prof2(r: float) -> float:
        return float(np.abs(profile(np.asarray(r, dtype=float))) ** 2)

    edges = sorted(float(b) for b in breakpoints if b > 0)
    cuts0 = [0.0, *edges, np.inf]
    total = sum(
        integrate.quad(lambda r: prof2(r) * r, a, b, epsabs=0, epsrel=1e-12, limit=400)[0]
        for a, b in zip(cuts0[:-1], cuts0[1:])
    )
    if not math.isfinite(total):
        raise ValueError("profile is not square integrable")
    s_max = 40.0 ** (1 / (2 * alpha))
    norms = np.empty_like(times)
    for i, t in enumerate(times):
        if t == 0:
            norms[i] = math.sqrt(2 * math.pi * total)
            continue
        scale = t ** (-1 / (2 * alpha))
        cuts = sorted({0.0, *(b / scale for b in edges if b / scale < s_max), s_max})

        def integrand(s: float) -> float:
            return math.exp(-2 * s ** (2 * alpha)) * prof2(s * scale) * s

        val = sum(integrate.quad(integrand, a, b, epsabs=0, epsrel=1e-13, limit=400)[0] for a, b in zip(cuts[:-1], cuts[1:]))
        norms[i] = math.sqrt(2 * math.pi * val * scale**2)
    return LinearDecaySeries(times, norms, -(p_origin_order + 1) / (2 * alpha))


@dataclass
class SplittingReport:
    """Low/high frequency energies and the four terms bounding the high part.

    Norms are whole-plane L^2 norms (box Parseval normalization). Term II is
    the ball form k (1+t)^{-k} int_s^t (1+tau)^{k-1} int_{B(tau)} |psi theta_hat|^2,
    which bounds the raw integrand form ``term_II_raw`` mode by mode.
    """

    k: float
    times: np.ndarray
    low_energy: np.ndarray
    high_energy: np.ndarray
    total_energy: np.ndarray
    term_I: np.ndarray
    term_II: np.ndarray
    term_III: np.ndarray
    term_IV: np.ndarray
    term_II_raw: np.ndarray

    @property
    def terms(self) -> dict[str, np.ndarray]:
        return {"I": self.term_I, "II": self.term_II, "III": self.term_III, "IV": self.term_IV}

    def triangle_split_holds(self) -> bool:
        return bool(np.all(self.total_energy <= 2 * (self.low_energy + self.high_energy) * (1 + 1e-12)))

    def high_energy_bound_residual(self) -> np.ndarray:
        """high - (I + II_raw + III + IV); zero up to time quadrature error."""
        return self.high_energy - (self.term_I + self.term_II_raw + self.term_III + self.term_IV)


def _cumulative_trapezoid(values: np.ndarray, times: np.ndarray) -> np.ndarray:
    return integrate.cumulative_trapezoid(values, times, initial=0.0)


def splitting_report(trajectory: Trajectory, k: float) -> SplittingReport:
    """Evaluate the frequency-splitting quantities along a trajectory.

    phi = exp(-|xi|^{2 alpha} t), psi = 1 - phi, E(t) = (1 + t)^k and
    B(t) = {|xi| <= (k/(2(1+t)))^{1/(2 alpha)}}. The time integrals run from
    s = first sample, by trapezoid on the sample grid. Term IV uses the same
    dealiased nonlinearity as the solver and is identically zero for
    linear-only trajectories.

    Raises:
        ValueError: if k <= 2 or the trajectory has fewer than 32 samples.
    """
    if not k > 2:
        raise ValueError(f"k must exceed 2, got {k}")
    if len(trajectory.samples) < 32:
        raise ValueError(f"need at least 32 samples, got {len(trajectory.samples)}")
    cfg = trajectory.config
    alpha = cfg.alpha
    grid = trajectory.grid
    area = grid.box_length**2
    sym = grid.xi_abs ** (2 * alpha)
    times = trajectory.times
    n = len(times)
    low, high, total = np.empty(n), np.empty(n), np.empty(n)
    ball_int, raw_int, iii_int, iv_int = np.empty(n), np.empty(n), np.empty(n), np.empty(n)
    for i, (t, f) in enumerate(trajectory.samples):
        c2 = np.abs(f.coefficients) ** 2
        phi = np.exp(-sym * t)
        psi = 1.0 - phi
        low[i] = area * np.sum(phi**2 * c2)
        high[i] = area * np.sum(psi**2 * c2)
        total[i] = area * np.sum(c2)
        E = (1 + t) ** k
        dE = k * (1 + t) ** (k - 1)
        ball = grid.xi_abs <= (k / (2 * (1 + t))) ** (1 / (2 * alpha))
        ball_int[i] = dE * area * np.sum(psi[ball] ** 2 * c2[ball])
        raw_int[i] = dE * high[i] - 2 * E * area * np.sum(sym * psi**2 * c2)
        iii_int[i] = 2 * E * area * np.sum(sym * phi * psi * c2)
        if cfg.nonlinear:
            nl = nonlinear_term(f, cfg.dealias).coefficients
            omega = 1.0 - psi**2
            iv_int[i] = 2 * E * area * abs(np.sum(nl * np.conj(omega * f.coefficients)).real)
        else:
            iv_int[i] = 0.0
    E_t = (1 + times) ** k
    term_I = (E_t[0] / E_t) * high[0]
    return SplittingReport(
        k=float(k),
        times=times,
        low_energy=low,
        high_energy=high,
        total_energy=total,
        term_I=term_I,
        term_II=_cumulative_trapezoid(ball_int, times) / E_t,
        term_III=_cumulative_trapezoid(iii_int, times) / E_t,
        term_IV=_cumulative_trapezoid(iv_int, times) / E_t,
        term_II_raw=_cumulative_trapezoid(raw_int, times) / E_t,
    )


def f_m(t: float, m_coef: float, alpha: float) -> float:
    """f_m(t) = int_{|xi| > 1} |xi|^{2 alpha} exp(-m |xi|^{2 alpha} t) dxi by radial quadrature."""
    if not t > 0:
        raise ValueError(f"t must be positive, got {t}")
    if not m_coef > 0:
        raise ValueError(f"m_coef must be positive, got {m_coef}")
    if not (0.5 < alpha <= 1.0):
        raise ValueError(f"alpha must lie in (0.5, 1], got {alpha}")
    mt = m_coef * t
    val, _ = integrate.quad(lambda r: r ** (2 * alpha + 1) * math.exp(-mt * (r ** (2 * alpha) - 1)), 1, np.inf, epsabs=0, epsrel=1e-12, limit=200)
    return 2 * math.pi * val * math.exp(-mt)


def f_m_bound_check(times: Sequence[float], m_coef: float, alpha: float) -> tuple[np.ndarray, np.ndarray]:
    """(f_m(t), C/(m t)^2) with C fitted at the first time and frozen."""
    times = np.asarray(times, dtype=float)
    values = np.array([f_m(t, m_coef, alpha) for t in times])
    C = values[0] * (m_coef * times[0]) ** 2
    return values, C / (m_coef * times) ** 2


_G_FUNCTIONS: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "t": lambda t: t,
    "1+t": lambda t: 1 + t,
    "const": lambda t: np.ones_like(t),
}


def ball_spectrum_bound_probe(
    profile: Callable[[np.ndarray], np.ndarray],
    p: float,
    g_of_t: str | Callable[[np.ndarray], np.ndarray],
    times: Sequence[float],
    alpha: float,
    constant: float | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Ball integral int_{S(t)} |h_hat|^2 against C g(t)^{-(1/alpha)(2/p - 1)}.

    S(t) = {|xi| <= g(t)^{-1/(2 alpha)}} and ``profile`` is the radial h_hat.
    ``g_of_t`` is "t", "1+t", "const" or a callable. Without ``constant`` the
    bound is calibrated to equal the measurement at the first time.

    Returns:
        (measured, bound) arrays aligned with ``times``.
    """
    if not (1 <= p < 2):
        raise ValueError(f"p must lie in [1, 2), got {p}")
    if not (0.5 < alpha <= 1.0):
        raise ValueError(f"alpha must lie in (0.5, 1], got {alpha}")
    g = _G_FUNCTIONS[g_of_t] if isinstance(g_of_t, str) else g_of_t
    times = np.asarray(times, dtype=float)
    gv = np.asarray(g(times), dtype=float)
    if np.any(gv <= 0):
        raise ValueError("g must be positive")
    radii = gv ** (-1 / (2 * alpha))
    measured = np.array(
        [2 * math.pi * integrate.quad(lambda r: abs(float(profile(np.asarray(r)))) ** 2 * r, 0, R, epsabs=0, epsrel=1e-12, limit=200)[0] for R in radii]
    )
    shape = gv ** (-(1 / alpha) * (2 / p - 1))
    C = measured[0] / shape[0] if constant is None else constant
    return measured, C * shape


def nonlinear_spectrum_bound_probe(theta: SpectralField) -> float:
    """max_{xi != 0} |N_hat(xi)| / (|xi| ||theta||_{L^2}^2) with N = div(u theta).

    N_hat uses the whole-plane normalization (1/2pi) int N e^{-ix.xi} dx, i.e.
    L^2/(2 pi) times the box coefficient, so the ratio is at most 1/(2 pi).
    """
    energy = float(theta.grid.box_length**2 * np.sum(np.abs(theta.coefficients) ** 2))
    if energy == 0:
        raise ValueError("zero field: ratio undefined")
    g = theta.grid
    nl = nonlinear_term(theta).coefficients
    nz = g.xi_abs > 0
    ratio = (g.box_length**2 / (2 * math.pi)) * np.abs(nl[nz]) / g.xi_abs[nz]
    return float(ratio.max() / energy)


def interpolation_check(theta: SpectralField, m: float, q: float, r: float) -> tuple[float, float]:
    """(||theta||_q, ||theta||_m^a ||theta||_r^{1-a}) with a = (m/q)(r - q)/(r - m).

    The endpoint q = r (a = 0) is accepted as long as m < r.

    Raises:
        ValueError: unless 1 <= m <= q <= r and m < r.
    """
    if not (1 <= m <= q <= r and m < r):
        raise ValueError(f"need 1 <= m <= q <= r with m < r, got m={m}, q={q}, r={r}")
    a = m / q if math.isinf(r) else (m / q) * (r - q) / (r - m)
    lhs = lp_norm(theta, q)
    rhs = lp_norm(theta, m) ** a * lp_norm(theta, r) ** (1 - a)
    return lhs, rhs


def waiting_time(times: Sequence[float], lm_norms: Sequence[float], kappa: float) -> float | None:
    """First sample time where ||theta||_{L^m} <= kappa, or None if never reached."""
    for t, v in zip(times, lm_norms):
        if v <= kappa:
            return float(t)
    return None
