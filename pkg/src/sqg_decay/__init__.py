"""Pseudo-spectral solver and decay-rate verification harness for the
dissipative quasi-geostrophic equation theta_t + u . grad theta + (-Delta)^alpha theta = 0,
1/2 < alpha <= 1, on a periodic box."""

__version__ = "0.1.0"

from .spectral import (
    Dealias,
    GridSpec,
    SpectralField,
    VelocityField,
    forward_transform,
    fractional_symbol,
    inverse_transform,
    lp_norm,
    nonlinear_term,
    riesz_velocity,
)
from .evolution import (
    InstabilityError,
    Integrator,
    KatoIterateRecord,
    PicardDivergenceError,
    SimConfig,
    Trajectory,
    kato_recursion_check,
    linear_propagate,
    picard_iterate,
    simulate,
    step,
)
from .initial_data import ProfileKind, ProfileSpec, generate, lambda_rescale, slow_decay_experiment

__all__ = [
    "__version__",
    "Dealias",
    "GridSpec",
    "SpectralField",
    "VelocityField",
    "forward_transform",
    "inverse_transform",
    "fractional_symbol",
    "riesz_velocity",
    "nonlinear_term",
    "lp_norm",
    "Integrator",
    "SimConfig",
    "Trajectory",
    "KatoIterateRecord",
    "InstabilityError",
    "PicardDivergenceError",
    "linear_propagate",
    "step",
    "simulate",
    "picard_iterate",
    "kato_recursion_check",
    "ProfileKind",
    "ProfileSpec",
    "generate",
    "lambda_rescale",
    "slow_decay_experiment",
]
