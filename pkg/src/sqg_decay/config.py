"""Run configuration: a YAML (or JSON) document validated strictly with pydantic."""

from __future__ import annotations

import math
import re
from pathlib import Path
from typing import Any, Literal

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .evolution import Integrator, SimConfig, default_dt
from .initial_data import ProfileKind, ProfileSpec
from .spectral import Dealias, GridSpec

__all__ = ["ConfigError", "RunConfig", "parse_config", "load_config", "EXPERIMENTS"]

EXPERIMENTS = (
    "simulate",
    "linear-oracle",
    "kernel-probe",
    "splitting",
    "decay-fit",
    "slow-decay",
    "picard",
    "rate-catalog",
)
Experiment = Literal[
    "simulate", "linear-oracle", "kernel-probe", "splitting", "decay-fit", "slow-decay", "picard", "rate-catalog"
]


class ConfigError(ValueError):
    """Invalid run configuration; the message names the offending key."""


_PI_RE = re.compile(r"^\s*(?P<coef>[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)?\s*\*?\s*pi\s*$")


def _parse_length(value: Any) -> float:
    """Accept a number, "pi", "64*pi" or "64pi"."""
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    if isinstance(value, str):
        try:
            return float(value)
        except ValueError:
            match = _PI_RE.match(value)
            if match:
                return float(match.group("coef") or 1.0) * math.pi
    raise ValueError(f"expected a number or a multiple of pi such as '64*pi', got {value!r}")


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class TimeGrid(_Strict):
    """Either ``linspace`` or ``geomspace``: [start, stop, num]."""

    linspace: tuple[float, float, int] | None = None
    geomspace: tuple[float, float, int] | None = None

    @model_validator(mode="after")
    def _one_rule(self) -> "TimeGrid":
        if (self.linspace is None) == (self.geomspace is None):
            raise ValueError("give exactly one of 'linspace' or 'geomspace'")
        if self.geomspace is not None and self.geomspace[0] <= 0:
            raise ValueError("geomspace start must be positive")
        return self

    def values(self) -> tuple[float, ...]:
        if self.linspace is not None:
            a, b, n = self.linspace
            return tuple(float(v) for v in np.linspace(a, b, n))
        a, b, n = self.geomspace
        return tuple(float(v) for v in np.geomspace(a, b, n))


def _times(value: list[float] | TimeGrid | None) -> tuple[float, ...] | None:
    if value is None:
        return None
    return value.values() if isinstance(value, TimeGrid) else tuple(float(v) for v in value)


class GridModel(_Strict):
    n_points: int
    box_length: float

    @field_validator("box_length", mode="before")
    @classmethod
    def _length(cls, v: Any) -> float:
        return _parse_length(v)

    @model_validator(mode="after")
    def _domain(self) -> "GridModel":
        GridSpec(self.n_points, self.box_length)
        return self

    def build(self) -> GridSpec:
        return GridSpec(self.n_points, self.box_length)


class SimModel(_Strict):
    alpha: float
    t_end: float
    dt: float | None = None
    integrator: Integrator = Integrator.ETD2
    record_times: list[float] | TimeGrid | None = None
    dealias: str = "2/3"
    nonlinear: bool = True

    @field_validator("alpha")
    @classmethod
    def _alpha(cls, v: float) -> float:
        if not (0.5 < v <= 1.0):
            raise ValueError("alpha must lie in (0.5, 1]")
        return v

    @field_validator("t_end")
    @classmethod
    def _t_end(cls, v: float) -> float:
        if not v > 0:
            raise ValueError("t_end must be positive")
        return v

    @field_validator("dealias")
    @classmethod
    def _dealias(cls, v: str) -> str:
        return Dealias.parse(v).value

    def build(self, grid: GridSpec) -> SimConfig:
        dt = self.dt if self.dt is not None else min(default_dt(grid, self.alpha), self.t_end / 2)
        rec = _times(self.record_times)
        return SimConfig(
            alpha=self.alpha,
            dt=dt,
            t_end=self.t_end,
            integrator=self.integrator,
            record_times=rec or tuple(float(v) for v in np.linspace(0, self.t_end, 11)),
            dealias=Dealias.parse(self.dealias),
            nonlinear=self.nonlinear,
        )


class ProfileModel(_Strict):
    kind: ProfileKind
    amplitude: float = 1.0
    length_scale: float = 1.0
    seed: int = 0
    target_norms: list[tuple[float, float]] = Field(default_factory=list)
    aspect: float = 1.0
    mode: tuple[int, int] = (1, 0)

    @field_validator("length_scale", mode="before")
    @classmethod
    def _length(cls, v: Any) -> float:
        return _parse_length(v)

    def build(self, seed: int | None = None) -> ProfileSpec:
        return ProfileSpec(
            kind=self.kind,
            amplitude=self.amplitude,
            length_scale=self.length_scale,
            seed=self.seed if seed is None else seed,
            target_norms=tuple(self.target_norms),
            aspect=self.aspect,
            mode=self.mode,
        )


class KernelProbeModel(_Strict):
    gamma: tuple[int, int] = (0, 0)
    beta: tuple[int, int] = (0, 0)
    j: int = 0
    p: float = 1.0


class AnalysisModel(_Strict):
    q: list[float] = Field(default_factory=lambda: [2.0])
    theorems: list[str] = Field(default_factory=list)
    k: float = 3.0
    fit_window: tuple[float, float] | None = None
    lambdas: list[float] = Field(default_factory=lambda: [1.0, 0.5, 0.25, 0.125])
    alphas: list[float] = Field(default_factory=lambda: [0.6, 0.75, 0.9, 1.0])
    times: list[float] | TimeGrid | None = None
    origin_order: float = 0.0
    n_iters: int = 4
    picard_q: float | None = None
    small_data_norm: float | None = None
    kernel_probes: list[KernelProbeModel] = Field(default_factory=lambda: [KernelProbeModel()])
    smoothing_pairs: list[tuple[float, float]] = Field(default_factory=list)
    write_snapshots: bool = True

    @field_validator("k")
    @classmethod
    def _k(cls, v: float) -> float:
        if not v > 2:
            raise ValueError("k must exceed 2")
        return v

    @field_validator("lambdas")
    @classmethod
    def _lambdas(cls, v: list[float]) -> list[float]:
        if not v or any(not (0 < x <= 1) for x in v):
            raise ValueError("lambdas must lie in (0, 1]")
        if any(b >= a for a, b in zip(v, v[1:])):
            raise ValueError("lambdas must be strictly decreasing")
        return v

    @field_validator("alphas")
    @classmethod
    def _alphas(cls, v: list[float]) -> list[float]:
        for a in v:
            if not (0.5 < a <= 1.0):
                raise ValueError("alpha must lie in (0.5, 1]")
        return v

    @field_validator("q")
    @classmethod
    def _q(cls, v: list[float]) -> list[float]:
        if any(x < 1 for x in v):
            raise ValueError("norm exponents must be >= 1")
        return v

    @field_validator("n_iters")
    @classmethod
    def _n_iters(cls, v: int) -> int:
        if v < 1:
            raise ValueError("n_iters must be >= 1")
        return v

    def time_values(self) -> tuple[float, ...] | None:
        return _times(self.times)


_NEEDS = {
    "simulate": ("grid", "sim", "profile"),
    "linear-oracle": ("sim",),
    "kernel-probe": ("sim",),
    "splitting": ("grid", "sim", "profile"),
    "decay-fit": ("grid", "sim", "profile"),
    "slow-decay": ("grid", "sim", "profile"),
    "picard": ("grid", "sim", "profile"),
    "rate-catalog": (),
}


class RunConfig(_Strict):
    experiment: Experiment
    output_dir: str = "out"
    grid: GridModel | None = None
    sim: SimModel | None = None
    profile: ProfileModel | None = None
    analysis: AnalysisModel = Field(default_factory=AnalysisModel)

    @model_validator(mode="after")
    def _consistent(self) -> "RunConfig":
        missing = [key for key in _NEEDS[self.experiment] if getattr(self, key) is None]
        if missing:
            raise ValueError(f"experiment '{self.experiment}' requires section(s): {', '.join(missing)}")
        if self.grid is not None and self.sim is not None:
            grid = self.grid.build()
            self.sim.build(grid)
            if self.profile is not None:
                from .initial_data import generate

                generate(self.profile.build(), grid)
        return self

    def grid_spec(self) -> GridSpec:
        assert self.grid is not None
        return self.grid.build()

    def sim_config(self) -> SimConfig:
        assert self.sim is not None
        return self.sim.build(self.grid_spec()) if self.grid is not None else self.sim.build(GridSpec(128, 2 * math.pi))

    def profile_spec(self, seed: int | None = None) -> ProfileSpec:
        assert self.profile is not None
        return self.profile.build(seed)


def _format_errors(err: ValidationError) -> str:
    lines = []
    for e in err.errors():
        loc = ".".join(str(p) for p in e["loc"]) or "<root>"
        msg = e["msg"]
        if e["type"] == "extra_forbidden":
            msg = f"unknown key '{e['loc'][-1]}'"
        lines.append(f"{loc}: {msg}")
    return "; ".join(lines)


def parse_config(text: str, experiment: str | None = None) -> RunConfig:
    """Parse and validate a YAML/JSON run configuration.

    ``experiment`` (from the command line) fills in or must match the
    document's ``experiment`` key.

    Raises:
        ConfigError: on malformed documents, unknown keys, missing keys,
            type mismatches or violated constraints.
    """
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed document: {exc}") from exc
    if doc is None:
        doc = {}
    if not isinstance(doc, dict):
        raise ConfigError("top level of the configuration must be a mapping")
    if experiment is not None:
        if "experiment" in doc and doc["experiment"] != experiment:
            raise ConfigError(f"experiment: command line says '{experiment}' but the file says '{doc['experiment']}'")
        doc = {**doc, "experiment": experiment}
    try:
        return RunConfig.model_validate(doc)
    except ValidationError as exc:
        raise ConfigError(_format_errors(exc)) from exc
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path: str | Path, experiment: str | None = None) -> RunConfig:
    return parse_config(Path(path).read_text(), experiment)
