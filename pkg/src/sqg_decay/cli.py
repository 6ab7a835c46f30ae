"""Command line entry point: ``sqg-decay <experiment> --config FILE [--out DIR] [--seed N]``.

Exit status: 0 success, 1 configuration error, 2 numerical failure,
3 output (filesystem) failure.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
import time
from dataclasses import replace
from pathlib import Path
from typing import Callable

import numpy as np

from . import analysis, evolution, initial_data, kernels
from .config import EXPERIMENTS, ConfigError, RunConfig, load_config
from .io import write_csv, write_manifest, write_snapshot
from .spectral import lp_norm

__all__ = ["run", "main"]

log = logging.getLogger("sqg_decay")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_IO = 0, 1, 2, 3
NUMERICAL_ERRORS = (
    evolution.InstabilityError,
    evolution.PicardDivergenceError,
    kernels.KernelQuadratureError,
    FloatingPointError,
)


def _norm_label(q: float) -> str:
    return "norm_Linf" if math.isinf(q) else f"norm_L{q:g}"


class _Run:
    """Experiment execution against one output directory."""

    def __init__(self, config: RunConfig, out_dir: Path, seed: int | None):
        self.config = config
        self.out = out_dir
        self.seed = seed
        self.outputs: list[str] = []
        self.summary: dict = {}

    def csv(self, name: str, header, rows) -> None:
        write_csv(self.out / name, header, rows)
        self.outputs.append(name)

    def initial_field(self):
        cfg = self.config
        return initial_data.generate(cfg.profile_spec(self.seed), cfg.grid_spec())

    def sim_config(self, record_times: tuple[float, ...] | None = None) -> evolution.SimConfig:
        sim = self.config.sim_config()
        if record_times is not None and self.config.sim.record_times is None:
            sim = replace(sim, record_times=record_times)
        return sim

    def snapshots(self, traj: evolution.Trajectory) -> None:
        if not self.config.analysis.write_snapshots:
            return
        snap_dir = self.out / "snapshots"
        snap_dir.mkdir(exist_ok=True)
        for i, (t, field) in enumerate(traj.samples):
            name = f"snapshots/snap_{i:04d}.sqgd"
            write_snapshot(self.out / name, field, traj.config.alpha, t)
            self.outputs.append(name)

    def norm_table(self, traj: evolution.Trajectory, qs: list[float]) -> tuple[list[str], dict[float, np.ndarray], list[list]]:
        norms = {q: traj.norms(q) for q in qs}
        header = ["t", *(_norm_label(q) for q in qs)]
        rows = [[t, *(norms[q][i] for q in qs)] for i, t in enumerate(traj.times)]
        return header, norms, rows

    # experiments

    def simulate(self) -> None:
        qs = sorted({2.0, 4.0, math.inf, *self.config.analysis.q})
        traj = evolution.simulate(self.initial_field(), self.sim_config())
        header, _, rows = self.norm_table(traj, qs)
        rows = [[*row, f.mean] for row, f in zip(rows, traj.fields)]
        self.csv("timeseries.csv", [*header, "mean"], rows)
        self.snapshots(traj)
        self.summary["max_principle_monitor"] = {_norm_label(p): v for p, v in traj.monitor.items()}

    def linear_oracle(self) -> None:
        an = self.config.analysis
        alpha = self.config.sim.alpha
        order = an.origin_order
        times = an.time_values() or tuple(np.geomspace(10, 1000, 41))
        series = analysis.linear_decay_oracle(
            lambda r: np.where(r <= 1.0, np.power(r, order), 0.0), alpha, order, times, breakpoints=(1.0,)
        )
        self.csv("linear_oracle.csv", ["t", "norm_L2"], zip(series.times, series.norms))
        window = an.fit_window or (float(series.times[0]), float(series.times[-1]))
        slope, r2 = analysis.fit_decay(series.times, series.norms, window)
        self.summary.update(fitted_exponent=slope, predicted_exponent=series.predicted_exponent, r_squared=r2)
        print(f"fitted_exponent={slope:.6g}, predicted_exponent={series.predicted_exponent:.6g}")

    def kernel_probe(self) -> None:
        an = self.config.analysis
        alpha = self.config.sim.alpha
        times = an.time_values() or tuple(np.geomspace(1, 100, 9))
        reports = [
            kernels.kernel_norm_scaling_probe(p.gamma, p.beta, p.j, p.p, alpha, times) for p in an.kernel_probes
        ]
        tests = [kernels.gaussian_test_function(1.0), kernels.exponential_test_function(1.0)]
        reports += [kernels.smoothing_estimate_probe(p, q, alpha, tests, times) for p, q in an.smoothing_pairs]
        rows = []
        for rep in reports:
            predicted = rep.measured_norms[0] * (rep.times / rep.times[0]) ** rep.predicted_exponent
            rows += [[rep.probe_id, t, m, pr] for t, m, pr in zip(rep.times, rep.measured_norms, predicted)]
            self.summary[rep.probe_id] = {
                "fitted_exponent": rep.fitted_exponent,
                "predicted_exponent": rep.predicted_exponent,
                "max_ratio": rep.max_ratio,
            }
        self.csv("kernel_probes.csv", ["probe_id", "t", "measured", "predicted"], rows)

    def splitting(self) -> None:
        an = self.config.analysis
        t_end = self.config.sim.t_end
        rec = an.time_values() or tuple(np.geomspace(min(1.0, t_end / 1000), t_end, 48))
        traj = evolution.simulate(self.initial_field(), self.sim_config(rec))
        rep = analysis.splitting_report(traj, an.k)
        cols = [rep.low_energy, rep.high_energy, rep.total_energy, rep.term_I, rep.term_II, rep.term_III, rep.term_IV, rep.term_II_raw]
        rows = [[t, *(c[i] for c in cols)] for i, t in enumerate(rep.times)]
        self.csv("splitting.csv", ["t", "low", "high", "total", "I", "II", "III", "IV", "II_raw"], rows)
        self.summary["triangle_split_holds"] = rep.triangle_split_holds()
        self.summary["terms_decreased"] = {k: bool(v[-1] < v[1]) for k, v in rep.terms.items()}

    def _default_theorem(self, q: float, alpha: float) -> str:
        if q == 2:
            return "CW_13"
        if q >= evolution.critical_exponent(alpha):
            return "THM_15"
        return "JU_14"

    def decay_fit(self) -> None:
        an = self.config.analysis
        t_end = self.config.sim.t_end
        alpha = self.config.sim.alpha
        rec = an.time_values() or tuple(np.geomspace(t_end / 1000, t_end, 64))
        traj = evolution.simulate(self.initial_field(), self.sim_config(rec))
        qs = list(an.q)
        if an.theorems and len(an.theorems) != len(qs):
            raise ConfigError("analysis.theorems: give one theorem per entry of analysis.q")
        theorems = an.theorems or [self._default_theorem(q, alpha) for q in qs]
        header, norms, rows = self.norm_table(traj, qs)
        self.csv("decay.csv", header, rows)
        summary_rows = []
        for q, tid in zip(qs, theorems):
            pq = None if tid == "CW_13" else q
            rep = analysis.decay_report(traj.times, norms[q], q, tid, alpha, pq=pq, window=an.fit_window)
            summary_rows.append([q, tid, rep.fitted_exponent, rep.catalog_exponent, rep.relative_error, rep.r_squared])
            print(f"q={q:g}: {rep.fitted_exponent:.6g}, {rep.catalog_exponent:.6g}, {rep.relative_error:.6g}")
        self.csv(
            "decay_summary.csv",
            ["q", "theorem_id", "fitted_exponent", "catalog_exponent", "relative_error", "r_squared"],
            summary_rows,
        )

    def slow_decay(self) -> None:
        an = self.config.analysis
        cfg = self.sim_config()
        series = initial_data.slow_decay_experiment(self.initial_field(), an.lambdas, cfg.t_end, cfg)
        self.csv("slow_decay.csv", ["lambda", "ratio", "gap"], [[lam, r, 1 - r] for lam, r in series])
        if len(series) >= 2:
            self.summary["gap_slope"] = initial_data.gap_slope(series)

    def picard(self) -> None:
        an = self.config.analysis
        cfg = self.sim_config()
        theta0 = self.initial_field()
        if an.small_data_norm is not None:
            theta0 = theta0 * (an.small_data_norm / lp_norm(theta0, cfg.m))
        q = an.picard_q if an.picard_q is not None else cfg.m
        results = evolution.picard_iterate(theta0, cfg, an.n_iters, q)
        records = [r for _, r in results]
        self.csv(
            "picard.csv",
            ["n", "K_n", "Kp_n", "increment", "duhamel_sup"],
            [[r.n, r.K_n, r.Kp_n, r.increment, r.duhamel_sup] for r in records],
        )
        if len(records) >= 2:
            c = evolution.measured_kato_constant(records)
            self.summary["kato_constant"] = c
            if c > 0:
                self.summary["kato_recursion_bounded"] = evolution.kato_recursion_check(records[0].K_n, c, an.n_iters)

    def rate_catalog(self) -> None:
        rows = [
            [e.theorem_id.value, e.alpha, e.pq, e.exponent, e.quantity, e.variable, e.validity]
            for e in analysis.catalog_table(self.config.analysis.alphas)
        ]
        self.csv("rate_catalog.csv", ["theorem_id", "alpha", "pq", "exponent", "quantity", "variable", "validity"], rows)


_DISPATCH: dict[str, Callable[[_Run], None]] = {
    "simulate": _Run.simulate,
    "linear-oracle": _Run.linear_oracle,
    "kernel-probe": _Run.kernel_probe,
    "splitting": _Run.splitting,
    "decay-fit": _Run.decay_fit,
    "slow-decay": _Run.slow_decay,
    "picard": _Run.picard,
    "rate-catalog": _Run.rate_catalog,
}


def run(config: RunConfig, out_dir: str | Path | None = None, seed: int | None = None) -> int:
    """Execute the configured experiment and write its outputs.

    Returns:
        The process exit status (0 success, 1 configuration error,
        2 numerical failure, 3 filesystem failure).
    """
    out = Path(out_dir if out_dir is not None else config.output_dir)
    start = time.perf_counter()
    try:
        out.mkdir(parents=True, exist_ok=True)
        job = _Run(config, out, seed)
        _DISPATCH[config.experiment](job)
        write_manifest(
            out / "manifest.json",
            config.model_dump(mode="json"),
            job.outputs,
            time.perf_counter() - start,
            job.summary,
        )
    except NUMERICAL_ERRORS as exc:
        log.error("numerical failure: %s", exc)
        return EXIT_NUMERICAL
    except ConfigError as exc:
        log.error("configuration error: %s", exc)
        return EXIT_CONFIG
    except OSError as exc:
        log.error("output failure: %s", exc)
        return EXIT_IO
    except ValueError as exc:
        log.error("invalid parameters: %s", exc)
        return EXIT_CONFIG
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="sqg-decay", description="Decay experiments for the dissipative QG equation.")
    parser.add_argument("experiment", choices=EXPERIMENTS)
    parser.add_argument("--config", required=True, help="YAML or JSON run configuration")
    parser.add_argument("--out", default=None, help="output directory (overrides output_dir)")
    parser.add_argument("--seed", type=int, default=None, help="overrides profile.seed")
    parser.add_argument("-v", "--verbose", action="store_true")
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        config = load_config(args.config, args.experiment)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"cannot read configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return run(config, args.out, args.seed)


if __name__ == "__main__":
    sys.exit(main())
