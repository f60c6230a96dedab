"""Command-line entry point.

    lorstab run <config> [--out DIR] [--level N] [--seed K]
    lorstab sweep <config> --param {s0,level,amplitude} --values v1,v2,... [--out DIR]

Exit codes: 0 success, 2 hypotheses-violated verdict, 3 construction or
solver failure, 4 configuration error.  Reports and CSV tables are
byte-stable for a fixed config and seed; wall times go to stdout only.
LORSTAB_THREADS caps sweep/stencil parallelism without changing output.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
import time
from math import log2
from pathlib import Path

import numpy as np

from .config import ConfigError, ScenarioConfig, load_config
from .fem import SolverError
from .harmonics import HarmonicField
from .lorentz import KillingFieldSpec
from .parallel import ordered_map
from .report import fmt, render_run_report, write_checks_csv, write_sweep_csv
from .stability import (
    DegenerateFieldError,
    Tolerances,
    analyze,
    conformal_identity_check,
    killing_eigen_check,
)
from .surfaces import (
    GraphConstructionError,
    GraphSurface,
    build_graph,
    build_slice,
    support_function,
    surface_from_mesh_file,
)
from .variation import (
    FlowError,
    NormalVariation,
    VariationCheck,
    verify_first_variation,
    verify_second_variation,
    verify_sr_evolution,
    volume_derivative_check,
)

__all__ = ["main", "run_scenario", "sweep_scenario"]

EXIT_OK = 0
EXIT_HYPOTHESES = 2
EXIT_SOLVER = 3
EXIT_CONFIG = 4


def _build_surface(config: ScenarioConfig) -> tuple[GraphSurface, list[tuple[str, object]]]:
    if config.n != 2:
        raise ConfigError("meshed analysis requires n = 2 (the algebra layer alone covers other n)", key="n")
    extra: list[tuple[str, object]] = []
    if config.scenario == "slice":
        surface = build_slice(config.n, config.s0, axis=config.axis_array).meshed(config.level)
    elif config.scenario == "graph":
        surface = build_graph(
            config.s0, perturbations=config.perturbations,
            level=config.level, axis=config.axis_array,
        )
        extra.append(("metric_anisotropy", surface.cache.metric_ratio))
    else:
        surface, residual = surface_from_mesh_file(
            config.mesh_file, axis=config.axis_array, fit_lmax=config.mesh_fit_lmax
        )
        extra.append(("mesh_fit_residual", residual))
    return surface, extra


def _variation_battery(surface: GraphSurface, config: ScenarioConfig) -> list[VariationCheck]:
    if not surface.is_slice:
        raise ConfigError(
            "variation checks need a slice scenario (normal flows of graphs "
            "leave the analytic family)",
            key="checks",
        )
    r = config.r
    h1 = config.fd_h
    h2 = 10.0 * config.fd_h
    const = NormalVariation(base=surface, amplitude=HarmonicField(constant=1.0))
    y10 = NormalVariation(base=surface, amplitude=HarmonicField(terms=((1, 0, 1.0),)))
    y20 = NormalVariation(base=surface, amplitude=HarmonicField(terms=((2, 0, 1.0),)))
    checks = [
        verify_first_variation(const, r, h=h1),
        verify_first_variation(y20, r, h=h1),
        verify_sr_evolution(const, r, h=h1),
        verify_sr_evolution(y10, r, h=h1),
        volume_derivative_check(const, h=h1),
        volume_derivative_check(y10, h=h1),
        verify_second_variation(y10, r, h=h2),
        verify_second_variation(y20, r, h=h2),
    ]
    return checks


def run_scenario(config: ScenarioConfig, out_dir: str | Path) -> int:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()

    surface, extra = _build_surface(config)
    tolerances = Tolerances(
        gap=config.tol_gap,
        constancy=config.constancy_tolerance,
        solver=config.solver_tol,
        seed=config.seed,
    )

    stability_report = None
    scalar_checks: list[tuple[str, float]] = []
    variation_checks: list[VariationCheck] = []

    if "stability" in config.checks:
        stability_report = analyze(surface, config.r, tolerances)
    if "killing" in config.checks:
        spec = KillingFieldSpec(
            u=np.array(config.killing_u), v=config.killing_v_array, k=1.0
        )
        residual = killing_eigen_check(surface, config.r, spec, solver_tol=config.solver_tol)
        eta = support_function(surface, spec)
        mean_frac = abs(float(np.sum(surface.cache.weights * eta))) / (
            surface.cache.area * max(float(np.abs(eta).max()), 1e-30)
        )
        scalar_checks.append(("killing_residual", residual))
        scalar_checks.append(("killing_eta_mean_fraction", mean_frac))
    if "conformal" in config.checks:
        scalar_checks.append(
            ("conformal_residual", conformal_identity_check(surface, config.r, surface.axis))
        )
    if "variation" in config.checks:
        variation_checks = _variation_battery(surface, config)

    report_text = render_run_report(config, stability_report, scalar_checks, variation_checks, extra)
    (out / "report.txt").write_text(report_text, encoding="utf-8")
    if variation_checks:
        write_checks_csv(out / "checks.csv", variation_checks)
    print(f"report: {out / 'report.txt'}")
    print(f"wall_time_s={time.perf_counter() - t0:.3f}")

    if stability_report is not None and stability_report.verdict == "hypotheses-violated":
        return EXIT_HYPOTHESES
    return EXIT_OK


_SWEEP_HEADER = [
    "param", "value", "lambda", "lambda1", "gap",
    "lambda_residual", "h_next_residual", "verdict", "empirical_order",
]


def sweep_scenario(config: ScenarioConfig, param: str, values: list[float], out_dir: str | Path) -> int:
    if param not in ("s0", "level", "amplitude"):
        raise ConfigError(f"sweep parameter must be s0, level, or amplitude, got '{param}'")
    if param == "amplitude" and not config.perturbations:
        raise ConfigError("amplitude sweeps need at least one configured perturbation", key="perturbations")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()

    def configure(value: float) -> ScenarioConfig:
        if param == "s0":
            return dataclasses.replace(config, s0=float(value))
        if param == "level":
            return dataclasses.replace(config, level=int(value))
        first = config.perturbations[0]
        rest = config.perturbations[1:]
        return dataclasses.replace(
            config, perturbations=((first[0], first[1], float(value)),) + rest
        )

    def evaluate(value: float):
        cfg = configure(value)
        surface, _ = _build_surface(cfg)
        tolerances = Tolerances(
            gap=cfg.tol_gap, constancy=cfg.constancy_tolerance,
            solver=cfg.solver_tol, seed=cfg.seed,
        )
        return analyze(surface, cfg.r, tolerances)

    reports = ordered_map(evaluate, values)
    rows = []
    prev_gap = None
    orders = []
    for value, rep in zip(values, reports):
        order = ""
        if param == "level" and prev_gap is not None and rep.gap != 0.0:
            order = log2(abs(prev_gap) / abs(rep.gap))
            orders.append(order)
        rows.append(
            [param, value, rep.lambda_mean, rep.eigen.lambda1, rep.gap,
             rep.lambda_residual, rep.h_next_residual, rep.verdict, order]
        )
        prev_gap = rep.gap
    write_sweep_csv(out / "sweep.csv", _SWEEP_HEADER, rows)
    print(f"sweep: {out / 'sweep.csv'}")
    if orders:
        print(f"empirical_order_mean={fmt(float(np.mean(orders)))}")
    print(f"wall_time_s={time.perf_counter() - t0:.3f}")
    if any(rep.verdict == "hypotheses-violated" for rep in reports):
        return EXIT_HYPOTHESES
    return EXIT_OK


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lorstab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one scenario and write its report")
    p_run.add_argument("config")
    p_run.add_argument("--out", default="lorstab-out")
    p_run.add_argument("--level", type=int, default=None)
    p_run.add_argument("--seed", type=int, default=None)

    p_sweep = sub.add_parser("sweep", help="sweep one parameter over a value list")
    p_sweep.add_argument("config")
    p_sweep.add_argument("--param", required=True)
    p_sweep.add_argument("--values", required=True)
    p_sweep.add_argument("--out", default="lorstab-out")
    return parser


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        config = load_config(args.config)
        if args.command == "run":
            if args.level is not None:
                if args.level not in (3, 4, 5, 6):
                    raise ConfigError(f"key 'level': expected one of (3, 4, 5, 6), got {args.level}", key="level")
                config = dataclasses.replace(config, level=args.level)
            if args.seed is not None:
                config = dataclasses.replace(config, seed=args.seed)
            return run_scenario(config, args.out)
        values = [float(v) for v in args.values.split(",") if v.strip()]
        if not values:
            raise ConfigError("sweep needs a nonempty --values list")
        return sweep_scenario(config, args.param, values, args.out)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except (GraphConstructionError, FlowError, SolverError, DegenerateFieldError) as err:
        print(f"computation failed: {err}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    raise SystemExit(main())
