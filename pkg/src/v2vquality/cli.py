"""Command-line entry point: ``v2vquality eval|sweep|optimize|simulate|compare|figure``."""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import asdict
from typing import Optional, Sequence

from . import __version__
from .analytic import assess_link
from .io import columns_for, export, fmt, metadata, write_json, write_table
from .optimizer import (
    DEFAULT_R_MAX,
    DEFAULT_R_MIN,
    DEFAULT_R_STEP,
    SweepGrid,
    SweepResult,
    SweepRow,
    figure_data,
    grid_values,
    optimal_hop_distance,
    sweep,
)
from .params import Config, ConfigError, ValidationError, load_config
from .sim import DEFAULT_MAX_SLOTS, FADING_MODES, PLACEMENT_MODES, InsufficientData, run_ensemble

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3

COMMANDS = ("eval", "sweep", "optimize", "simulate", "compare", "figure")
ENGINE_ALIASES = {"analytic": "analytic", "mc": "montecarlo", "montecarlo": "montecarlo"}

COMPARE_COLUMNS = (
    "rho", "r_m", "alpha", "beta",
    "P", "P_mc", "P_ci_lo", "P_ci_hi", "P_gap",
    "T_us", "T_mc_us", "T_se_us", "T_gap_us",
    "Q", "Q_mc", "Q_gap", "trials",
)


class UsageError(Exception):
    pass


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="key = value parameter file")
    common.add_argument("--set", dest="overrides", action="append", default=[],
                        metavar="KEY=VALUE", help="override one config key (repeatable, last wins)")
    common.add_argument("--seed", type=int, help="base seed for Monte Carlo runs")
    common.add_argument("--trials", type=int, default=None, help="Monte Carlo trials per point")
    common.add_argument("--out", metavar="PATH", help="output file (default: stdout)")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--figure", type=int, choices=(2, 3, 4, 5))
    common.add_argument("--engine", choices=tuple(ENGINE_ALIASES), default="analytic")
    common.add_argument("--r-min", type=float, default=None)
    common.add_argument("--r-max", type=float, default=None)
    common.add_argument("--r-step", type=float, default=None)
    common.add_argument("--rho-min", type=float, default=None)
    common.add_argument("--rho-max", type=float, default=None)
    common.add_argument("--rho-step", type=float, default=0.01)
    common.add_argument("--fading-mode", choices=FADING_MODES, default="per_slot")
    common.add_argument("--placement", choices=PLACEMENT_MODES, default="poisson",
                        help="'lattice' forces vehicles every r meters")
    common.add_argument("--max-slots", type=int, default=DEFAULT_MAX_SLOTS,
                        help="retransmission cap per hop")
    common.add_argument("--jobs", type=int, default=1, help="worker processes for Monte Carlo")

    parser = argparse.ArgumentParser(prog="v2vquality", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "eval": "closed-form P, T, D, Q* at one parameter point",
        "sweep": "Q* over a (rho, r) grid",
        "optimize": "best hop distance r* for the configured density and weights",
        "simulate": "Monte Carlo ensemble at one parameter point",
        "compare": "closed-form vs Monte Carlo, side by side",
        "figure": "data behind one of the parameter-study figures",
    }
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name])
    return parser


def _note_defaults(config: Config) -> None:
    if not config.defaulted:
        return
    values = config.as_dict()
    listed = ", ".join(f"{k}={values[k]:g}" for k in config.defaulted)
    print(f"note: built-in defaults used for {listed}", file=sys.stderr)


def _r_grid(args, config: Config) -> list[float]:
    if args.r_min is None and args.r_max is None and args.r_step is None and args.command == "compare":
        return [config.scenario.hop_distance_m]
    r_min = DEFAULT_R_MIN if args.r_min is None else args.r_min
    r_max = DEFAULT_R_MAX if args.r_max is None else args.r_max
    step = DEFAULT_R_STEP if args.r_step is None else args.r_step
    return grid_values(r_min, r_max, step)


def _rho_grid(args, config: Config) -> list[float]:
    if args.rho_min is None and args.rho_max is None:
        return [config.scenario.density_per_m]
    lo = args.rho_min if args.rho_min is not None else args.rho_max
    hi = args.rho_max if args.rho_max is not None else args.rho_min
    return grid_values(lo, hi, args.rho_step)


def _require_seed(args) -> int:
    if args.seed is None:
        raise UsageError(f"--seed is required for '{args.command}'")
    return args.seed


def _mc_options(args, default_trials: int) -> dict:
    return {
        "trials": args.trials or default_trials,
        "seed": args.seed if args.seed is not None else 0,
        "max_slots_per_hop": args.max_slots,
        "fading_mode": args.fading_mode,
        "placement": args.placement,
        "n_jobs": args.jobs,
    }


def _emit(rows: list[dict], columns, args, meta: dict) -> None:
    if args.out:
        if args.format == "json":
            write_json(rows, columns, args.out, meta)
        else:
            write_table(rows, columns, args.out, meta)
        return
    if args.format == "json":
        json.dump({"metadata": meta, "rows": rows}, sys.stdout, indent=2, default=str)
        sys.stdout.write("\n")
        return
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([fmt(row.get(c)) for c in columns])


def _emit_result(result: SweepResult, args, **extra) -> None:
    if args.out:
        export(result, args.out, args.format, **extra)
    else:
        _emit([asdict(r) for r in result.rows], columns_for(result), args, metadata(result, **extra))


def cmd_eval(args, config: Config) -> int:
    a = assess_link(config.scenario, config.radio, config.profile)
    lines = {
        "P": a.connectivity,
        "T_us": a.delay_us,
        "D": a.delay_indicator,
        "Q": a.quality,
        "hop_count": a.hop_count,
        "margin_db": a.margin_db,
        "P_hop": a.hop_success,
        "erlang_shape": a.erlang_shape,
        "erlang_base": a.erlang_base,
        "delay_saturated": a.delay_saturated,
    }
    if args.out:
        row = SweepRow(config.scenario.density_per_m, config.scenario.hop_distance_m,
                       config.profile.alpha, config.profile.beta, a.connectivity, a.delay_us,
                       a.delay_indicator, a.quality)
        result = SweepResult([row], "analytic",
                             {"radio": asdict(config.radio), "scenario": asdict(config.scenario)})
        export(result, args.out, args.format, intermediates=lines)
    for key, value in lines.items():
        print(f"{key} = {fmt(value)}")
    return EXIT_OK


def cmd_sweep(args, config: Config) -> int:
    grid = SweepGrid(_rho_grid(args, config), _r_grid(args, config), (config.profile,))
    engine = ENGINE_ALIASES[args.engine]
    opts = _mc_options(args, 2000) if engine == "montecarlo" else {}
    result = sweep(grid, config.radio, config.scenario, engine, **opts)
    _emit_result(result, args)
    return EXIT_OK


def cmd_optimize(args, config: Config) -> int:
    r_min = DEFAULT_R_MIN if args.r_min is None else args.r_min
    r_max = DEFAULT_R_MAX if args.r_max is None else args.r_max
    step = DEFAULT_R_STEP if args.r_step is None else args.r_step
    rows = []
    for rho in _rho_grid(args, config):
        r_star, q_star = optimal_hop_distance(
            rho, config.profile, config.radio, config.scenario, r_min, r_max, step
        )
        rows.append({"rho": rho, "alpha": config.profile.alpha, "beta": config.profile.beta,
                     "r_star_m": r_star, "Q_star": q_star})
    meta = {"tool": "v2vquality", "version": __version__, "engine": "analytic",
            "radio": asdict(config.radio), "scenario": asdict(config.scenario),
            "r_min": r_min, "r_max": r_max, "r_step": step}
    _emit(rows, ("rho", "alpha", "beta", "r_star_m", "Q_star"), args, meta)
    return EXIT_OK


def cmd_simulate(args, config: Config) -> int:
    seed = _require_seed(args)
    opts = _mc_options(args, 10000)
    stats = run_ensemble(config.scenario, config.radio, config.profile, **opts)
    s = config.scenario
    row = SweepRow(
        s.density_per_m, s.hop_distance_m, stats.alpha, stats.beta,
        stats.connectivity_hat, stats.mean_delay_us, 1.0 - stats.mean_delay_us / s.max_delay_us,
        stats.quality_hat, stats.connectivity_ci[0], stats.connectivity_ci[1],
        stats.delay_se_us, stats.trials,
    )
    result = SweepResult([row], "montecarlo", {
        "radio": asdict(config.radio), "scenario": asdict(s), "seed": seed,
        **{k: v for k, v in opts.items() if k not in ("seed", "n_jobs")},
    })
    _emit_result(result, args, stats=asdict(stats))
    return EXIT_OK


def compare_rows(config: Config, r_values, rho_values, opts: dict) -> list[dict]:
    rows = []
    for rho in rho_values:
        for r in r_values:
            scenario = config.scenario.replace(density_per_m=rho, hop_distance_m=r)
            a = assess_link(scenario, config.radio, config.profile)
            row = {"rho": rho, "r_m": r, "alpha": config.profile.alpha,
                   "beta": config.profile.beta, "P": a.connectivity, "T_us": a.delay_us,
                   "Q": a.quality}
            try:
                stats = run_ensemble(scenario, config.radio, config.profile, **opts)
            except InsufficientData as exc:
                stats = exc.stats
                row["error"] = str(exc)
            row.update(
                P_mc=stats.connectivity_hat,
                P_ci_lo=stats.connectivity_ci[0],
                P_ci_hi=stats.connectivity_ci[1],
                P_gap=abs(stats.connectivity_hat - a.connectivity),
                T_mc_us=stats.mean_delay_us,
                T_se_us=stats.delay_se_us,
                T_gap_us=abs(stats.mean_delay_us - a.delay_us),
                Q_mc=stats.quality_hat,
                Q_gap=abs(stats.quality_hat - a.quality),
                trials=stats.trials,
            )
            rows.append(row)
    return rows


def cmd_compare(args, config: Config) -> int:
    seed = _require_seed(args)
    opts = _mc_options(args, 10000)
    rows = compare_rows(config, _r_grid(args, config), _rho_grid(args, config), opts)
    meta = {"tool": "v2vquality", "version": __version__, "engine": "analytic+montecarlo",
            "radio": asdict(config.radio), "scenario": asdict(config.scenario),
            "profile": asdict(config.profile), "seed": seed,
            **{k: v for k, v in opts.items() if k not in ("seed", "n_jobs")},
            "failed_rows": [r for r in rows if "error" in r]}
    _emit(rows, COMPARE_COLUMNS, args, meta)
    return EXIT_OK


def cmd_figure(args, config: Config) -> int:
    if args.figure is None:
        raise UsageError("--figure 2|3|4|5 is required")
    engine = ENGINE_ALIASES[args.engine]
    opts = _mc_options(args, 2000) if engine == "montecarlo" else {}
    if engine == "montecarlo":
        print("warning: Monte Carlo figure grids run thousands of trials per point; "
              "this can take minutes", file=sys.stderr)
    result = figure_data(args.figure, config.radio, config.scenario, engine, **opts)
    _emit_result(result, args)
    return EXIT_OK


HANDLERS = {
    "eval": cmd_eval,
    "sweep": cmd_sweep,
    "optimize": cmd_optimize,
    "simulate": cmd_simulate,
    "compare": cmd_compare,
    "figure": cmd_figure,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config, tuple(args.overrides))
    except (ConfigError, ValidationError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"config error: cannot read {args.config}: {exc.strerror or exc}", file=sys.stderr)
        return EXIT_CONFIG
    _note_defaults(config)
    try:
        return HANDLERS[args.command](args, config)
    except (UsageError, ValidationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InsufficientData as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
