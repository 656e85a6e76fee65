"""Command-line front end.

Exit codes: 0 success, 1 solver or runtime failure, 2 usage or config error.
Human-readable summaries go to stdout; machine-readable results only to the
files named on the command line.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import secrets
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, load_config
from .experiments import SweepKind, SweepSpec, run_sweep, summarize
from .fp_power import FpOptions, write_fp_trace
from .mode_search import (
    DEFAULT_N_LIMIT,
    SlsOptions,
    exhaustive_optimal,
    stochastic_local_search,
)
from .rates import max_powers
from .model import DeviceArrays
from .time_alloc import DEFAULT_GS_TOL

EXIT_OK, EXIT_FAILURE, EXIT_USAGE = 0, 1, 2

SWEEP_KINDS = {
    "fig3": SweepKind.FIG3_STUDY,
    "lambda": SweepKind.LAMBDA_SWEEP,
    "schemes": SweepKind.SCHEME_COMPARISON,
    "size": SweepKind.SIZE_SWEEP,
    "iters": SweepKind.ITERATION_PROFILE,
}

log = logging.getLogger("wpmec")


class UsageError(Exception):
    pass


def _seed(value):
    seed = int(value)
    if not 0 <= seed < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return seed


def _int_list(value):
    try:
        items = [int(v) for v in value.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {value!r}")
    if not items or min(items) < 1:
        raise argparse.ArgumentTypeError("expected a non-empty list of positive integers")
    return items


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wpmec",
        description="Weighted sum computation rate maximization for wireless-powered MEC with CDMA offloading.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML instance file (default: the 6-device line geometry); "
                                         "relative paths also resolve against $WPMEC_CONFIG_DIR")
    common.add_argument("--seed", type=_seed, help="64-bit seed; drawn from OS entropy when omitted")
    common.add_argument("--output", "-o", help="result file")
    common.add_argument("--timing", action="store_true",
                        help="record wall-clock times in the result files (makes them run-dependent)")
    common.add_argument("--beta0-scale", type=float, default=SlsOptions.beta0_scale,
                        help="initial SLS temperature as a multiple of the first candidate set's mean objective")
    common.add_argument("--beta0", type=float, help="absolute initial SLS temperature (overrides --beta0-scale)")
    common.add_argument("--max-iters", type=int, default=SlsOptions.max_iters, help="SLS iteration cap")
    common.add_argument("--conv-tol", type=float, default=SlsOptions.conv_tol, help="SLS stopping tolerance")
    common.add_argument("--gs-tol", type=float, default=DEFAULT_GS_TOL, help="golden-section tolerance on alpha")
    common.add_argument("--no-cache", action="store_true", help="disable memoization of F(x)")

    p = sub.add_parser("solve", parents=[common], help="run the stochastic local search on one instance")
    p.add_argument("--fp-trace", help="CSV of the FP objective per outer iteration for every FP invocation")
    p.add_argument("--sls-trace", help="CSV of the SLS walk")

    p = sub.add_parser("sweep", parents=[common], help="run a simulation campaign and write a CSV")
    p.add_argument("--sweep", required=True, choices=sorted(SWEEP_KINDS))
    p.add_argument("--lambda-from", type=float, default=2.6)
    p.add_argument("--lambda-to", type=float, default=3.4)
    p.add_argument("--lambda-step", type=float, default=0.2)
    p.add_argument("--n-list", type=_int_list, default=[5, 10, 15, 20])
    p.add_argument("--placements", type=int, default=20)
    p.add_argument("--oracle-n-limit", type=int, default=8,
                   help="largest N for which size sweeps also run the exhaustive oracle")
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1, help="worker processes")

    p = sub.add_parser("oracle", parents=[common], help="compare the SLS with exhaustive search")
    p.add_argument("--n-limit", type=int, default=DEFAULT_N_LIMIT)
    return parser


def _options(args) -> tuple[SlsOptions, FpOptions]:
    try:
        sls = SlsOptions(beta0=args.beta0, beta0_scale=args.beta0_scale, max_iters=args.max_iters,
                         conv_tol=args.conv_tol, seed=args.seed, cache_enabled=not args.no_cache)
    except ValueError as exc:
        raise UsageError(str(exc))
    return sls, FpOptions()


def _write_json(path, payload) -> None:
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _lambda_grid(start, stop, step) -> list[float]:
    if step <= 0 or stop < start:
        raise UsageError("lambda range needs --lambda-step > 0 and --lambda-to >= --lambda-from")
    count = int(np.floor((stop - start) / step + 1e-9)) + 1
    return [round(start + k * step, 10) for k in range(count)]


def cmd_solve(args) -> int:
    cfg = load_config(args.config)
    sls, fp = _options(args)
    devices = cfg.devices()
    report = stochastic_local_search(cfg.params, devices, sls, fp, args.gs_tol)
    best = report.best
    caps = max_powers(DeviceArrays.of(devices), best.alpha, cfg.params)
    print(f"best objective : {best.objective:.6f} bits/s")
    print(f"modes          : {best.modes}")
    print(f"alpha          : {best.alpha:.6f}")
    print(f"iterations     : {report.iterations} ({report.unique_evals} mode evaluations)")
    print(" dev  dist[m]  mode   power[W]      pmax[W]       rate[bit/s]")
    for i, d in enumerate(devices):
        print(f"{d.index:4d} {d.distance:8.3f} {best.modes.bits[i]:5d}  {best.powers[i]:.6e}  "
              f"{caps[i]:.6e}  {best.rates[i]:.6e}")
    print(f"seed           : {sls.seed}")
    if args.output:
        payload = report.to_dict(timing=args.timing)
        payload["config"] = cfg.to_dict()
        _write_json(args.output, payload)
    if args.fp_trace:
        with open(args.fp_trace, "w") as fh:
            fh.write("invocation,outer_iter,objective\n")
            for k, trace in enumerate(report.fp_traces):
                for it, v in enumerate(trace):
                    fh.write(f"{k},{it},{float(v)!r}\n")
    if args.sls_trace:
        with open(args.sls_trace, "w") as fh:
            fh.write("iter,accepted_objective,best_objective,beta,evals_this_iter\n")
            for s in report.sls_trace:
                fh.write(f"{s.iteration},{s.accepted_objective!r},{s.best_objective!r},{s.beta!r},{s.evals}\n")
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    sls, fp = _options(args)
    if not args.output:
        raise UsageError("sweep needs --output")
    try:
        spec = SweepSpec(
            kind=SWEEP_KINDS[args.sweep],
            lambda_values=tuple(_lambda_grid(args.lambda_from, args.lambda_to, args.lambda_step)),
            n_values=tuple(args.n_list),
            placements_per_point=args.placements,
            seed=sls.seed,
            oracle_n_limit=args.oracle_n_limit,
            distances=cfg.distances if args.config else None,
        )
    except ValueError as exc:
        raise UsageError(str(exc))
    rows = run_sweep(spec, cfg.params, sls, fp, args.gs_tol, args.output, max(1, args.jobs), args.timing)
    summary = summarize(rows)
    var_name = "N" if spec.random_placements else "lambda"
    print(f"{spec.kind.value}: {len(rows)} rows -> {args.output} (seed {spec.seed})")
    print(f"{var_name:>8} {'scheme':>13} {'mean objective':>16} {'mean iters':>11} {'runs':>5}")
    for (var, scheme), s in summary.items():
        print(f"{var:8g} {scheme:>13} {s['objective']:16.3f} {s['sls_iters']:11.2f} {s['count']:5d}")
    failed = sum(1 for r in rows if r["objective_bps"] == "nan")
    return EXIT_FAILURE if failed else EXIT_OK


def cmd_oracle(args) -> int:
    cfg = load_config(args.config)
    sls, fp = _options(args)
    devices = cfg.devices()
    if len(devices) > args.n_limit:
        raise UsageError(f"exhaustive search refused: N={len(devices)} exceeds n_limit={args.n_limit}")
    optimal = exhaustive_optimal(cfg.params, devices, fp, args.gs_tol, args.n_limit)
    proposed = stochastic_local_search(cfg.params, devices, sls, fp, args.gs_tol)
    ratio = proposed.best.objective / optimal.best.objective
    print(f"optimal  : {optimal.best.objective:.6f} bits/s  modes {optimal.best.modes}")
    print(f"proposed : {proposed.best.objective:.6f} bits/s  modes {proposed.best.modes}")
    print(f"ratio    : {ratio:.6f}")
    print(f"seed     : {sls.seed}")
    if args.output:
        _write_json(args.output, {
            "optimal": optimal.to_dict(timing=args.timing),
            "proposed": proposed.to_dict(timing=args.timing),
            "ratio": ratio,
            "config": cfg.to_dict(),
        })
    return EXIT_OK


COMMANDS = {"solve": cmd_solve, "sweep": cmd_sweep, "oracle": cmd_oracle}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.seed is None:
        args.seed = secrets.randbits(64)
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, UsageError) as exc:
        print(f"wpmec {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:
        log.debug("failure", exc_info=True)
        print(f"wpmec {args.command}: failed: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
