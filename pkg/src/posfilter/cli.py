"""Command-line interface: ``posfilter {norm,design,benchmark,simulate}``.

Exit codes: 0 success, 1 runtime or optimisation failure, 2 bad input.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys

import numpy as np

from . import _backend, fileio
from .design import (
    DEFAULT_SIM_HORIZON,
    DEFAULT_THRESHOLDS,
    DesignConfig,
    ObjectiveKind,
    design_filter,
)
from .hinf import DEFAULT_TOL, hinf_norm
from .lti import DimensionError, assemble_error_system, default_disturbance, simulate
from .search import (
    SIMPLEX_KINDS,
    InfeasibleStartError,
    Method,
    OptimizerOptions,
    SamplerExhaustedError,
)

EXIT_OK, EXIT_FAILURE, EXIT_INPUT = 0, 1, 2

log = logging.getLogger("posfilter")


class InputError(Exception):
    pass


def _floats(text: str) -> list[float]:
    try:
        return [float(t) for t in text.replace(" ", "").split(",") if t]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _methods(text: str) -> list[Method]:
    try:
        return [Method(t.strip()) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"methods must be among {[m.value for m in Method]}, got {text!r}"
        ) from None


def _options(args) -> OptimizerOptions:
    return OptimizerOptions(
        tol_f=args.tol_f, tol_x=args.tol_x, max_evals=args.max_evals,
        restart_eps=args.restart_eps, simplex=args.simplex,
    )


def cmd_norm(args) -> int:
    plant, _ = fileio.load_problem(args.problem)
    filt = fileio.load_filter(args.filter, plant)
    if not filt.is_feasible():
        log.warning("filter is not positive and stable")
    sys_e = assemble_error_system(plant, filt)
    if not sys_e.is_stable():
        print("inf")
        return EXIT_OK
    value = hinf_norm(sys_e, args.tol).value
    digits = max(1, math.ceil(-math.log10(args.tol)))
    print(f"{value:.{digits}g}")
    return EXIT_OK


def _sim_settings(args, plant, order):
    xi0 = args.xi0 if args.xi0 is not None else [0.0] * (plant.n + order)
    if len(xi0) != plant.n + order:
        raise InputError(f"--xi0 needs {plant.n + order} entries, got {len(xi0)}")
    if args.w_file:
        w = fileio.read_input_csv(args.w_file, plant.q)
        if w.shape[0] < args.horizon:
            raise InputError(f"--w-file has {w.shape[0]} rows, horizon is {args.horizon}")
        w = w[: args.horizon]
    elif args.zero_input:
        w = np.zeros((args.horizon, plant.q))
    else:
        if plant.q != 2:
            raise InputError("the built-in disturbance has 2 channels; use --w-file or --zero-input")
        w = default_disturbance
    return xi0, w


def cmd_design(args) -> int:
    plant, name = fileio.load_problem(args.problem)
    if args.order < 0:
        raise InputError("--order must be nonnegative")
    xi0 = w = None
    if args.objective is ObjectiveKind.SIM_L1:
        xi0, w = _sim_settings(args, plant, args.order)
    config = DesignConfig(
        method=args.method, opts=_options(args), starts=args.starts, seed=args.seed,
        objective=args.objective, sim_horizon=args.horizon, sim_xi0=xi0, sim_input=w,
        norm_tol=args.norm_tol, fix_c_normalization=args.fix_c, workers=args.workers,
    )
    initial = fileio.load_filter(args.init, plant) if args.init else None
    design = design_filter(plant, args.order, config, initial=initial)
    extra = {
        "problem": name,
        "objective_kind": args.objective.value,
        "method": args.method.value,
        "starts": design.report.K,
        "seed": args.seed,
    }
    if args.out:
        fileio.write_filter(args.out, design.filter, design.objective, extra)
    else:
        print(json.dumps(fileio.filter_to_dict(design.filter, design.objective) | extra, indent=2))
    print(f"objective {design.objective!r}", file=sys.stderr if not args.out else sys.stdout)
    return EXIT_OK


def cmd_benchmark(args) -> int:
    plant, name = fileio.load_problem(args.problem)
    reports = []
    for method in args.methods:
        config = DesignConfig(
            method=method, opts=_options(args), starts=args.starts, seed=args.seed,
            norm_tol=args.norm_tol, thresholds=args.thresholds, workers=args.workers,
        )
        report = design_filter(plant, args.order, config).report
        log.info("%s: min %.8g mean %.4g", method.value, report.min_objective, report.mean_objective)
        reports.append(report)
    if args.csv:
        fileio.write_reports_csv(args.csv, reports, args.thresholds)
    else:
        fileio.write_reports_csv(sys.stdout, reports, args.thresholds)
    if args.json:
        meta = {"problem": name, "order": args.order, "seed": args.seed,
                "thresholds": list(args.thresholds), "backend": _backend.name()}
        fileio.write_reports_json(args.json, reports, meta)
    return EXIT_OK


def cmd_simulate(args) -> int:
    plant, _ = fileio.load_problem(args.problem)
    filt = fileio.load_filter(args.filter, plant)
    xi0, w = _sim_settings(args, plant, filt.order)
    trace = simulate(assemble_error_system(plant, filt), xi0, w, args.horizon)
    if args.out:
        fileio.write_trace_csv(args.out, trace, plant, filt.order)
    else:
        fileio.write_trace_csv(sys.stdout, trace, plant, filt.order)
    log.info("max |e| = %.6g", float(np.max(np.abs(trace.outputs))))
    return EXIT_OK


def _add_optimizer_flags(p):
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--starts", type=int, default=3, help="random starts (default 3)")
    p.add_argument("--order", type=int, default=1, help="filter order (default 1)")
    p.add_argument("--simplex", choices=SIMPLEX_KINDS, default="regular",
                   help="initial simplex shape (default regular)")
    p.add_argument("--tol-f", type=float, default=1e-7)
    p.add_argument("--tol-x", type=float, default=1e-7)
    p.add_argument("--restart-eps", type=float, default=1e-7)
    p.add_argument("--max-evals", type=int, default=None)
    p.add_argument("--norm-tol", type=float, default=DEFAULT_TOL)
    p.add_argument("--workers", type=int, default=1, help="parallel processes over starts")


def _add_sim_flags(p):
    p.add_argument("--xi0", type=_floats, default=None,
                   help="initial error-system state, comma-separated (default zeros)")
    p.add_argument("--horizon", type=int, default=DEFAULT_SIM_HORIZON)
    group = p.add_mutually_exclusive_group()
    group.add_argument("--zero-input", action="store_true", help="use w_k = 0")
    group.add_argument("--w-file", help="CSV of disturbance samples, one row per step")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="posfilter", description="Positive H-infinity filter design by direct search."
    )
    parser.add_argument("--backend", choices=["auto", "compiled", "python"], default="auto",
                        help="kernel implementation (default: compiled when built)")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("norm", help="H-infinity norm of the filtering error system")
    p.add_argument("problem")
    p.add_argument("filter")
    p.add_argument("--tol", type=float, default=DEFAULT_TOL)
    p.set_defaults(func=cmd_norm)

    p = sub.add_parser("design", help="design a filter from random (or given) starts")
    p.add_argument("problem")
    _add_optimizer_flags(p)
    p.add_argument("--method", type=Method, choices=list(Method), default=Method.NM_RESTART)
    p.add_argument("--objective", type=ObjectiveKind, choices=list(ObjectiveKind),
                   default=ObjectiveKind.HINF)
    p.add_argument("--fix-c", action="store_true", help="pin Chat = 1 (order 1, one output)")
    p.add_argument("--init", help="filter file to start from instead of random starts")
    p.add_argument("--out", help="write the filter JSON here (default stdout)")
    _add_sim_flags(p)
    p.set_defaults(func=cmd_design)

    p = sub.add_parser("benchmark", help="multi-start comparison of the optimizers")
    p.add_argument("problem")
    _add_optimizer_flags(p)
    p.add_argument("--methods", type=_methods, default=list(Method))
    p.add_argument("--thresholds", type=_floats, default=list(DEFAULT_THRESHOLDS))
    p.add_argument("--csv", help="summary CSV path (default stdout)")
    p.add_argument("--json", help="also write per-start details as JSON")
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("simulate", help="time-domain trace of z, zhat and e")
    p.add_argument("problem")
    p.add_argument("filter")
    _add_sim_flags(p)
    p.add_argument("--out", help="CSV path (default stdout)")
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    if args.backend != "auto":
        try:
            _backend.use(args.backend)
        except ValueError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_INPUT
    for name in ("starts", "horizon", "workers"):
        if getattr(args, name, 1) < 1:
            print(f"error: --{name} must be positive", file=sys.stderr)
            return EXIT_INPUT
    try:
        return args.func(args)
    except (SamplerExhaustedError, InfeasibleStartError, ArithmeticError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    except (InputError, fileio.InputFileError, DimensionError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
