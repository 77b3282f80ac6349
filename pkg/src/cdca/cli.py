"""Command-line entry point.

    cdca gen-instance  --size 4x8x2 --seed 1 --out inst.json
    cdca solve         --family log --size 120x512x20 --solver cdca --trace run.trace
    cdca sweep-lambda  --family l12 --size 120x512x20 --lambdas 0.001,0.01,0.1,0.5 --out t1.csv
    cdca sweep-compare --family l12 --sizes 120x512x20,240x1024x40 --out t3.csv

Exit status: 0 on success, 1 on usage errors, 2 on runtime failures.
Relative output paths are resolved under ``$CDCA_OUTPUT_DIR`` when it is set.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from .bench import (
    DEFAULT_TITER_CAP,
    InstanceSpec,
    SolverSetting,
    emit_report,
    generate_instance,
    comparison_tolerance,
    run_sweep,
    starting_point,
    write_atomic,
)
from .operators import RegularizerSpec, estimate_lipschitz
from .solvers import SOLVERS

OUTPUT_DIR_ENV = "CDCA_OUTPUT_DIR"
# stopping tolerance of the lambda sweeps, per family
SWEEP_TOL = {"l12": 1e-5, "log": 1e-4}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def parse_size(text: str) -> tuple[int, int, int]:
    try:
        m, n, k = (int(p) for p in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"size must look like MxNxK, got {text!r}")
    if min(m, n, k) < 1 or k > n:
        raise argparse.ArgumentTypeError(f"invalid size {text!r} (need positive M, N, K with K <= N)")
    return m, n, k


def parse_sizes(text: str) -> list[tuple[int, int, int]]:
    return [parse_size(s) for s in text.split(",") if s]


def parse_floats(text: str) -> list[float]:
    try:
        vals = [float(v) for v in text.split(",") if v]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")
    if not vals or any(not v > 0 for v in vals):
        raise argparse.ArgumentTypeError(f"values must be positive, got {text!r}")
    return vals


def parse_solvers(text: str) -> list[str]:
    names = [s for s in text.split(",") if s]
    bad = [s for s in names if s not in SOLVERS]
    if bad or not names:
        raise argparse.ArgumentTypeError(f"unknown solver(s) {bad}; choose from {sorted(SOLVERS)}")
    return names


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return v


def _add_instance_flags(p):
    p.add_argument("--family", choices=("l12", "log"), default="l12")
    p.add_argument("--gamma", type=float, default=0.01)
    p.add_argument("--epsilon", type=float, default=0.5)
    p.add_argument("--noise", type=float, default=0.001)
    p.add_argument("--raw-columns", action="store_true",
                   help="keep raw Gaussian columns instead of unit-norm columns")
    p.add_argument("--seed", type=int, default=0)


def _add_sweep_flags(p):
    p.add_argument("--trials", type=_positive_int, default=30)
    p.add_argument("--cap", type=_positive_int, default=DEFAULT_TITER_CAP,
                   help="tIter cap; cells hitting it are flagged Max")
    p.add_argument("--jobs", type=_positive_int, default=os.cpu_count() or 1)
    p.add_argument("--format", choices=("csv", "json"), default=None,
                   help="report format (default: from the --out extension)")
    p.add_argument("--check-invariants", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cdca", description="Contractive DCA solvers and benchmarks.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen-instance", help="write a random instance as JSON")
    p.add_argument("--size", type=parse_size, required=True)
    p.add_argument("--out", default="instance.json")
    _add_instance_flags(p)

    p = sub.add_parser("solve", help="run one solver on one instance")
    p.add_argument("--size", type=parse_size, required=True)
    p.add_argument("--solver", choices=sorted(SOLVERS), default="cdca")
    p.add_argument("--lambda", dest="lambda_multiple", type=float, default=0.1,
                   help="lambda as a multiple of L_f (cdca, lpm)")
    p.add_argument("--delta-factor", type=float, default=1.99)
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--q", type=int, default=5)
    p.add_argument("--rho-factor", type=float, default=1.1)
    p.add_argument("--cap", type=_positive_int, default=DEFAULT_TITER_CAP)
    p.add_argument("--trace", default=None, help="write the per-iteration trace here")
    p.add_argument("--out", default=None, help="write the run summary (JSON) here")
    p.add_argument("--check-invariants", action="store_true")
    _add_instance_flags(p)

    p = sub.add_parser("sweep-lambda", help="cDCA over several lambda multiples")
    p.add_argument("--size", "--sizes", dest="sizes", type=parse_sizes, required=True)
    p.add_argument("--lambdas", type=parse_floats, default=[0.001, 0.01, 0.1, 0.5])
    p.add_argument("--delta-factor", type=float, default=1.99)
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--out", default="sweep-lambda.csv")
    _add_instance_flags(p)
    _add_sweep_flags(p)

    p = sub.add_parser("sweep-compare", help="compare solvers at fixed parameters")
    p.add_argument("--size", "--sizes", dest="sizes", type=parse_sizes, required=True)
    p.add_argument("--solvers", type=parse_solvers, default=["cdca", "adca", "pdca_e"])
    p.add_argument("--lambda", dest="lambda_multiple", type=float, default=0.1)
    p.add_argument("--tol", type=float, default=None,
                   help="one tolerance for every cell (default: per-family schedule)")
    p.add_argument("--q", type=int, default=5)
    p.add_argument("--rho-factor", type=float, default=1.1)
    p.add_argument("--out", default="sweep-compare.csv")
    _add_instance_flags(p)
    _add_sweep_flags(p)
    return parser


def _output_path(path: str) -> str:
    base = os.environ.get(OUTPUT_DIR_ENV)
    if base and not os.path.isabs(path):
        return os.path.join(base, path)
    return path


def _regularizer(args) -> RegularizerSpec:
    try:
        return RegularizerSpec(args.family, args.gamma, args.epsilon)
    except ValueError as exc:
        raise UsageError(str(exc))


def _spec(args, size, reg) -> InstanceSpec:
    try:
        return InstanceSpec(*size, noise_scale=args.noise, seed=args.seed, regularizer=reg,
                            normalize_columns=not args.raw_columns)
    except ValueError as exc:
        raise UsageError(str(exc))


def _report_format(args) -> str:
    if args.format:
        return args.format
    return "json" if args.out.lower().endswith(".json") else "csv"


def _validate_common(args):
    checks = [
        ("tol", lambda v: v is None or v > 0, "--tol must be positive"),
        ("delta_factor", lambda v: 0 < v < 2, "--delta-factor must be in (0, 2)"),
        ("rho_factor", lambda v: v > 1, "--rho-factor must exceed 1"),
        ("lambda_multiple", lambda v: v > 0, "--lambda must be positive"),
        ("q", lambda v: v >= 0, "--q must be nonnegative"),
    ]
    for name, ok, message in checks:
        if hasattr(args, name) and not ok(getattr(args, name)):
            raise UsageError(message)


def cmd_gen_instance(args) -> int:
    reg = _regularizer(args)
    inst = generate_instance(_spec(args, args.size, reg))
    write_atomic(_output_path(args.out), json.dumps(inst.to_dict()))
    return 0


def cmd_solve(args) -> int:
    reg = _regularizer(args)
    spec = _spec(args, args.size, reg)
    tol = args.tol if args.tol is not None else (
        SWEEP_TOL[args.family] if args.solver in ("cdca", "lpm")
        else comparison_tolerance(args.family, args.solver, spec.size)
    )
    setting = SolverSetting(
        args.solver,
        lambda_multiple=args.lambda_multiple if args.solver in ("cdca", "lpm") else None,
        tol=tol,
        delta_factor=args.delta_factor,
        q=args.q,
        rho_factor=args.rho_factor,
    )
    inst = generate_instance(spec)
    problem = inst.problem(estimate_lipschitz(inst.data, tolerance=1e-12).value)
    res = setting.run(
        problem, starting_point(spec), spec.size, args.cap,
        check_invariants=args.check_invariants, record_trace=args.trace is not None,
    )
    summary = res.summary.as_dict()
    summary["lipschitz"] = problem.lipschitz
    summary["violations"] = len(res.trace.violations)
    if args.trace:
        res.trace.write(_output_path(args.trace))
    text = json.dumps(summary, indent=1)
    if args.out:
        write_atomic(_output_path(args.out), text)
    else:
        print(text)
    return 0


def cmd_sweep_lambda(args) -> int:
    reg = _regularizer(args)
    fmt = _report_format(args)
    tol = args.tol if args.tol is not None else SWEEP_TOL[args.family]
    sizes = [_spec(args, s, reg) for s in args.sizes]
    settings = [
        SolverSetting("cdca", lambda_multiple=lam, tol=tol, delta_factor=args.delta_factor)
        for lam in args.lambdas
    ]
    report = run_sweep(sizes, settings, args.trials, args.cap, args.jobs, args.check_invariants)
    emit_report(report, fmt, _output_path(args.out))
    return 0


def cmd_sweep_compare(args) -> int:
    reg = _regularizer(args)
    fmt = _report_format(args)
    sizes = [_spec(args, s, reg) for s in args.sizes]
    settings = []
    for name in args.solvers:
        if args.tol is not None:
            tol, per_size = args.tol, None
        else:
            tol = comparison_tolerance(args.family, name, sizes[0].size)
            per_size = tuple((s.size, comparison_tolerance(args.family, name, s.size)) for s in sizes)
        settings.append(
            SolverSetting(
                name,
                lambda_multiple=args.lambda_multiple if name in ("cdca", "lpm") else None,
                tol=tol,
                tol_by_size=per_size,
                q=args.q,
                rho_factor=args.rho_factor,
            )
        )
    report = run_sweep(sizes, settings, args.trials, args.cap, args.jobs, args.check_invariants)
    emit_report(report, fmt, _output_path(args.out))
    return 0


COMMANDS = {
    "gen-instance": cmd_gen_instance,
    "solve": cmd_solve,
    "sweep-lambda": cmd_sweep_lambda,
    "sweep-compare": cmd_sweep_compare,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        _validate_common(args)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"cdca: error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:
        print(f"cdca: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
