"""Iteration counts of cDCA across lambda multiples, for either penalty family.

    python scripts/lambda_sweep.py --family l12 --trials 30 --out l12_lambda.csv
    python scripts/lambda_sweep.py --family log --raw-columns --out log_lambda.csv
"""
import argparse
import os

from cdca.bench import InstanceSpec, SolverSetting, emit_report, run_sweep
from cdca.operators import RegularizerSpec

DEFAULTS = {
    "l12": ((0.001, 0.01, 0.1, 0.5), 1e-5),
    "log": ((0.07, 0.1, 0.2), 1e-4),
}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--family", choices=sorted(DEFAULTS), default="l12")
    ap.add_argument("--size", default="120x512x20")
    ap.add_argument("--trials", type=int, default=30)
    ap.add_argument("--raw-columns", action="store_true")
    ap.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    ap.add_argument("--out", default=None)
    args = ap.parse_args()

    lams, tol = DEFAULTS[args.family]
    m, n, k = (int(v) for v in args.size.split("x"))
    spec = InstanceSpec(m, n, k, regularizer=RegularizerSpec(args.family),
                        normalize_columns=not args.raw_columns)
    report = run_sweep([spec], [SolverSetting("cdca", lam, tol) for lam in lams],
                       trials=args.trials, jobs=args.jobs)
    for cell in report.cells:
        mean = cell.means()
        flag = " Max" if cell.max_flag else ""
        print(f"lambda={cell.lambda_multiple:<6} Iter={mean['mean_iter']} InIt={mean['mean_init']} "
              f"tIter={mean['mean_titer']} F={mean['mean_fval']}{flag}")
    if args.out:
        emit_report(report, "json" if args.out.endswith(".json") else "csv", args.out)


if __name__ == "__main__":
    main()
