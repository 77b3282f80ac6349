"""Head-to-head comparison of cDCA, ADCA and pDCA_e over growing problem sizes.

Size i is (120 i, 512 i, 20 i).  Large i takes a long time; start with --max-i 2.
"""
import argparse
import os

from cdca.bench import InstanceSpec, SolverSetting, emit_report, comparison_tolerance, run_sweep
from cdca.operators import RegularizerSpec


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--family", choices=("l12", "log"), default="l12")
    ap.add_argument("--max-i", type=int, default=2)
    ap.add_argument("--trials", type=int, default=30)
    ap.add_argument("--raw-columns", action="store_true")
    ap.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    ap.add_argument("--out", default=None)
    args = ap.parse_args()

    reg = RegularizerSpec(args.family)
    specs = [InstanceSpec(120 * i, 512 * i, 20 * i, regularizer=reg,
                          normalize_columns=not args.raw_columns)
             for i in range(1, args.max_i + 1)]
    settings = []
    for name in ("cdca", "adca", "pdca_e"):
        per_size = tuple((s.size, comparison_tolerance(args.family, name, s.size)) for s in specs)
        settings.append(SolverSetting(name, tol=per_size[0][1], tol_by_size=per_size))
    report = run_sweep(specs, settings, trials=args.trials, jobs=args.jobs)
    for cell in report.cells:
        mean = cell.means()
        print(f"{cell.size} {cell.solver:<7} tIter={mean['mean_titer']} F={mean['mean_fval']} "
              f"time={mean['mean_seconds']}{' Max' if cell.max_flag else ''}")
    if args.out:
        emit_report(report, "json" if args.out.endswith(".json") else "csv", args.out)


if __name__ == "__main__":
    main()
