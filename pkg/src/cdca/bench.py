"""Random sparse least-squares instances and the sweep harness.

Instances follow the usual compressed-sensing protocol: Gaussian A with unit
columns, a K-sparse Gaussian ground truth on a uniformly drawn support, and
``b = A x* + noise_scale * n``.  Every random quantity comes from its own
child of ``SeedSequence(seed)``, so each piece is reproducible on its own:

    child 0: A    child 1: support    child 2: x* values
    child 3: noise    child 4: starting point x0 (uniform in [0, 1)^n)
"""
from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .operators import (
    LeastSquaresData,
    RegularizerKind,
    RegularizerSpec,
    build_problem,
    estimate_lipschitz,
)
from .solvers import SOLVERS, RunSummary, SolverConfig, Termination

logger = logging.getLogger(__name__)

DEFAULT_TITER_CAP = 100_000
_STREAMS = 5


@dataclass(frozen=True)
class InstanceSpec:
    rows: int
    cols: int
    sparsity: int
    noise_scale: float = 0.001
    seed: int = 0
    regularizer: RegularizerSpec = RegularizerSpec(RegularizerKind.L1_MINUS_L2)
    # False keeps the raw Gaussian columns (no unit-norm scaling)
    normalize_columns: bool = True

    def __post_init__(self):
        if min(self.rows, self.cols, self.sparsity) < 1:
            raise ValueError("rows, cols and sparsity must be positive")
        if self.sparsity > self.cols:
            raise ValueError(f"sparsity K={self.sparsity} exceeds n={self.cols}")
        if self.noise_scale < 0:
            raise ValueError("noise_scale must be nonnegative")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    @property
    def size(self) -> tuple[int, int, int]:
        return (self.rows, self.cols, self.sparsity)

    def streams(self) -> list[np.random.Generator]:
        children = np.random.SeedSequence(self.seed).spawn(_STREAMS)
        return [np.random.default_rng(c) for c in children]


@dataclass(frozen=True, eq=False)
class Instance:
    spec: InstanceSpec
    data: LeastSquaresData
    ground_truth: np.ndarray
    support: np.ndarray

    def problem(self, lipschitz: Optional[float] = None):
        return build_problem(self.data, self.spec.regularizer, lipschitz)

    def to_dict(self) -> dict:
        spec = asdict(self.spec)
        spec["regularizer"] = {
            "kind": self.spec.regularizer.kind.value,
            "gamma": self.spec.regularizer.gamma,
            "epsilon": self.spec.regularizer.epsilon,
        }
        return {
            "spec": spec,
            "A": self.data.matrix.tolist(),
            "b": self.data.observations.tolist(),
            "x_true": self.ground_truth.tolist(),
            "support": self.support.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Instance":
        spec = dict(d["spec"])
        spec["regularizer"] = RegularizerSpec(**spec["regularizer"])
        return cls(
            InstanceSpec(**spec),
            LeastSquaresData(d["A"], d["b"]),
            np.asarray(d["x_true"], dtype=float),
            np.asarray(d["support"], dtype=np.int64),
        )


def generate_instance(spec: InstanceSpec) -> Instance:
    rng_a, rng_s, rng_x, rng_n, _ = spec.streams()
    m, n, K = spec.size
    A = rng_a.standard_normal((m, n))
    if spec.normalize_columns:
        A /= np.linalg.norm(A, axis=0)
    support = np.sort(rng_s.choice(n, size=K, replace=False))
    x_true = np.zeros(n)
    x_true[support] = rng_x.standard_normal(K)
    b = A @ x_true + spec.noise_scale * rng_n.standard_normal(m)
    return Instance(spec, LeastSquaresData(A, b), x_true, support)


def starting_point(spec: InstanceSpec) -> np.ndarray:
    return spec.streams()[4].random(spec.cols)


def comparison_tolerance(family: str, solver: str, size: Sequence[int]) -> float:
    """Stopping tolerance used for each (family, solver, size) in the comparison runs."""
    if RegularizerKind(family) is RegularizerKind.L1_MINUS_L2:
        return 1e-6
    small = size[0] <= 360
    if solver == "pdca_e":
        return 1.5e-5 if small else 4e-6
    return 6.5e-5 if small else 2e-5


@dataclass(frozen=True)
class SolverSetting:
    """One solver column of a sweep.

    ``lambda_multiple`` and ``delta_factor`` set lam = multiple * L_f and
    delta = factor * lam / L_f for cdca/lpm; ``rho_factor`` and ``q``
    configure ADCA.  ``tol_by_size`` overrides ``tol`` per (m, n, K).
    """

    solver: str
    lambda_multiple: Optional[float] = None
    tol: float = 1e-5
    delta_factor: float = 1.99
    inertial_weights: tuple = (0.6, 0.6)
    q: int = 5
    rho_factor: float = 1.1
    restart_every: Optional[int] = 200
    tol_by_size: Optional[tuple] = None

    def __post_init__(self):
        if self.solver not in SOLVERS:
            raise ValueError(f"unknown solver {self.solver!r}; choose from {sorted(SOLVERS)}")
        if self.solver in ("cdca", "lpm") and self.lambda_multiple is None:
            object.__setattr__(self, "lambda_multiple", 0.1)

    def tolerance(self, size) -> float:
        for key, value in self.tol_by_size or ():
            if tuple(key) == tuple(size):
                return value
        return self.tol

    def config(self, lf: float, size, titer_cap: Optional[int], check_invariants=False):
        common = dict(
            tol=self.tolerance(size),
            max_total=titer_cap,
            check_invariants=check_invariants,
            record_trace=False,
            restart_every=self.restart_every,
            inertial_weights=self.inertial_weights,
        )
        if self.lambda_multiple is not None:
            return SolverConfig.from_lipschitz(
                lf, self.lambda_multiple, self.delta_factor, **common
            )
        return SolverConfig(**common)

    def run(
        self, problem, x0, size=None, titer_cap=DEFAULT_TITER_CAP,
        check_invariants=False, record_trace=False,
    ):
        """Solve ``problem`` from ``x0``; ``size`` = (m, n, K) selects the tolerance."""
        size = size if size is not None else (0, problem.dimension, 0)
        config = self.config(problem.lipschitz, size, titer_cap, check_invariants)
        config.record_trace = record_trace
        if self.solver == "adca":
            return SOLVERS["adca"](problem, x0, config, q=self.q, rho=self.rho_factor * problem.lipschitz)
        return SOLVERS[self.solver](problem, x0, config)


@dataclass
class TrialOutcome:
    trial: int
    seed: int
    summary: Optional[dict] = None
    capped: bool = False
    error: Optional[str] = None

    @property
    def usable(self) -> bool:
        return self.summary is not None and not self.capped


@dataclass
class CellReport:
    solver: str
    size: tuple
    lambda_multiple: Optional[float]
    tol: float
    outcomes: list = field(default_factory=list)

    def _mean(self, key) -> Optional[float]:
        vals = [o.summary[key] for o in self.outcomes if o.usable]
        if not vals:
            return None
        return math.fsum(vals) / len(vals)

    @property
    def max_flag(self) -> bool:
        return any(o.capped for o in self.outcomes)

    @property
    def usable_trials(self) -> int:
        return sum(o.usable for o in self.outcomes)

    def means(self) -> dict:
        return {
            "mean_iter": self._mean("iter"),
            "mean_init": self._mean("init"),
            "mean_titer": self._mean("titer"),
            "mean_fval": self._mean("fval"),
            "mean_seconds": self._mean("seconds"),
        }


@dataclass
class BenchmarkReport:
    cells: list = field(default_factory=list)

    def cell(self, solver: str, size=None, lambda_multiple=None) -> CellReport:
        for c in self.cells:
            if c.solver != solver:
                continue
            if size is not None and tuple(c.size) != tuple(size):
                continue
            if lambda_multiple is not None and c.lambda_multiple != lambda_multiple:
                continue
            return c
        raise KeyError((solver, size, lambda_multiple))


def _run_trial(job):
    """Generate one instance and run every setting on it with a shared x0."""
    template, trial, settings, titer_cap, check_invariants = job
    spec = replace(template, seed=template.seed + trial)
    inst = generate_instance(spec)
    lf = estimate_lipschitz(inst.data, tolerance=1e-12).value
    problem = inst.problem(lf)
    x0 = starting_point(spec)
    out = []
    for setting in settings:
        outcome = TrialOutcome(trial, spec.seed)
        try:
            res = setting.run(problem, x0, spec.size, titer_cap, check_invariants)
        except Exception as exc:  # recorded per trial; the sweep continues
            logger.warning("trial %d (%s) failed: %s", trial, setting.solver, exc)
            outcome.error = f"{type(exc).__name__}: {exc}"
        else:
            s: RunSummary = res.summary
            outcome.summary = s.as_dict()
            outcome.capped = s.reason is Termination.ITERATION_CAP or (
                titer_cap is not None and s.total_iterations >= titer_cap
            )
        out.append(outcome)
    return out


def run_sweep(
    sizes: Sequence[InstanceSpec],
    settings: Sequence[SolverSetting],
    trials: int = 30,
    titer_cap: Optional[int] = DEFAULT_TITER_CAP,
    jobs: int = 1,
    check_invariants: bool = False,
) -> BenchmarkReport:
    """Run every setting on ``trials`` instances per size (seed = template.seed + trial).

    Within a trial all settings share the instance and starting point.  Cells
    are ordered by (size, setting) as given, outcomes by trial, regardless of
    worker completion order.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    settings = list(settings)
    jobs_list = [
        (template, t, settings, titer_cap, check_invariants)
        for template in sizes
        for t in range(trials)
    ]
    if jobs > 1 and len(jobs_list) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_trial, jobs_list))
    else:
        results = [_run_trial(j) for j in jobs_list]

    report = BenchmarkReport()
    it = iter(results)
    for template in sizes:
        cells = [
            CellReport(s.solver, template.size, s.lambda_multiple, s.tolerance(template.size))
            for s in settings
        ]
        for _ in range(trials):
            for cell, outcome in zip(cells, next(it)):
                cell.outcomes.append(outcome)
        report.cells.extend(cells)
    return report


CSV_COLUMNS = (
    "solver", "m", "n", "K", "lambda_multiple", "tol", "trials",
    "mean_iter", "mean_init", "mean_titer", "mean_fval", "mean_seconds", "max_flag",
)
# columns whose values depend on the machine and are excluded from determinism checks
NONDETERMINISTIC_COLUMNS = ("mean_seconds",)


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "Max" if v else ""
    return repr(v)


def _cell_row(c: CellReport) -> dict:
    m, n, K = c.size
    row = {
        "solver": c.solver, "m": m, "n": n, "K": K,
        "lambda_multiple": c.lambda_multiple, "tol": c.tol,
        "trials": len(c.outcomes),
    }
    row.update(c.means())
    row["max_flag"] = c.max_flag
    return row


def report_to_csv(report: BenchmarkReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for c in report.cells:
        row = _cell_row(c)
        writer.writerow([_fmt(row[k]) for k in CSV_COLUMNS])
    return buf.getvalue()


def report_to_json(report: BenchmarkReport) -> str:
    cells = []
    for c in report.cells:
        row = _cell_row(c)
        row["trial_results"] = [asdict(o) for o in c.outcomes]
        cells.append(row)
    return json.dumps(
        {"columns": list(CSV_COLUMNS), "nondeterministic": list(NONDETERMINISTIC_COLUMNS), "cells": cells},
        indent=1,
    )


def emit_report(report: BenchmarkReport, fmt: str, path) -> None:
    """Write the report as ``csv`` or ``json``; the file appears only when complete."""
    if fmt == "csv":
        text = report_to_csv(report)
    elif fmt == "json":
        text = report_to_json(report)
    else:
        raise ValueError(f"unknown report format {fmt!r}")
    write_atomic(path, text)


def write_atomic(path, text: str) -> None:
    path = os.fspath(path)
    tmp = f"{path}.tmp{os.getpid()}"
    try:
        with open(tmp, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except OSError as exc:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise OSError(f"cannot write report to {path}: {exc}") from exc


def load_report_json(path) -> BenchmarkReport:
    with open(path) as fh:
        payload = json.load(fh)
    report = BenchmarkReport()
    for row in payload["cells"]:
        cell = CellReport(
            row["solver"], (row["m"], row["n"], row["K"]), row["lambda_multiple"], row["tol"]
        )
        cell.outcomes = [TrialOutcome(**o) for o in row["trial_results"]]
        report.cells.append(cell)
    return report
