"""Outer-loop DC solvers: cDCA, LPM, pDCA, pDCA with extrapolation, ADCA.

Every solver returns ``SolveResult(x, trace, summary)``.  Iteration counts
follow the usual conventions for these methods: ``Iter`` is the number of
outer iterations, ``InIt`` the number of prox-gradient applications beyond
one per outer iteration, and ``tIter = Iter + InIt``.
"""
from __future__ import annotations

import csv
import enum
import logging
import math
import time
from collections import deque
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .fixed_point import (
    ContractionAnchor,
    SubproblemError,
    apply_map_with_subgradient,
    max_step,
    picard_solve,
)
from .problem import DCProblem, Vector

logger = logging.getLogger(__name__)

# absolute slack on the runtime descent / residual checks
DESCENT_SLACK = 1e-9
RESIDUAL_SLACK = 1e-8


class Termination(str, enum.Enum):
    TOLERANCE = "tolerance"
    MAX_OUTER = "max_outer"
    ITERATION_CAP = "iteration_cap"
    STATIONARY = "stationary"


@dataclass
class SolverConfig:
    """Parameters shared by all solvers.

    ``lam``, ``delta`` and ``mu`` are only used by cDCA and LPM; build them
    relative to ``L_f`` with :meth:`from_lipschitz`.  ``max_total`` caps
    ``tIter`` (all prox-gradient applications), ``max_outer`` caps ``Iter``.
    """

    lam: Optional[float] = None
    delta: Optional[float] = None
    mu: Optional[float] = None
    tol: float = 1e-5
    inertial_weights: Sequence[float] = (0.6, 0.6)
    max_outer: int = 100_000
    max_inner: int = 10_000
    max_total: Optional[int] = None
    check_invariants: bool = False
    record_trace: bool = True
    exact_tolerance: float = 1e-12
    extrapolate: bool = True
    restart_every: Optional[int] = 200
    adaptive_restart: bool = True

    @classmethod
    def from_lipschitz(
        cls, lf: float, lambda_multiple: float = 0.1, delta_factor: float = 1.99, **kwargs
    ) -> "SolverConfig":
        """lam = multiple * L_f, delta = factor * lam / L_f, mu = 2 / (2 lam + L_f)."""
        lam = lambda_multiple * lf
        return cls(lam=lam, delta=delta_factor * lam / lf, mu=max_step(lam, lf), **kwargs)

    def contractive_parameters(self, lf: float) -> tuple[float, float, float]:
        """Validated (lam, delta, mu); mu defaults to 2/(2 lam + L_f)."""
        if self.lam is None or not self.lam > 0:
            raise ValueError("lam must be set to a positive value")
        mu = max_step(self.lam, lf) if self.mu is None else self.mu
        if not 0 < mu <= max_step(self.lam, lf) * (1 + 1e-12):
            raise ValueError(f"mu = {mu} outside (0, 2/(2 lam + L_f)]")
        if self.delta is not None and not 0 < self.delta < 2 * self.lam / lf:
            raise ValueError(f"delta = {self.delta} outside (0, 2 lam / L_f)")
        return self.lam, self.delta, mu


@dataclass
class IterationRecord:
    k: int
    objective: float
    aux: Optional[float]
    inner_iterations: int
    rel_change: float
    elapsed: float
    step_norm: float = 0.0
    inner_step_norm: float = 0.0
    first_step_norm: float = 0.0
    threshold: float = 0.0
    extra_step: bool = False
    residual_norm: Optional[float] = None


TRACE_COLUMNS = ("k", "F", "E", "m_k", "rel_change", "elapsed_seconds")


@dataclass
class SolverTrace:
    records: list = field(default_factory=list)
    final_point: Optional[Vector] = None
    reason: Optional[Termination] = None
    violations: list = field(default_factory=list)
    tau: Optional[float] = None

    def write(self, path) -> None:
        """Line-delimited CSV: k, F, E, m_k, rel_change, elapsed_seconds."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(TRACE_COLUMNS)
            for r in self.records:
                writer.writerow(
                    [
                        r.k,
                        repr(r.objective),
                        "" if r.aux is None else repr(r.aux),
                        r.inner_iterations,
                        repr(r.rel_change),
                        f"{r.elapsed:.6f}",
                    ]
                )


@dataclass
class RunSummary:
    outer_iterations: int
    extra_inner_iterations: int
    final_objective: float
    wall_seconds: float
    reason: Termination
    total_iterations: int = field(init=False)

    def __post_init__(self):
        self.total_iterations = self.outer_iterations + self.extra_inner_iterations

    @property
    def converged(self) -> bool:
        return self.reason in (Termination.TOLERANCE, Termination.STATIONARY)

    def as_dict(self) -> dict:
        return {
            "iter": self.outer_iterations,
            "init": self.extra_inner_iterations,
            "titer": self.total_iterations,
            "fval": self.final_objective,
            "seconds": self.wall_seconds,
            "reason": self.reason.value,
        }


class SolveResult(NamedTuple):
    x: Vector
    trace: SolverTrace
    summary: RunSummary


class InnerLoopError(SubproblemError):
    """cDCA's inner loop exhausted ``max_inner``; carries the solver state."""

    def __init__(self, message, best_point, residual, k, trace):
        super().__init__(message, best_point, residual)
        self.k = k
        self.trace = trace


def tau(lam: float, mu: float, delta: float) -> float:
    """(1 - mu lam)^2 delta^2 / (2 lam mu^2), the weight in E(x, y) = F(x) + tau |x - y|^2."""
    return (1.0 - mu * lam) ** 2 * delta**2 / (2.0 * lam * mu**2)


def subgradient_residual_bound(
    lam: float, mu: float, delta: float, lh: float, prev_step: float, step: float
) -> float:
    """Upper bound on |grad f(x+) + xi - grad h(x+)| after one cDCA iteration.

    ``prev_step = |x_k - x_{k-1}|``, ``step = |x_{k+1} - x_k|``; valid when
    grad h is ``lh``-Lipschitz.
    """
    return (1.0 - mu * lam) * delta / mu * prev_step + (lam + lh) * step


def relative_change(new: Vector, old: Vector) -> float:
    return float(np.linalg.norm(new - old)) / max(1.0, float(np.linalg.norm(old)))


def cdca_solve(problem: DCProblem, x0, config: SolverConfig) -> SolveResult:
    """Contractive DCA.

    Each outer step linearizes h at x_k and runs Picard iterations of the
    contraction until the inner step is at most ``delta * |x_k - x_{k-1}|``.
    The start of the inner loop is the multi-step inertial point
    ``x_k + sum_i a_i (x_{k-i} - x_{k-i-1})`` with ``x_{-1} = x_0 + 1`` and
    deeper history equal to ``x_0``.
    """
    lf = problem.lipschitz
    lam, delta, mu = config.contractive_parameters(lf)
    if delta is None:
        raise ValueError("cDCA needs delta")
    t = tau(lam, mu, delta)
    lh = problem.concave_part.gradient_lipschitz
    weights = [float(a) for a in config.inertial_weights]
    tol = config.tol
    tracking = config.record_trace or config.check_invariants
    objective = problem.objective
    subgradient = problem.concave_part.subgradient

    x = problem.check_point(x0).copy()
    if not np.all(np.isfinite(x)):
        raise ValueError("x0 must be finite")
    history = [x, x + 1.0] + [x] * max(0, len(weights) - 1)
    prev_step = float(np.linalg.norm(history[0] - history[1]))
    trace = SolverTrace(tau=t)

    clock = time.perf_counter
    t0 = clock()
    if tracking:
        f_cur = objective(x)
        e_cur = f_cur + t * prev_step**2
        trace.records.append(IterationRecord(0, f_cur, e_cur, 0, math.nan, 0.0, prev_step))
    n_outer = n_extra = n_total = 0
    reason = Termination.MAX_OUTER

    for k in range(config.max_outer):
        cap = config.max_inner
        if config.max_total is not None:
            cap = min(cap, config.max_total - n_total)
            if cap < 1:
                reason = Termination.ITERATION_CAP
                break
        eta = subgradient(x)
        anchor = ContractionAnchor(x, eta, lam, mu)
        start = x.copy()
        for i, a in enumerate(weights):
            if a != 0.0:
                start += a * (history[i] - history[i + 1])
        threshold = delta * prev_step

        res = picard_solve(problem, anchor, start, threshold, cap)
        n_outer += 1
        n_total += res.inner_iterations
        n_extra += res.inner_iterations - 1
        if not res.converged:
            if cap < config.max_inner:
                x = res.final_point
                reason = Termination.ITERATION_CAP
                break
            raise InnerLoopError(
                f"inner loop did not reach threshold {threshold:.3e} in "
                f"{cap} iterations at outer iteration {k}",
                res.final_point,
                res.last_step_norm,
                k,
                trace,
            )

        cand, xi, inner_step = res.final_point, res.subgradient, res.last_step_norm
        scale = max(1.0, float(np.linalg.norm(x)))
        rel = float(np.linalg.norm(cand - x)) / scale
        stop = extra = False
        if rel < tol:
            nxt, xi = apply_map_with_subgradient(problem, anchor, cand)
            n_extra += 1
            n_total += 1
            extra = True
            inner_step = float(np.linalg.norm(nxt - cand))
            rel = float(np.linalg.norm(nxt - x)) / scale
            if rel < tol:
                stop = True
                if np.array_equal(cand, x) and np.array_equal(nxt, x):
                    reason = Termination.STATIONARY
                else:
                    reason = Termination.TOLERANCE
            cand = nxt

        step = float(np.linalg.norm(cand - x))
        record = None
        if tracking:
            f_new = objective(cand)
            e_new = f_new + t * step**2
            record = IterationRecord(
                k + 1,
                f_new,
                e_new,
                res.inner_iterations + int(extra),
                rel,
                clock() - t0,
                step,
                inner_step,
                res.first_step_norm,
                threshold,
                extra,
            )
            if config.check_invariants:
                if e_new + (lam / 2 - t) * step**2 > e_cur + DESCENT_SLACK:
                    trace.violations.append((k + 1, "energy"))
                    logger.warning("energy increase at iteration %d", k + 1)
                if lh is not None:
                    w = problem.smooth.gradient(cand) + xi - subgradient(cand)
                    record.residual_norm = float(np.linalg.norm(w))
                    bound = subgradient_residual_bound(lam, mu, delta, lh, prev_step, step)
                    if record.residual_norm > bound + RESIDUAL_SLACK:
                        trace.violations.append((k + 1, "residual"))
                        logger.warning("residual bound violated at iteration %d", k + 1)
            if config.record_trace:
                trace.records.append(record)
            e_cur = e_new

        history = [cand] + history[:-1]
        prev_step = step
        x = cand
        if stop:
            break
        if config.max_total is not None and n_total >= config.max_total:
            reason = Termination.ITERATION_CAP
            break

    return _finish(problem, x, trace, reason, n_outer, n_extra, clock() - t0)


def _finish(problem, x, trace, reason, n_outer, n_extra, seconds) -> SolveResult:
    trace.final_point = x
    trace.reason = reason
    summary = RunSummary(n_outer, n_extra, problem.objective(x), seconds, reason)
    return SolveResult(x, trace, summary)


def lpm_solve(problem: DCProblem, x0, config: SolverConfig) -> SolveResult:
    """Linearized proximal method with each subproblem solved to ``exact_tolerance``."""
    lf = problem.lipschitz
    lam, _, mu = config.contractive_parameters(lf)
    x = problem.check_point(x0).copy()
    subgradient = problem.concave_part.subgradient
    tracking = config.record_trace or config.check_invariants
    trace = SolverTrace()
    t0 = time.perf_counter()
    f_cur = problem.objective(x) if tracking else math.nan
    if config.record_trace:
        trace.records.append(IterationRecord(0, f_cur, None, 0, math.nan, 0.0))
    n_outer = n_extra = 0
    reason = Termination.MAX_OUTER
    for k in range(config.max_outer):
        if config.max_total is not None and n_outer + n_extra >= config.max_total:
            reason = Termination.ITERATION_CAP
            break
        anchor = ContractionAnchor(x, subgradient(x), lam, mu)
        res = picard_solve(problem, anchor, x, config.exact_tolerance, config.max_inner)
        if not res.converged:
            raise InnerLoopError(
                f"LPM subproblem stalled at step {res.last_step_norm:.3e}",
                res.final_point,
                res.last_step_norm,
                k,
                trace,
            )
        n_outer += 1
        n_extra += res.inner_iterations - 1
        new = res.final_point
        rel = relative_change(new, x)
        if tracking:
            f_new = problem.objective(new)
            if config.check_invariants and f_new > f_cur + DESCENT_SLACK:
                trace.violations.append((k + 1, "descent"))
            if config.record_trace:
                trace.records.append(
                    IterationRecord(
                        k + 1, f_new, None, res.inner_iterations, rel,
                        time.perf_counter() - t0, float(np.linalg.norm(new - x)),
                    )
                )
            f_cur = f_new
        x = new
        if rel < config.tol:
            reason = Termination.TOLERANCE
            break
    return _finish(problem, x, trace, reason, n_outer, n_extra, time.perf_counter() - t0)


class FistaMomentum:
    """theta_{k+1} = (1 + sqrt(1 + 4 theta_k^2)) / 2, beta_k = (theta_{k-1} - 1) / theta_k.

    Starts (and restarts) from theta_{-1} = theta_0 = 1.
    """

    def __init__(self):
        self.reset()

    def reset(self) -> None:
        self.theta_prev = 1.0
        self.theta = 1.0

    @property
    def beta(self) -> float:
        return (self.theta_prev - 1.0) / self.theta

    def advance(self) -> None:
        self.theta_prev, self.theta = (
            self.theta,
            (1.0 + math.sqrt(1.0 + 4.0 * self.theta**2)) / 2.0,
        )


class _BaselineLoop:
    """Bookkeeping shared by the single-step baselines (tIter == Iter)."""

    def __init__(self, problem: DCProblem, x0, config: SolverConfig, monotone: bool):
        self.problem = problem
        self.config = config
        self.monotone = monotone and config.check_invariants
        self.trace = SolverTrace()
        self.t0 = time.perf_counter()
        self.n_outer = 0
        self.x = problem.check_point(x0).copy()
        self.f_cur = problem.objective(self.x) if config.record_trace or self.monotone else math.nan
        if config.record_trace:
            self.trace.records.append(IterationRecord(0, self.f_cur, None, 0, math.nan, 0.0))

    def iterations(self):
        limit = self.config.max_outer
        if self.config.max_total is not None:
            limit = min(limit, self.config.max_total)
        return range(limit)

    def accept(self, new: Vector, f_new: Optional[float] = None) -> bool:
        """Record the step x -> new; True when the relative-change test fires."""
        config = self.config
        x = self.x
        self.n_outer += 1
        rel = relative_change(new, x)
        if config.record_trace or self.monotone:
            if f_new is None:
                f_new = self.problem.objective(new)
            if self.monotone and f_new > self.f_cur + DESCENT_SLACK:
                self.trace.violations.append((self.n_outer, "descent"))
            if config.record_trace:
                self.trace.records.append(
                    IterationRecord(
                        self.n_outer, f_new, None, 1, rel,
                        time.perf_counter() - self.t0, float(np.linalg.norm(new - x)),
                    )
                )
            self.f_cur = f_new
        self.x = new
        return rel < config.tol

    def finish(self, converged: bool) -> SolveResult:
        if converged:
            reason = Termination.TOLERANCE
        elif self.n_outer >= self.config.max_outer:
            reason = Termination.MAX_OUTER
        else:
            reason = Termination.ITERATION_CAP
        return _finish(
            self.problem, self.x, self.trace, reason, self.n_outer, 0,
            time.perf_counter() - self.t0,
        )


def pdca_solve(problem: DCProblem, x0, config: SolverConfig) -> SolveResult:
    """Proximal DCA: x+ = prox_{g/L}(x - (grad f(x) - eta)/L)."""
    step = 1.0 / problem.lipschitz
    grad = problem.smooth.gradient
    prox = problem.prox_friendly.prox
    subgradient = problem.concave_part.subgradient
    loop = _BaselineLoop(problem, x0, config, monotone=True)
    for _ in loop.iterations():
        x = loop.x
        new = prox(x - step * (grad(x) - subgradient(x)), step)
        if loop.accept(new):
            return loop.finish(True)
    return loop.finish(False)


def pdca_e_solve(problem: DCProblem, x0, config: SolverConfig) -> SolveResult:
    """Proximal DCA with FISTA extrapolation, fixed and adaptive restarts.

    ``x_{-1} = x_0``; momentum is reset every ``restart_every`` iterations and
    whenever ``<y_k - x_{k+1}, x_{k+1} - x_k> > 0``.
    """
    step = 1.0 / problem.lipschitz
    grad = problem.smooth.gradient
    prox = problem.prox_friendly.prox
    subgradient = problem.concave_part.subgradient
    loop = _BaselineLoop(problem, x0, config, monotone=False)
    momentum = FistaMomentum()
    x_prev = loop.x
    for k in loop.iterations():
        x = loop.x
        beta = momentum.beta if config.extrapolate else 0.0
        y = x + beta * (x - x_prev) if beta else x
        new = prox(y - step * (grad(y) - subgradient(x)), step)
        if config.extrapolate:
            restart = config.adaptive_restart and float((y - new) @ (new - x)) > 0
            if config.restart_every and (k + 1) % config.restart_every == 0:
                restart = True
            if restart:
                momentum.reset()
            else:
                momentum.advance()
        x_prev = x
        if loop.accept(new):
            return loop.finish(True)
    return loop.finish(False)


def adca_solve(
    problem: DCProblem, x0, config: SolverConfig, q: int = 5, rho: Optional[float] = None
) -> SolveResult:
    """Accelerated DCA.

    The extrapolated point z_k is used only when F(z_k) does not exceed the
    largest of the last q+1 objective values; the step is
    ``x+ = prox_{g/rho}(v - (grad f(v) - eta)/rho)`` with eta in dh(v).
    ``rho`` defaults to 1.1 L_f.
    """
    lf = problem.lipschitz
    rho = 1.1 * lf if rho is None else float(rho)
    if not rho > lf:
        raise ValueError(f"rho = {rho} must exceed L_f = {lf}")
    if q < 0:
        raise ValueError("q must be nonnegative")
    grad = problem.smooth.gradient
    prox = problem.prox_friendly.prox
    subgradient = problem.concave_part.subgradient
    objective = problem.objective
    loop = _BaselineLoop(problem, x0, config, monotone=False)
    momentum = FistaMomentum()
    recent = deque([objective(loop.x)], maxlen=q + 1)
    x_prev = loop.x
    for k in loop.iterations():
        x = loop.x
        beta = momentum.beta if (config.extrapolate and k >= 1) else 0.0
        v = x
        if beta:
            z = x + beta * (x - x_prev)
            if objective(z) <= max(recent):
                v = z
        y = rho * v - grad(v) + subgradient(v)
        new = prox(y / rho, 1.0 / rho)
        momentum.advance()
        f_new = objective(new)
        recent.append(f_new)
        x_prev = x
        if loop.accept(new, f_new):
            return loop.finish(True)
    return loop.finish(False)


SOLVERS = {
    "cdca": cdca_solve,
    "lpm": lpm_solve,
    "pdca": pdca_solve,
    "pdca_e": pdca_e_solve,
    "adca": adca_solve,
}
