"""The prox-gradient contraction behind the linearized proximal subproblem.

For an anchor ``(x_k, eta_k)`` and parameters ``lam, mu`` the map

    Phi(x) = prox_{mu g}[(1 - mu lam) x - mu grad f(x) + mu lam x_k + mu eta_k]

is a contraction with coefficient ``1 - mu lam`` whenever
``0 < mu <= 2 / (2 lam + L_f)``, and its unique fixed point is the minimizer of

    f(x) + g(x) - <eta_k, x> + lam/2 |x - x_k|^2.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .problem import DCProblem, Vector

# relative slack when comparing mu against its upper bound
_MU_SLACK = 1e-12


def max_step(lam: float, lf: float) -> float:
    """The largest admissible mu, 2 / (2 lam + L_f)."""
    return 2.0 / (2.0 * lam + lf)


@dataclass(frozen=True, eq=False)
class ContractionAnchor:
    anchor_point: Vector
    concave_subgradient: Vector
    lam: float
    mu: float

    def __post_init__(self):
        if not (self.lam > 0 and self.mu > 0):
            raise ValueError("lam and mu must be positive")
        if not 0.0 < 1.0 - self.mu * self.lam < 1.0:
            raise ValueError(f"1 - mu*lam = {1 - self.mu * self.lam} is not in (0, 1)")

    def validate(self, problem: DCProblem) -> None:
        bound = max_step(self.lam, problem.lipschitz)
        if self.mu > bound * (1 + _MU_SLACK):
            raise ValueError(f"mu = {self.mu} exceeds 2/(2 lam + L_f) = {bound}")
        problem.check_point(self.anchor_point)
        problem.check_point(self.concave_subgradient)

    @property
    def coefficient(self) -> float:
        return 1.0 - self.mu * self.lam


@dataclass
class PicardResult:
    final_point: Vector
    inner_iterations: int
    last_step_norm: float
    converged: bool
    first_step_norm: float
    # (u - p)/mu for the last prox input u; an element of dg(final_point)
    subgradient: Vector


class SubproblemError(RuntimeError):
    """The inner fixed-point iteration did not reach its tolerance."""

    def __init__(self, message: str, best_point: Vector, residual: float):
        super().__init__(message)
        self.best_point = best_point
        self.residual = residual


def contraction_coefficient(lam: float, mu: float, lf: float) -> float:
    """1 - mu*lam; equals L_f / (2 lam + L_f) at the largest admissible mu."""
    if not (lam > 0 and mu > 0):
        raise ValueError("lam and mu must be positive")
    if mu > max_step(lam, lf) * (1 + _MU_SLACK):
        raise ValueError(f"mu = {mu} exceeds 2/(2 lam + L_f) = {max_step(lam, lf)}")
    return 1.0 - mu * lam


class _Map:
    """Phi with the anchor-dependent shift precomputed."""

    __slots__ = ("grad", "prox", "mu", "keep", "shift")

    def __init__(self, problem: DCProblem, anchor: ContractionAnchor):
        self.grad = problem.smooth.gradient
        self.prox = problem.prox_friendly.prox
        self.mu = anchor.mu
        self.keep = 1.0 - anchor.mu * anchor.lam
        self.shift = anchor.mu * (anchor.lam * anchor.anchor_point + anchor.concave_subgradient)

    def __call__(self, x: Vector) -> tuple[Vector, Vector]:
        u = self.keep * x - self.mu * self.grad(x) + self.shift
        p = self.prox(u, self.mu)
        return p, (u - p) / self.mu


def apply_map_with_subgradient(
    problem: DCProblem, anchor: ContractionAnchor, x
) -> tuple[Vector, Vector]:
    """Phi(x) together with the element (u - Phi(x))/mu of dg(Phi(x))."""
    x = problem.check_point(x)
    return _Map(problem, anchor)(x)


def apply_map(problem: DCProblem, anchor: ContractionAnchor, x) -> Vector:
    return apply_map_with_subgradient(problem, anchor, x)[0]


def picard_solve(
    problem: DCProblem,
    anchor: ContractionAnchor,
    start,
    threshold: float,
    max_inner: int = 10_000,
) -> PicardResult:
    """Iterate x_m = Phi(x_{m-1}) until |x_m - x_{m-1}| <= threshold.

    Returns the first iterate meeting the test and the count m >= 1. Hitting
    ``max_inner`` gives ``converged=False`` with the last iterate; a zero
    threshold is only met by an exact fixed point.
    """
    if threshold < 0:
        raise ValueError("threshold must be nonnegative")
    if max_inner < 1:
        raise ValueError("max_inner must be positive")
    x = problem.check_point(start)
    phi = _Map(problem, anchor)
    first = None
    step = np.inf
    xi = None
    for m in range(1, max_inner + 1):
        x_new, xi = phi(x)
        step = float(np.linalg.norm(x_new - x))
        if first is None:
            first = step
        x = x_new
        if step <= threshold:
            return PicardResult(x, m, step, True, first, xi)
    return PicardResult(x, max_inner, step, False, first, xi)


def solve_exact(
    problem: DCProblem,
    anchor: ContractionAnchor,
    start,
    tight_tolerance: float = 1e-12,
    max_inner: int = 1_000_000,
) -> Vector:
    """Minimizer of the strongly convex subproblem, to absolute step ``tight_tolerance``."""
    if not tight_tolerance > 0:
        raise ValueError("tight_tolerance must be positive")
    res = picard_solve(problem, anchor, start, tight_tolerance, max_inner)
    if not res.converged:
        raise SubproblemError(
            f"fixed-point iteration stalled at step norm {res.last_step_norm:.3e} "
            f"after {res.inner_iterations} iterations",
            res.final_point,
            res.last_step_norm,
        )
    return res.final_point
