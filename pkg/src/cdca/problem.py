"""DC problem model: F(x) = f(x) + g(x) - h(x) as three oracle bundles.

``f`` is smooth convex with an ``L_f``-Lipschitz gradient, ``g`` is convex,
lower semicontinuous and cheap to prox (it may take the value ``+inf``), and
``h`` is convex and finite.  Level-boundedness of ``F`` is assumed by every
solver but is the caller's responsibility; it cannot be checked from oracles.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

Vector = np.ndarray


@dataclass(frozen=True)
class SmoothTerm:
    """Smooth convex part ``f`` with gradient and its Lipschitz constant."""

    value: Callable[[Vector], float]
    gradient: Callable[[Vector], Vector]
    lipschitz: float

    def __post_init__(self):
        if not self.lipschitz >= 0:
            raise ValueError(f"lipschitz constant must be >= 0, got {self.lipschitz}")


@dataclass(frozen=True)
class ProxFriendlyTerm:
    """Convex part ``g``; ``prox(x, alpha)`` returns argmin_y g(y) + |y - x|^2 / (2 alpha)."""

    value: Callable[[Vector], float]
    prox: Callable[[Vector, float], Vector]


@dataclass(frozen=True)
class ConvexTerm:
    """Subtracted convex part ``h``.

    ``gradient_lipschitz`` is only set when ``h`` is differentiable with a
    Lipschitz gradient (then ``subgradient`` returns that gradient).
    """

    value: Callable[[Vector], float]
    subgradient: Callable[[Vector], Vector]
    gradient_lipschitz: Optional[float] = None


def zero_smooth() -> SmoothTerm:
    return SmoothTerm(lambda x: 0.0, np.zeros_like, 0.0)


def zero_prox_friendly() -> ProxFriendlyTerm:
    return ProxFriendlyTerm(lambda x: 0.0, lambda x, alpha: np.array(x, dtype=float))


def zero_convex() -> ConvexTerm:
    return ConvexTerm(lambda x: 0.0, np.zeros_like, 0.0)


@dataclass(frozen=True)
class DCProblem:
    smooth: SmoothTerm
    prox_friendly: ProxFriendlyTerm
    concave_part: ConvexTerm
    dimension: int

    def __post_init__(self):
        if self.dimension < 1:
            raise ValueError("dimension must be positive")

    @property
    def lipschitz(self) -> float:
        return self.smooth.lipschitz

    def check_point(self, x) -> Vector:
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.dimension,):
            raise ValueError(
                f"expected a vector of length {self.dimension}, got shape {x.shape}"
            )
        return x

    def objective(self, x) -> float:
        return evaluate_objective(self, x)


def evaluate_objective(problem: DCProblem, x) -> float:
    """Return ``f(x) + g(x) - h(x)``, or ``+inf`` when ``x`` is outside dom(g)."""
    x = problem.check_point(x)
    gval = problem.prox_friendly.value(x)
    if gval == np.inf:
        return np.inf
    return float(problem.smooth.value(x) + gval - problem.concave_part.value(x))


def criticality_residual(problem: DCProblem, x, eta, xi) -> float:
    """Norm of ``grad f(x) + xi - eta`` for ``xi`` in dg(x) and ``eta`` in dh(x).

    A value near zero certifies ``x`` as an approximate critical point.
    """
    x = problem.check_point(x)
    eta = problem.check_point(eta)
    xi = problem.check_point(xi)
    return float(np.linalg.norm(problem.smooth.gradient(x) + xi - eta))
