"""Oracle bundles for regularized least squares: l1-l2 and logarithmic penalties.

Both families share ``f(x) = 0.5 * |Ax - b|^2`` (so ``L_f = lambda_max(A^T A)``)
and put a scaled l1 norm in ``g``:

* l1-l2:        g = gamma |x|_1,          h = gamma |x|_2
* logarithmic:  g = (gamma/eps) |x|_1,    h = sum gamma (|x_i|/eps - log(1 + |x_i|/eps))

so that ``g - h`` is ``gamma (|x|_1 - |x|_2)`` and
``sum gamma log(1 + |x_i|/eps)`` respectively.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .problem import ConvexTerm, DCProblem, ProxFriendlyTerm, SmoothTerm


class RegularizerKind(str, enum.Enum):
    L1_MINUS_L2 = "l12"
    LOGARITHMIC = "log"


@dataclass(frozen=True)
class RegularizerSpec:
    kind: RegularizerKind
    gamma: float = 0.01
    epsilon: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "kind", RegularizerKind(self.kind))
        if not self.gamma > 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        if self.kind is RegularizerKind.LOGARITHMIC and not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")


@dataclass(frozen=True, eq=False)
class LeastSquaresData:
    """Dense design ``matrix`` (m x n) and ``observations`` b (length m)."""

    matrix: np.ndarray
    observations: np.ndarray

    def __post_init__(self):
        A = np.array(self.matrix, dtype=np.float64, order="C")
        b = np.array(self.observations, dtype=np.float64)
        if A.ndim != 2:
            raise ValueError("matrix must be two-dimensional")
        if b.shape != (A.shape[0],):
            raise ValueError(
                f"observations must have length {A.shape[0]}, got shape {b.shape}"
            )
        if np.any(~A.any(axis=0)):
            raise ValueError("matrix has a zero column")
        A.flags.writeable = False
        b.flags.writeable = False
        object.__setattr__(self, "matrix", A)
        object.__setattr__(self, "observations", b)

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape


class LipschitzEstimate(NamedTuple):
    value: float
    converged: bool
    iterations: int


def _check_length(data: LeastSquaresData, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (data.shape[1],):
        raise ValueError(f"expected a vector of length {data.shape[1]}, got {x.shape}")
    return x


def least_squares_value(data: LeastSquaresData, x) -> float:
    r = data.matrix @ _check_length(data, x) - data.observations
    return 0.5 * float(r @ r)


def least_squares_gradient(data: LeastSquaresData, x) -> np.ndarray:
    """A^T (A x - b)."""
    x = _check_length(data, x)
    return data.matrix.T @ (data.matrix @ x - data.observations)


def estimate_lipschitz(
    data: LeastSquaresData,
    tolerance: float = 1e-10,
    max_iters: int = 10_000,
    seed: int = 0,
) -> LipschitzEstimate:
    """Largest eigenvalue of A^T A by power iteration.

    The stopping test extrapolates the remaining error from the observed
    geometric decay of successive Rayleigh quotient changes (Aitken), so
    slow spectral gaps do not stop the iteration early.
    """
    A = data.matrix
    if not A.any():
        raise ValueError("matrix is identically zero")
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(A.shape[1])
    v /= np.linalg.norm(v)
    rho_prev = None
    delta_prev = None
    rho = 0.0
    for it in range(1, max_iters + 1):
        w = A.T @ (A @ v)
        rho = float(v @ w)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            # start vector in the null space; restart from a fresh draw
            v = rng.standard_normal(A.shape[1])
            v /= np.linalg.norm(v)
            continue
        v = w / nw
        if rho_prev is not None:
            delta = abs(rho - rho_prev)
            if delta <= 4 * np.finfo(float).eps * rho:
                return LipschitzEstimate(rho, True, it)
            if delta_prev:
                ratio = min(delta / delta_prev, 1.0 - 1e-9)
                remaining = delta * ratio / (1.0 - ratio)
                if delta <= tolerance * rho and remaining <= 0.1 * tolerance * rho:
                    return LipschitzEstimate(rho, True, it)
            delta_prev = delta
        rho_prev = rho
    return LipschitzEstimate(rho, False, max_iters)


def soft_threshold_prox(x, threshold: float) -> np.ndarray:
    """Componentwise sign(x) * max(|x| - threshold, 0): the prox of threshold*|.|_1."""
    if threshold < 0:
        raise ValueError("threshold must be nonnegative")
    x = np.asarray(x, dtype=np.float64)
    return np.sign(x) * np.maximum(np.abs(x) - threshold, 0.0)


def l1_term(weight: float) -> ProxFriendlyTerm:
    """g = weight * |x|_1."""
    return ProxFriendlyTerm(
        value=lambda x: weight * float(np.abs(x).sum()),
        prox=lambda x, alpha: soft_threshold_prox(x, alpha * weight),
    )


def l1_minus_l2_h_subgradient(x, gamma: float) -> np.ndarray:
    """gamma * x / |x|, and the zero vector at the origin."""
    x = np.asarray(x, dtype=np.float64)
    nrm = np.linalg.norm(x)
    if nrm == 0.0:
        return np.zeros_like(x)
    return (gamma / nrm) * x


def l1_minus_l2_split(spec: RegularizerSpec) -> tuple[ProxFriendlyTerm, ConvexTerm]:
    if spec.kind is not RegularizerKind.L1_MINUS_L2:
        raise ValueError(f"expected an l1-l2 regularizer, got {spec.kind.value}")
    gamma = spec.gamma
    h = ConvexTerm(
        value=lambda x: gamma * float(np.linalg.norm(x)),
        subgradient=lambda x: l1_minus_l2_h_subgradient(x, gamma),
    )
    return l1_term(gamma), h


def logarithmic_split(spec: RegularizerSpec) -> tuple[ProxFriendlyTerm, ConvexTerm]:
    """DC split of sum gamma log(1 + |x_i|/eps): scaled l1 minus a smooth remainder.

    The remainder's gradient ``gamma * x_i / (eps (|x_i| + eps))`` is
    ``gamma/eps^2``-Lipschitz and vanishes at 0.
    """
    if spec.kind is not RegularizerKind.LOGARITHMIC:
        raise ValueError(f"expected a logarithmic regularizer, got {spec.kind.value}")
    gamma, eps = spec.gamma, spec.epsilon

    def h_value(x):
        t = np.abs(x) / eps
        return gamma * float(np.sum(t - np.log1p(t)))

    def h_gradient(x):
        x = np.asarray(x, dtype=np.float64)
        return gamma * x / (eps * (np.abs(x) + eps))

    h = ConvexTerm(h_value, h_gradient, gradient_lipschitz=gamma / eps**2)
    return l1_term(gamma / eps), h


def regularizer_value(spec: RegularizerSpec, x) -> float:
    """g(x) - h(x) evaluated directly from the penalty formula."""
    x = np.asarray(x, dtype=np.float64)
    if spec.kind is RegularizerKind.L1_MINUS_L2:
        return spec.gamma * float(np.abs(x).sum() - np.linalg.norm(x))
    return spec.gamma * float(np.sum(np.log(np.abs(x) + spec.epsilon) - np.log(spec.epsilon)))


def least_squares_term(data: LeastSquaresData, lipschitz: Optional[float] = None) -> SmoothTerm:
    if lipschitz is None:
        lipschitz = estimate_lipschitz(data, tolerance=1e-12).value
    return SmoothTerm(
        value=lambda x: least_squares_value(data, x),
        gradient=lambda x: least_squares_gradient(data, x),
        lipschitz=float(lipschitz),
    )


def build_problem(
    data: LeastSquaresData, spec: RegularizerSpec, lipschitz: Optional[float] = None
) -> DCProblem:
    """Regularized least-squares DC problem for either penalty family."""
    if spec.kind is RegularizerKind.L1_MINUS_L2:
        g, h = l1_minus_l2_split(spec)
    else:
        g, h = logarithmic_split(spec)
    return DCProblem(least_squares_term(data, lipschitz), g, h, data.shape[1])
