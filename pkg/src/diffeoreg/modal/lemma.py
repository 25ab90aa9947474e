"""Truncation bounds for Tikhonov-regularised problems restricted to eigenbases."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np

from diffeoreg.errors import ModalError
from diffeoreg.modal.ModalBasis import ModalBasis
from diffeoreg.optimizer.descent import DescentConfig, minimize
from diffeoreg.optimizer.Metric import Metric
from diffeoreg.optimizer.RegistrationProblem import FunctionalProblem

logger = logging.getLogger(__name__)

Functional = Callable[[np.ndarray], tuple[float, np.ndarray]]

REDUCED_TOL = 1e-12
BOUND_SLACK = 1e-9


@dataclass(frozen=True)
class LemmaReport:
    residual: float
    residual_bound: float
    gap: float
    gap_bound: float
    full_value: float
    reduced_value: float

    @property
    def holds(self) -> bool:
        return (
            self.residual <= self.residual_bound * (1.0 + BOUND_SLACK) + BOUND_SLACK
            and -BOUND_SLACK <= self.gap <= self.gap_bound * (1.0 + BOUND_SLACK) + BOUND_SLACK
        )

    def to_dict(self) -> dict[str, float | bool]:
        return {
            "residual": self.residual,
            "residual_bound": self.residual_bound,
            "gap": self.gap,
            "gap_bound": self.gap_bound,
            "holds": self.holds,
        }


def minimize_regularized(
    f: Functional,
    xi: float,
    W: np.ndarray,
    A: np.ndarray,
    M: np.ndarray,
    *,
    tol: float = REDUCED_TOL,
    max_iters: int = 500,
) -> tuple[np.ndarray, float]:
    """
    min_c f(Wc) + xi |Wc|_A^2, preconditioned with W^T (M + xi A) W.

    Returns the minimising full-space vector Wc and the minimum.
    """
    W = np.atleast_2d(np.asarray(W, dtype=float))
    if W.shape[1] == 0:
        zero = np.zeros(W.shape[0])
        return zero, float(f(zero)[0])
    reduced_A = W.T @ A @ W

    def fun(c: np.ndarray) -> tuple[float, np.ndarray]:
        u = W @ c
        value, grad = f(u)
        return value + xi * float(c @ reduced_A @ c), W.T @ grad + 2.0 * xi * (reduced_A @ c)

    metric = Metric(W.T @ (M + xi * A) @ W, name="reduced")
    problem = FunctionalProblem(fun, metric)
    report = minimize(problem, DescentConfig(max_iters=max_iters, grad_tol=tol, log_every=0))
    return W @ report.coefficients, report.final_objective


def eigen_bound_report(
    f: Functional,
    xi: float,
    u_star: np.ndarray,
    basis: ModalBasis,
    L_star: float,
    m: int | None = None,
) -> LemmaReport:
    """
    Compare |P_W^perp u*|_M and the optimality gap E_m - E with
    L*/(xi lambda_{m+1}) and L*^2/(xi lambda_{m+1}).

    `basis` must hold at least m+1 eigenmodes; m defaults to basis.m - 1.
    `u_star` is the full-space minimiser supplied by the caller.
    """
    if basis.eigenvalues is None or basis.operator is None:
        raise ModalError("The truncation bound needs an eigenbasis with its operator.")
    if xi <= 0:
        raise ModalError(f"xi must be positive, got {xi}.")
    m = basis.m - 1 if m is None else m
    if not 0 <= m < basis.m:
        raise ModalError(f"Need at least m+1 = {m + 1} modes, basis has {basis.m}.")
    u_star = np.asarray(u_star, dtype=float).reshape(-1)
    A, M = basis.operator, basis.metric
    reduced = basis.truncate(m)

    lam = float(basis.eigenvalues[m])
    if lam <= 0.0:
        residual_bound = gap_bound = np.inf
    else:
        residual_bound = L_star / (xi * lam)
        gap_bound = L_star**2 / (xi * lam)

    residual = reduced.project(u_star)[1]
    full_value = float(f(u_star)[0]) + xi * float(u_star @ A @ u_star)
    _, reduced_value = minimize_regularized(f, xi, reduced.W, A, M)
    report = LemmaReport(
        residual=residual,
        residual_bound=residual_bound,
        gap=reduced_value - full_value,
        gap_bound=gap_bound,
        full_value=full_value,
        reduced_value=reduced_value,
    )
    logger.debug("Truncation bound at m=%d: %s", m, report.to_dict())
    return report


def quadratic_instance(u0: np.ndarray, xi: float, A: np.ndarray, M: np.ndarray) -> tuple[Functional, np.ndarray, float]:
    """
    f(u) = |u - u0|_M^2 with its closed-form regularised minimiser
    (M + xi A) u* = M u0 and Lipschitz constant L* = 2 (|u*|_M + |u0|_M).
    """
    u0 = np.asarray(u0, dtype=float).reshape(-1)

    def f(u: np.ndarray) -> tuple[float, np.ndarray]:
        diff = u - u0
        Md = M @ diff
        return float(diff @ Md), 2.0 * Md

    u_star = np.linalg.solve(M + xi * A, M @ u0)
    L_star = 2.0 * (np.sqrt(u_star @ M @ u_star) + np.sqrt(u0 @ M @ u0))
    return f, u_star, float(L_star)


def norm_instance(u0: np.ndarray, c: float, xi: float, M: np.ndarray) -> tuple[Functional, np.ndarray, float]:
    """
    f(u) = c |u - u0|_M, whose Lipschitz constant is c.

    The minimiser u* = u0 min(1, c / (2 xi |u0|_M)) is exact when the
    regularising operator equals M. The gradient is taken as zero at u = u0.
    """
    if c < 0:
        raise ModalError(f"c must be non-negative, got {c}.")
    if xi <= 0:
        raise ModalError(f"xi must be positive, got {xi}.")
    u0 = np.asarray(u0, dtype=float).reshape(-1)

    def f(u: np.ndarray) -> tuple[float, np.ndarray]:
        diff = u - u0
        Md = M @ diff
        norm = float(np.sqrt(max(diff @ Md, 0.0)))
        if norm == 0.0:
            return 0.0, np.zeros_like(u0)
        return c * norm, (c / norm) * Md

    radius = float(np.sqrt(u0 @ M @ u0))
    u_star = u0 * min(1.0, c / (2.0 * xi * radius)) if radius > 0.0 else np.zeros_like(u0)
    return f, u_star, float(c)
