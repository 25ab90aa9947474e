"""
Metric-preconditioned gradient descent with Armijo backtracking.

The search direction is H^-1 grad E. Each line search starts from gamma0, or
with `step_rule="bb"` from the Barzilai-Borwein step s^T H s / s^T y of the
previous iterate pair, and halves until the sufficient-decrease condition holds. For compositional
maps, a violated bijectivity verdict at the end of a run doubles the
penalty weight and restarts from the incumbent.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass
from typing import Literal

import humanize
import numpy as np

from diffeoreg.compositional.cm_maps import Verdict
from diffeoreg.errors import BoundaryLeakError
from diffeoreg.optimizer.OptimizerReport import IterateRecord, OptimizerReport, TerminationReason
from diffeoreg.optimizer.RegistrationProblem import Problem, RegistrationProblem

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DescentConfig:
    max_iters: int = 100
    grad_tol: float = 1e-8
    gamma0: float = 1.0
    rho: float = 0.5
    c: float = 1e-4
    min_step: float = 1e-14
    penalty_continuation: bool = True
    max_continuations: int = 10
    bijectivity_density: int = 101
    log_every: int = 10
    step_rule: Literal["fixed", "bb"] = "bb"
    bb_bounds: tuple[float, float] = (1e-10, 1e10)

    def __post_init__(self) -> None:
        if self.max_iters < 0:
            raise ValueError(f"max_iters must be >= 0, got {self.max_iters}.")
        if self.gamma0 <= 0 or not 0 < self.rho < 1 or not 0 < self.c < 1:
            raise ValueError("Line search needs gamma0 > 0, 0 < rho < 1 and 0 < c < 1.")
        if self.step_rule not in ("fixed", "bb"):
            raise ValueError(f"Unknown step rule {self.step_rule!r}.")


def preconditioned_step(problem: Problem, coefficients: np.ndarray, gradient: np.ndarray, gamma: float) -> np.ndarray:
    """a - gamma H^-1 grad."""
    if gamma <= 0:
        raise ValueError(f"Step size must be positive, got {gamma}.")
    return np.asarray(coefficients, dtype=float) - gamma * problem.metric.solve(gradient)


def finite_difference_gradient(problem: Problem, coefficients: np.ndarray, h: float = 1e-5) -> np.ndarray:
    """Central differences of the objective, one coordinate at a time."""
    a = np.asarray(coefficients, dtype=float)
    gradient = np.empty_like(a)
    for i in range(a.size):
        shift = np.zeros_like(a)
        shift[i] = h
        gradient[i] = (problem.objective(a + shift) - problem.objective(a - shift)) / (2.0 * h)
    return gradient


def _trial_objective(problem: Problem, trial: np.ndarray) -> float:
    try:
        return problem.objective(trial)
    except BoundaryLeakError as exc:
        logger.debug("Trial point rejected: %s", exc)
        return np.inf


def initial_step(
    config: DescentConfig,
    step: np.ndarray | None,
    gradient_change: np.ndarray | None,
    metric_step: np.ndarray | None,
) -> float:
    """
    First trial step of a line search.

    `step` is s = a_k - a_{k-1}, `gradient_change` is y = g_k - g_{k-1} and
    `metric_step` is H s. Falls back to gamma0 without history, on nonpositive
    curvature s^T y, or when the BB step leaves `bb_bounds`.
    """
    if config.step_rule == "fixed" or step is None or gradient_change is None or metric_step is None:
        return config.gamma0
    curvature = float(step @ gradient_change)
    if curvature <= 0.0:
        return config.gamma0
    gamma = float(step @ metric_step) / curvature
    low, high = config.bb_bounds
    if not low <= gamma <= high:
        return config.gamma0
    return gamma


def _descend(
    problem: Problem,
    config: DescentConfig,
    report: OptimizerReport,
    a: np.ndarray,
    value: float,
    gradient: np.ndarray,
    phase: int,
) -> tuple[np.ndarray, TerminationReason]:
    iteration = report.iterations
    step = gradient_change = metric_step = None
    for _ in range(config.max_iters):
        direction = problem.metric.solve(gradient)
        decrease = max(float(gradient @ direction), 0.0)
        if np.sqrt(decrease) <= config.grad_tol:
            return a, TerminationReason.GRAD_TOL
        gamma = initial_step(config, step, gradient_change, metric_step)
        while True:
            trial = a - gamma * direction
            trial_value = _trial_objective(problem, trial)
            if trial_value <= value - config.c * gamma * decrease:
                break
            gamma *= config.rho
            if gamma < config.min_step:
                logger.info("Line search failed at iteration %d (objective %.6g).", iteration, value)
                return a, TerminationReason.LINE_SEARCH
        # H s = -gamma g for the preconditioned direction
        step, metric_step = trial - a, -gamma * gradient
        previous_gradient = gradient
        a = trial
        value, gradient = problem.objective_and_gradient(a)
        gradient_change = gradient - previous_gradient
        iteration += 1
        grad_norm = problem.metric.dual_norm(gradient)
        report.records.append(IterateRecord(iteration, value, grad_norm, gamma, phase))
        if config.log_every and iteration % config.log_every == 0:
            logger.info("iter %d: objective %.6g, |grad|_H^-1 %.3g, step %.3g", iteration, value, grad_norm, gamma)
        else:
            logger.debug("iter %d: objective %.6g, |grad|_H^-1 %.3g, step %.3g", iteration, value, grad_norm, gamma)
    if problem.metric.dual_norm(gradient) <= config.grad_tol:
        return a, TerminationReason.GRAD_TOL
    return a, TerminationReason.MAX_ITERS


def minimize(
    problem: Problem,
    config: DescentConfig | None = None,
    initial: np.ndarray | None = None,
) -> OptimizerReport:
    """
    Run preconditioned descent from `initial` (zero by default).

    Failures inside the loop (a leaking trial point, a step below
    `min_step`) end the run with a termination reason instead of raising.
    """
    config = config or DescentConfig()
    a = np.zeros(problem.size) if initial is None else np.array(initial, dtype=float).reshape(-1)
    started = time.perf_counter()
    report = OptimizerReport(coefficients=a)
    phase = 0
    while True:
        value, gradient = problem.objective_and_gradient(a)
        report.records.append(
            IterateRecord(report.iterations, value, problem.metric.dual_norm(gradient), 0.0, phase)
        )
        a, reason = _descend(problem, config, report, a, value, gradient, phase)
        report.coefficients = a
        report.reason = reason
        if not (
            config.penalty_continuation
            and isinstance(problem, RegistrationProblem)
            and problem.has_penalty
            and report.continuations < config.max_continuations
        ):
            break
        verdict = problem.bijectivity(a, config.bijectivity_density)
        if verdict.verdict is not Verdict.VIOLATED:
            break
        weight = 1.0 if problem.penalty_weight == 0.0 else 2.0 * problem.penalty_weight
        logger.info(
            "Bijectivity violated (min J %.3g); raising penalty weight %.3g -> %.3g.",
            verdict.min_jacobian,
            problem.penalty_weight,
            weight,
        )
        problem = problem.with_penalty_weight(weight)
        report.continuations += 1
        phase += 1
    if isinstance(problem, RegistrationProblem):
        report.penalty_weight = problem.penalty_weight
    logger.info(
        "Descent stopped (%s) after %s iterations in %s: objective %.6g -> %.6g.",
        report.reason.value,
        humanize.intcomma(report.iterations),
        humanize.precisedelta(time.perf_counter() - started, minimum_unit="milliseconds"),
        report.initial_objective,
        report.final_objective,
    )
    return report
