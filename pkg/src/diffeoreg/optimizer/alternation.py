"""EM alternation between correspondence weights and map coefficients."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from diffeoreg.errors import TargetError
from diffeoreg.optimizer.descent import DescentConfig, minimize
from diffeoreg.optimizer.OptimizerReport import OptimizerReport
from diffeoreg.optimizer.RegistrationProblem import RegistrationProblem
from diffeoreg.targets.em import anneal_sigma, em_update_weights, initial_sigma
from diffeoreg.targets.PointwiseTarget import PointwiseTarget

logger = logging.getLogger(__name__)


@dataclass(eq=False)
class AlternationResult:
    coefficients: np.ndarray
    problem: RegistrationProblem
    reports: list[OptimizerReport] = field(default_factory=list)
    sigmas: list[float] = field(default_factory=list)

    @property
    def final_report(self) -> OptimizerReport:
        return self.reports[-1]


def em_registration(
    problem: RegistrationProblem,
    config: DescentConfig,
    outer_iters: int = 5,
    initial: np.ndarray | None = None,
    sigma0: float | None = None,
) -> AlternationResult:
    """
    Alternate E-steps (Gaussian responsibilities at bandwidth sigma) and
    M-steps (a warm-started descent run), annealing sigma between rounds.
    """
    if not isinstance(problem.target, PointwiseTarget):
        raise TargetError("EM alternation needs a pointwise target.")
    if outer_iters < 1:
        raise ValueError(f"outer_iters must be >= 1, got {outer_iters}.")
    a = np.zeros(problem.size) if initial is None else np.array(initial, dtype=float).reshape(-1)
    target: PointwiseTarget = problem.target
    diameter = problem.domain.diameter
    images = problem.images(a)
    sigma = initial_sigma(images, target.target_points) if sigma0 is None else float(sigma0)
    result = AlternationResult(coefficients=a, problem=problem)
    for round_index in range(outer_iters):
        weights = em_update_weights(target, images, sigma)
        target = target.with_weights(weights)
        problem = problem.with_target(target)
        report = minimize(problem, config, a)
        if report.continuations:
            problem = problem.with_penalty_weight(report.penalty_weight)
        a = report.coefficients
        images = problem.images(a)
        result.reports.append(report)
        result.sigmas.append(sigma)
        logger.info(
            "EM round %d/%d: sigma %.4g, objective %.6g, matched error %.4g",
            round_index + 1,
            outer_iters,
            sigma,
            report.final_objective,
            target.matched_error(images),
        )
        sigma = anneal_sigma(sigma, diameter)
    result.coefficients = a
    result.problem = problem
    return result
