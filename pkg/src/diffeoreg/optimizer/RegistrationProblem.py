"""Regularised registration objectives over coefficient vectors."""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from enum import Enum
from typing import Callable, Protocol

import numpy as np

from diffeoreg.compositional.cm_maps import (
    DEFAULT_THRESHOLD,
    BijectivityReport,
    Verdict,
    bijectivity_check,
    cm_target_gradient,
    penalty,
)
from diffeoreg.compositional.DisplacementModel import DisplacementModel
from diffeoreg.errors import OptimizerError
from diffeoreg.geometry.PolygonalDomain import PolygonalDomain
from diffeoreg.optimizer.Metric import Metric
from diffeoreg.targets.Target import Target
from diffeoreg.vectorflow.FlowSolution import Scheme
from diffeoreg.vectorflow.integrate import integrate_flow, jacobian_logdet
from diffeoreg.vectorflow.sensitivity import adjoint_gradient, direct_gradient
from diffeoreg.vectorflow.VelocityModel import VelocityModel

logger = logging.getLogger(__name__)

DEFAULT_PENALTY_DENSITY = 41


class GradientMethod(str, Enum):
    ADJOINT = "adjoint"
    DIRECT = "direct"


class Problem(Protocol):
    """What the descent loop needs from an objective."""

    metric: Metric

    @property
    def size(self) -> int: ...

    @property
    def has_penalty(self) -> bool: ...

    def objective(self, coefficients: np.ndarray) -> float: ...

    def objective_and_gradient(self, coefficients: np.ndarray) -> tuple[float, np.ndarray]: ...


@dataclass(frozen=True)
class FunctionalProblem:
    """A plain differentiable functional with a metric; no map model behind it."""

    fun: Callable[[np.ndarray], tuple[float, np.ndarray]]
    metric: Metric

    @property
    def size(self) -> int:
        return self.metric.size

    @property
    def has_penalty(self) -> bool:
        return False

    def objective(self, coefficients: np.ndarray) -> float:
        return float(self.fun(np.asarray(coefficients, dtype=float))[0])

    def objective_and_gradient(self, coefficients: np.ndarray) -> tuple[float, np.ndarray]:
        value, gradient = self.fun(np.asarray(coefficients, dtype=float))
        return float(value), np.asarray(gradient, dtype=float)


@dataclass(frozen=True, eq=False)
class RegistrationProblem:
    """
    objective(a) = E(N(a)) + lambda a^T A a (+ lambda_pen f_pen(a) for compositional maps).

    `map_model` only supplies the basis; its coefficients are replaced by the
    argument of every evaluation.
    """

    map_model: VelocityModel | DisplacementModel
    target: Target
    metric: Metric
    tikhonov_weight: float = 0.0
    tikhonov_operator: np.ndarray | None = None
    penalty_weight: float = 0.0
    penalty_threshold: float = DEFAULT_THRESHOLD
    penalty_points: np.ndarray | None = None
    steps: int = 100
    scheme: Scheme = Scheme.RK4
    threads: int = 1
    gradient_method: GradientMethod = GradientMethod.ADJOINT

    def __post_init__(self) -> None:
        if self.metric.size != self.map_model.size:
            raise OptimizerError(f"Metric is {self.metric.size}x{self.metric.size}, map has {self.map_model.size} coefficients.")
        if self.tikhonov_weight < 0 or self.penalty_weight < 0:
            raise OptimizerError("Regularisation weights must be non-negative.")
        if self.tikhonov_operator is not None:
            operator = np.asarray(self.tikhonov_operator, dtype=float)
            if operator.shape != (self.size, self.size):
                raise OptimizerError(f"Tikhonov operator must be {self.size}x{self.size}, got {operator.shape}.")
            object.__setattr__(self, "tikhonov_operator", operator)
        object.__setattr__(self, "scheme", Scheme(self.scheme))
        object.__setattr__(self, "gradient_method", GradientMethod(self.gradient_method))
        if self.is_compositional and self.penalty_points is None:
            object.__setattr__(self, "penalty_points", self.map_model.polytope.grid(DEFAULT_PENALTY_DENSITY))

    @property
    def size(self) -> int:
        return self.map_model.size

    @property
    def is_compositional(self) -> bool:
        return isinstance(self.map_model, DisplacementModel)

    @property
    def has_penalty(self) -> bool:
        return self.is_compositional

    @property
    def domain(self) -> PolygonalDomain:
        if isinstance(self.map_model, DisplacementModel):
            return self.map_model.polytope
        return self.map_model.domain

    def with_penalty_weight(self, weight: float) -> RegistrationProblem:
        return replace(self, penalty_weight=weight)

    def with_target(self, target: Target) -> RegistrationProblem:
        return replace(self, target=target)

    def model(self, coefficients: np.ndarray) -> VelocityModel | DisplacementModel:
        return self.map_model.with_coefficients(coefficients)

    def _tikhonov(self, a: np.ndarray) -> tuple[float, np.ndarray]:
        if self.tikhonov_weight == 0.0:
            return 0.0, np.zeros_like(a)
        Aa = a if self.tikhonov_operator is None else self.tikhonov_operator @ a
        return self.tikhonov_weight * float(a @ Aa), 2.0 * self.tikhonov_weight * Aa

    def images(self, coefficients: np.ndarray) -> np.ndarray:
        """The registration map applied to the target's control points."""
        model = self.model(coefficients)
        if isinstance(model, DisplacementModel):
            return model.apply(self.target.control_points)
        flow = integrate_flow(model, self.target.control_points, self.steps, self.scheme, threads=self.threads)
        return flow.endpoints

    def objective(self, coefficients: np.ndarray) -> float:
        a = np.asarray(coefficients, dtype=float)
        value = self.target.value(self.images(a)) + self._tikhonov(a)[0]
        if self.is_compositional and self.penalty_weight > 0.0:
            value += self.penalty_weight * penalty(self.model(a), self.penalty_points, self.penalty_threshold).value
        return float(value)

    def objective_and_gradient(self, coefficients: np.ndarray) -> tuple[float, np.ndarray]:
        a = np.asarray(coefficients, dtype=float)
        model = self.model(a)
        if isinstance(model, DisplacementModel):
            result = cm_target_gradient(model, self.target)
        elif self.gradient_method is GradientMethod.DIRECT:
            result = direct_gradient(model, self.target, self.steps, self.scheme, threads=self.threads)
        else:
            result = adjoint_gradient(model, self.target, self.steps, self.scheme, threads=self.threads)
        tik_value, tik_grad = self._tikhonov(a)
        value = result.value + tik_value
        gradient = result.gradient + tik_grad
        if isinstance(model, DisplacementModel) and self.penalty_weight > 0.0:
            pen = penalty(model, self.penalty_points, self.penalty_threshold)
            value += self.penalty_weight * pen.value
            gradient = gradient + self.penalty_weight * pen.gradient
        return float(value), gradient

    def bijectivity(self, coefficients: np.ndarray, density: int = 101, margin: float = 1e-6) -> BijectivityReport:
        """
        Sampled bijectivity verdict. Compositional maps use the Jacobian
        determinant on the polytope; flows use exp(logJ) at the end time.
        """
        model = self.model(coefficients)
        if isinstance(model, DisplacementModel):
            return bijectivity_check(model, density, extra_points=self.penalty_points, margin=margin)
        seeds = self.domain.grid(density)
        flow = jacobian_logdet(model, seeds, self.steps, self.scheme, threads=self.threads)
        J = np.exp(flow.end_logdet)
        worst = int(np.argmin(J))
        min_j = float(J[worst])
        if min_j > margin:
            verdict = Verdict.BIJECTIVE
        elif min_j <= 0.0:
            verdict = Verdict.VIOLATED
        else:
            verdict = Verdict.INCONCLUSIVE
        return BijectivityReport(verdict, min_j, seeds[worst].copy(), len(seeds))
