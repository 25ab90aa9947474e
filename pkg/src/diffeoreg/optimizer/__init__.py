"""Preconditioned descent for regularised registration objectives."""

from diffeoreg.optimizer.alternation import AlternationResult, em_registration
from diffeoreg.optimizer.descent import DescentConfig, finite_difference_gradient, minimize, preconditioned_step
from diffeoreg.optimizer.Metric import Metric
from diffeoreg.optimizer.OptimizerReport import IterateRecord, OptimizerReport, TerminationReason
from diffeoreg.optimizer.RegistrationProblem import FunctionalProblem, GradientMethod, RegistrationProblem

__all__ = [
    "AlternationResult",
    "DescentConfig",
    "FunctionalProblem",
    "GradientMethod",
    "IterateRecord",
    "Metric",
    "OptimizerReport",
    "RegistrationProblem",
    "TerminationReason",
    "em_registration",
    "finite_difference_gradient",
    "minimize",
    "preconditioned_step",
]
