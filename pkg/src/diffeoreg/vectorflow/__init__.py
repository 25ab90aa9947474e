"""Vector-flow maps: ODE flows of boundary-tangent velocity fields and their derivatives."""

from diffeoreg.vectorflow.FlowSolution import FlowSolution, Scheme
from diffeoreg.vectorflow.integrate import (
    ContinuityGap,
    continuity_gap,
    integrate_flow,
    integrate_flow_gradient,
    inverse_map,
    jacobian_logdet,
)
from diffeoreg.vectorflow.sensitivity import (
    adjoint_gradient,
    adjoint_gradient_distributed,
    adjoint_gradient_pointwise,
    coefficient_sensitivity,
    direct_gradient,
)
from diffeoreg.vectorflow.VelocityModel import ReversedVelocity, VelocityModel

__all__ = [
    "ContinuityGap",
    "FlowSolution",
    "ReversedVelocity",
    "Scheme",
    "VelocityModel",
    "adjoint_gradient",
    "adjoint_gradient_distributed",
    "adjoint_gradient_pointwise",
    "coefficient_sensitivity",
    "continuity_gap",
    "direct_gradient",
    "integrate_flow",
    "integrate_flow_gradient",
    "inverse_map",
    "jacobian_logdet",
]
