"""Coefficient derivatives of flow maps: direct sensitivities and adjoint gradients."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from diffeoreg.errors import ConditioningError, TargetError
from diffeoreg.targets.DistributedTarget import DistributedTarget
from diffeoreg.targets.PointwiseTarget import PointwiseTarget
from diffeoreg.targets.Target import Target
from diffeoreg.vectorflow.FlowSolution import Scheme
from diffeoreg.vectorflow.integrate import LEAK_TOL, integrate_flow, map_chunks
from diffeoreg.vectorflow.VelocityModel import VelocityModel

logger = logging.getLogger(__name__)

MIN_JACOBIAN = 1e-14


def trapezoid_weights(steps: int) -> np.ndarray:
    weights = np.full(steps + 1, 1.0 / steps)
    weights[0] = weights[-1] = 0.5 / steps
    return weights


def _inverse_2x2(G: np.ndarray, logJ: np.ndarray, step: int) -> np.ndarray:
    """Adjugate over det, with det taken as exp(logJ)."""
    det = np.exp(logJ)
    if not np.all(np.isfinite(G)) or not np.all(np.isfinite(det)) or det.min(initial=np.inf) < MIN_JACOBIAN:
        raise ConditioningError(f"gradX is numerically singular at step {step}.")
    adj = np.empty_like(G)
    adj[:, 0, 0] = G[:, 1, 1]
    adj[:, 1, 1] = G[:, 0, 0]
    adj[:, 0, 1] = -G[:, 0, 1]
    adj[:, 1, 0] = -G[:, 1, 0]
    return adj / det[:, None, None]


def coefficient_sensitivity(
    v: VelocityModel,
    seeds: np.ndarray,
    steps: int,
    scheme: Scheme | str = Scheme.RK4,
    *,
    threads: int = 1,
    leak_tol: float = LEAK_TOL,
) -> np.ndarray:
    """
    dN/da_i(xi) = gradX(xi, 1) int_0^1 gradX(xi, tau)^-1 phi_i(X(xi, tau), tau) dtau.

    The time integral is the composite trapezoid rule on the step grid.
    Returns an array of shape (P, M, 2).
    """
    flow = integrate_flow(
        v, seeds, steps, scheme, with_gradient=True, with_logdet=True, threads=threads, leak_tol=leak_tol
    )
    weights = trapezoid_weights(steps)
    accumulated = np.zeros((len(flow.seeds), v.size, 2))
    for k, t in enumerate(flow.times):
        inverse = _inverse_2x2(flow.gradX[k], flow.logJ[k], k)
        members = v.basis.evaluate(flow.X[k], float(t))
        accumulated += weights[k] * np.einsum("pij,mpj->pmi", inverse, members)
    return np.einsum("pij,pmj->pmi", flow.end_gradient, accumulated)


@dataclass(frozen=True, eq=False)
class GradientResult:
    value: float
    gradient: np.ndarray
    images: np.ndarray


def _hermite_midpoint(x0: np.ndarray, x1: np.ndarray, v0: np.ndarray, v1: np.ndarray, h: float) -> np.ndarray:
    return 0.5 * (x0 + x1) + 0.125 * h * (v0 - v1)


def _adjoint_chunk(
    v: VelocityModel,
    X: np.ndarray,
    terminal: np.ndarray,
    times: np.ndarray,
    scheme: Scheme,
) -> np.ndarray:
    """
    Integrate dLambda/dt = -grad v(X, t)^T Lambda backward from the terminal
    weights and return sum_q int Lambda_q . phi_m(X_q, t) dt.
    """
    steps = len(times) - 1
    h = 1.0 / steps
    weights = trapezoid_weights(steps)

    def rhs(points: np.ndarray, t: float, lam: np.ndarray) -> np.ndarray:
        return np.einsum("pji,pj->pi", v.velocity_grad(points, t), lam)

    lam = terminal.copy()
    velocity_next = v.velocity(X[steps], float(times[steps]))
    gradient = weights[steps] * np.einsum("mpi,pi->m", v.basis.evaluate(X[steps], float(times[steps])), lam)
    for k in range(steps - 1, -1, -1):
        t0, t1 = float(times[k]), float(times[k + 1])
        velocity_k = v.velocity(X[k], t0)
        mid = _hermite_midpoint(X[k], X[k + 1], velocity_k, velocity_next, h)
        tm = 0.5 * (t0 + t1)
        k1 = rhs(X[k + 1], t1, lam)
        k2 = rhs(mid, tm, lam + 0.5 * h * k1)
        if scheme is Scheme.RK2:
            lam = lam + h * k2
        else:
            k3 = rhs(mid, tm, lam + 0.5 * h * k2)
            k4 = rhs(X[k], t0, lam + h * k3)
            lam = lam + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        gradient = gradient + weights[k] * np.einsum("mpi,pi->m", v.basis.evaluate(X[k], t0), lam)
        velocity_next = velocity_k
    return gradient


def adjoint_gradient(
    v: VelocityModel,
    target: Target,
    steps: int,
    scheme: Scheme | str = Scheme.RK4,
    *,
    threads: int = 1,
    leak_tol: float = LEAK_TOL,
) -> GradientResult:
    """
    Value and coefficient gradient of a target composed with the time-1 flow.

    The forward pass stores X at every grid node; the backward adjoint pass
    evaluates X between nodes by cubic Hermite interpolation.
    """
    scheme = Scheme(scheme)
    flow = integrate_flow(v, target.control_points, steps, scheme, threads=threads, leak_tol=leak_tol)
    images = flow.endpoints
    value = target.value(images)
    terminal = target.derivative_weights(images)

    def work(start: int, stop: int) -> np.ndarray:
        return _adjoint_chunk(v, flow.X[:, start:stop], terminal[start:stop], flow.times, scheme)

    partials = map_chunks(work, len(images), threads)
    gradient = np.zeros(v.size)
    for partial in partials:
        gradient = gradient + partial
    return GradientResult(value, gradient, images)


def adjoint_gradient_pointwise(
    v: VelocityModel, target: PointwiseTarget, steps: int, scheme: Scheme | str = Scheme.RK4, **kwargs
) -> np.ndarray:
    if not isinstance(target, PointwiseTarget):
        raise TargetError("adjoint_gradient_pointwise needs a PointwiseTarget.")
    return adjoint_gradient(v, target, steps, scheme, **kwargs).gradient


def adjoint_gradient_distributed(
    v: VelocityModel, target: DistributedTarget, steps: int, scheme: Scheme | str = Scheme.RK4, **kwargs
) -> np.ndarray:
    if not isinstance(target, DistributedTarget):
        raise TargetError("adjoint_gradient_distributed needs a DistributedTarget.")
    return adjoint_gradient(v, target, steps, scheme, **kwargs).gradient


def direct_gradient(
    v: VelocityModel,
    target: Target,
    steps: int,
    scheme: Scheme | str = Scheme.RK4,
    *,
    threads: int = 1,
    leak_tol: float = LEAK_TOL,
) -> GradientResult:
    """Chain rule with the direct sensitivities: dE/da_m = sum_q r_q . dN/da_m(xi_q)."""
    flow = integrate_flow(v, target.control_points, steps, scheme, threads=threads, leak_tol=leak_tol)
    images = flow.endpoints
    sensitivities = coefficient_sensitivity(
        v, target.control_points, steps, scheme, threads=threads, leak_tol=leak_tol
    )
    gradient = np.einsum("pi,pmi->m", target.derivative_weights(images), sensitivities)
    return GradientResult(target.value(images), gradient, images)
