"""Property suite behind the `check` command: measured value against tolerance, one JSON report."""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from diffeoreg.basis.SpaceTimeBasis import tensorize_time
from diffeoreg.cli.builders import Workspace, build_target, build_workspace, physical_points
from diffeoreg.cli.config import RunConfig
from diffeoreg.compositional.cm_maps import cm_target_gradient, penalty
from diffeoreg.compositional.DisplacementModel import DisplacementModel
from diffeoreg.errors import BoundaryLeakError, ConditioningError
from diffeoreg.io.artifacts import write_json
from diffeoreg.targets.DistributedTarget import DistributedTarget
from diffeoreg.targets.PointwiseTarget import PointwiseTarget
from diffeoreg.targets.Target import Target
from diffeoreg.vectorflow.integrate import continuity_gap, integrate_flow, inverse_map
from diffeoreg.vectorflow.sensitivity import adjoint_gradient, direct_gradient
from diffeoreg.vectorflow.VelocityModel import VelocityModel

logger = logging.getLogger(__name__)

CHECK_FAILED_EXIT = 3
# hinge active on roughly half the samples of a random map
PENALTY_CHECK_THRESHOLD = 1.0


@dataclass(frozen=True)
class CheckResult:
    name: str
    value: float | None
    tolerance: float
    passed: bool
    detail: str = ""


def _measured(name: str, value: float, tolerance: float, detail: str = "") -> CheckResult:
    return CheckResult(name, float(value), tolerance, bool(value <= tolerance), detail)


def relative_error(approx: np.ndarray, reference: np.ndarray) -> float:
    scale = float(np.linalg.norm(reference))
    diff = float(np.linalg.norm(np.asarray(approx) - np.asarray(reference)))
    if scale == 0.0:
        return diff
    return diff / scale


def central_difference(fun: Callable[[np.ndarray], float], a: np.ndarray, h: float) -> np.ndarray:
    gradient = np.zeros_like(a)
    for index in range(len(a)):
        step = np.zeros_like(a)
        step[index] = h
        gradient[index] = (fun(a + step) - fun(a - step)) / (2.0 * h)
    return gradient


def _random_coefficients(config: RunConfig, size: int, rng: np.random.Generator) -> np.ndarray:
    return config.check.amplitude * rng.standard_normal(size) / np.sqrt(size)


def _boundary_seeds(workspace: Workspace, per_facet: int) -> np.ndarray:
    return np.vstack([facet.sample(per_facet) for facet in workspace.domain.facets])


def _guarded(name: str, tolerance: float, check: Callable[[], CheckResult]) -> CheckResult:
    try:
        return check()
    except (BoundaryLeakError, ConditioningError) as exc:
        return CheckResult(name, None, tolerance, False, str(exc))


def _vf_checks(config: RunConfig, workspace: Workspace, rng: np.random.Generator) -> list[CheckResult]:
    section = config.check
    K = section.steps
    scheme = config.optimizer.scheme
    threads = config.threads
    zero = VelocityModel.zero(tensorize_time(workspace.spatial, config.basis.temporal_degree))
    seeds = workspace.domain.grid(section.seeds_per_side)
    fields = [
        zero.with_coefficients(_random_coefficients(config, zero.size, rng)) for _ in range(section.random_fields)
    ]

    def identity() -> CheckResult:
        ends = integrate_flow(zero, seeds, K, scheme, threads=threads).endpoints
        return _measured("vf_identity", np.abs(ends - seeds).max(initial=0.0), section.identity_tol)

    def round_trip() -> CheckResult:
        worst = 0.0
        for v in fields:
            ends = integrate_flow(v, seeds, K, scheme, threads=threads).endpoints
            back = inverse_map(v, ends, K, scheme, threads=threads)
            worst = max(worst, float(np.abs(back - seeds).max(initial=0.0)))
        return _measured("vf_round_trip", worst, section.round_trip_tol, f"K={K}, {len(fields)} fields")

    def jacobian() -> CheckResult:
        worst = 0.0
        for v in fields:
            flow = integrate_flow(v, seeds, K, scheme, with_gradient=True, with_logdet=True, threads=threads)
            worst = max(worst, flow.determinant_mismatch())
        return _measured("vf_jacobian_consistency", worst, section.jacobian_tol)

    def boundary() -> CheckResult:
        on_boundary = _boundary_seeds(workspace, section.seeds_per_side)
        worst = 0.0
        for v in fields:
            ends = integrate_flow(v, on_boundary, K, scheme, threads=threads).endpoints
            worst = max(worst, float(workspace.domain.boundary_distance(ends).max(initial=0.0)))
        return _measured("vf_boundary_invariance", worst, section.round_trip_tol)

    def continuity() -> CheckResult:
        partners = fields[1:] + [zero]
        excess = -np.inf
        for v, w in zip(fields, partners):
            gap = continuity_gap(v, w, seeds, K, scheme, threads=threads)
            excess = max(excess, gap.lhs - gap.rhs)
        return _measured("vf_continuity_bound", excess, section.continuity_margin, "max of lhs - rhs")

    # gradients are taken at the first field against the images of the second
    v = fields[0]
    other = fields[1] if len(fields) > 1 else zero.with_coefficients(-v.coefficients)
    pointwise = PointwiseTarget(seeds, integrate_flow(other, seeds, K, scheme, threads=threads).endpoints)

    def flow_value(target: Target) -> Callable[[np.ndarray], float]:
        def value(a: np.ndarray) -> float:
            model = v.with_coefficients(a)
            return target.value(integrate_flow(model, target.control_points, K, scheme, threads=threads).endpoints)

        return value

    def gradient_check(name: str, target: Target) -> Callable[[], CheckResult]:
        def check() -> CheckResult:
            adjoint = adjoint_gradient(v, target, K, scheme, threads=threads).gradient
            fd = central_difference(flow_value(target), v.coefficients, section.fd_step)
            return _measured(name, relative_error(adjoint, fd), section.gradient_tol, f"K={K}")

        return check

    def direct_vs_adjoint() -> CheckResult:
        adjoint = adjoint_gradient(v, pointwise, K, scheme, threads=threads).gradient
        direct = direct_gradient(v, pointwise, K, scheme, threads=threads).gradient
        return _measured("vf_direct_vs_adjoint", relative_error(direct, adjoint), section.direct_tol)

    planned = [
        ("vf_identity", section.identity_tol, identity),
        ("vf_round_trip", section.round_trip_tol, round_trip),
        ("vf_jacobian_consistency", section.jacobian_tol, jacobian),
        ("vf_boundary_invariance", section.round_trip_tol, boundary),
        ("vf_continuity_bound", section.continuity_margin, continuity),
        ("vf_gradient_pointwise", section.gradient_tol, gradient_check("vf_gradient_pointwise", pointwise)),
        ("vf_direct_vs_adjoint", section.direct_tol, direct_vs_adjoint),
    ]
    if config.target.kind == "distributed":
        distributed = build_target(config, workspace, zero)
        if isinstance(distributed, DistributedTarget):
            planned.append(
                (
                    "vf_gradient_distributed",
                    section.gradient_tol,
                    gradient_check("vf_gradient_distributed", distributed),
                )
            )
    return [_guarded(name, tol, check) for name, tol, check in planned]


def _cm_checks(config: RunConfig, workspace: Workspace, rng: np.random.Generator) -> list[CheckResult]:
    section = config.check
    zero = DisplacementModel.zero(workspace.spatial, workspace.curved_map)
    reference = workspace.domain.grid(section.seeds_per_side)
    points = physical_points(workspace, reference)
    model = zero.with_coefficients(_random_coefficients(config, zero.size, rng))
    other = zero.with_coefficients(_random_coefficients(config, zero.size, rng))
    identity_tol = section.identity_tol if workspace.curved_map is None else max(section.identity_tol, 1e-10)

    def identity() -> CheckResult:
        return _measured("cm_identity", np.abs(zero.apply(points) - points).max(initial=0.0), identity_tol)

    def facets() -> CheckResult:
        # images of facet f must stay on the line through facet f
        worst = 0.0
        for index, facet in enumerate(workspace.domain.facets):
            images = model.map_polytope(facet.sample(section.seeds_per_side))
            residuals = workspace.domain.facet_line_residuals(images)[:, index]
            worst = max(worst, float(residuals.max(initial=0.0)))
        return _measured("cm_facet_preservation", worst, section.facet_tol)

    def penalty_gradient() -> CheckResult:
        analytic = penalty(model, reference, PENALTY_CHECK_THRESHOLD).gradient

        def value(a: np.ndarray) -> float:
            return penalty(model.with_coefficients(a), reference, PENALTY_CHECK_THRESHOLD).value

        fd = central_difference(value, model.coefficients, section.fd_step)
        return _measured("cm_penalty_gradient", relative_error(analytic, fd), section.cm_gradient_tol)

    def target_gradient() -> CheckResult:
        target = PointwiseTarget(points, other.apply(points))
        analytic = cm_target_gradient(model, target).gradient

        def value(a: np.ndarray) -> float:
            return target.value(model.with_coefficients(a).apply(points))

        fd = central_difference(value, model.coefficients, section.fd_step)
        return _measured("cm_target_gradient", relative_error(analytic, fd), section.cm_gradient_tol)

    planned = [
        ("cm_identity", identity_tol, identity),
        ("cm_facet_preservation", section.facet_tol, facets),
        ("cm_penalty_gradient", section.cm_gradient_tol, penalty_gradient),
        ("cm_target_gradient", section.cm_gradient_tol, target_gradient),
    ]
    return [_guarded(name, tol, check) for name, tol, check in planned]


def run_checks(config: RunConfig) -> list[CheckResult]:
    workspace = build_workspace(config)
    rng = np.random.default_rng(config.seed)
    if config.family == "cm":
        return _cm_checks(config, workspace, rng)
    return _vf_checks(config, workspace, rng)


def run_check(config: RunConfig) -> int:
    """Run the property suite, write check_report.json, and return 3 when any property fails."""
    results = run_checks(config)
    passed = all(result.passed for result in results)
    for result in results:
        shown = "n/a" if result.value is None else f"{result.value:.3g}"
        logger.info(
            "%s %s: %s (tolerance %.1g)%s",
            "PASS" if result.passed else "FAIL",
            result.name,
            shown,
            result.tolerance,
            f" [{result.detail}]" if result.detail else "",
        )
    path = write_json(
        {"family": config.family, "checks": [asdict(result) for result in results], "passed": passed},
        Path(config.output.directory) / "check_report.json",
    )
    logger.info("%d of %d checks passed; report in %s", sum(r.passed for r in results), len(results), path)
    return 0 if passed else CHECK_FAILED_EXIT
