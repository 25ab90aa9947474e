"""Turn a RunConfig into domains, bases, targets and registration problems."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from diffeoreg.basis.gram import GramForm, GramMatrix, assemble_gram, tensorize_gram
from diffeoreg.basis.SpaceTimeBasis import tensorize_time
from diffeoreg.basis.TangentialPolynomialBasis import TangentialPolynomialBasis, build_tangential_polynomial_basis
from diffeoreg.cli.config import RunConfig
from diffeoreg.compositional.DisplacementModel import DisplacementModel
from diffeoreg.geometry.CurvedMap import CurvedMap, curved_map_from_tag
from diffeoreg.geometry.MeshFileParser import MeshFileParser
from diffeoreg.geometry.PolygonalDomain import PolygonalDomain
from diffeoreg.geometry.quadrature import quadrature
from diffeoreg.geometry.Triangulation import Triangulation
from diffeoreg.io.artifacts import read_point_set
from diffeoreg.optimizer.descent import DescentConfig
from diffeoreg.optimizer.Metric import Metric
from diffeoreg.optimizer.RegistrationProblem import RegistrationProblem
from diffeoreg.targets.DistributedTarget import DistributedTarget
from diffeoreg.targets.fields import ZSpace, field_from_tag
from diffeoreg.targets.PointwiseTarget import PointwiseTarget
from diffeoreg.targets.Target import Target
from diffeoreg.vectorflow.integrate import integrate_flow
from diffeoreg.vectorflow.VelocityModel import VelocityModel

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class Workspace:
    """Everything a command needs that does not depend on the target parameter."""

    domain: PolygonalDomain
    tri: Triangulation
    spatial: TangentialPolynomialBasis
    curved_map: CurvedMap | None


def build_workspace(config: RunConfig) -> Workspace:
    section = config.domain
    if section.kind == "mesh":
        tri = MeshFileParser(Path(section.mesh_file)).parse()
        domain = tri.domain or tri.to_domain()
    else:
        domain = PolygonalDomain.rectangle(*section.bounds)
        tri = Triangulation.structured_rectangle(domain, section.mesh_resolution)
    curved = curved_map_from_tag(section.curved_map, section.curved_params) if section.curved_map else None
    spatial = build_tangential_polynomial_basis(domain, config.basis.degree, normalize=config.basis.normalize)
    logger.info(
        "Domain: %d facets, area %.4g; mesh of %d triangles; basis of %d spatial fields.",
        len(domain.facets),
        domain.area,
        len(tri.triangles),
        spatial.size,
    )
    return Workspace(domain, tri, spatial, curved)


def spatial_metric(config: RunConfig, workspace: Workspace) -> GramMatrix:
    """Metric form Gram matrix plus metric_shift times the L2 Gram matrix, both integrated exactly."""
    gram = assemble_gram(workspace.spatial, GramForm.from_tag(config.basis.metric_form), workspace.tri)
    if config.basis.metric_shift > 0:
        l2 = assemble_gram(workspace.spatial, "L2", workspace.tri)
        gram = gram.plus(l2, config.basis.metric_shift)
    return gram


def build_map_model(config: RunConfig, workspace: Workspace) -> VelocityModel | DisplacementModel:
    if config.family == "cm":
        return DisplacementModel.zero(workspace.spatial, workspace.curved_map)
    return VelocityModel.zero(tensorize_time(workspace.spatial, config.basis.temporal_degree))


def build_metric(config: RunConfig, workspace: Workspace) -> GramMatrix:
    gram = spatial_metric(config, workspace)
    if config.family == "vf":
        return tensorize_gram(gram, config.basis.temporal_degree)
    return gram


def physical_points(workspace: Workspace, points: np.ndarray) -> np.ndarray:
    return points if workspace.curved_map is None else workspace.curved_map.apply(points)


def true_coefficients(config: RunConfig, size: int) -> np.ndarray:
    coefficients = np.zeros(size)
    coefficients[0] = config.target.synthetic_amplitude
    return coefficients


def warp(config: RunConfig, model: VelocityModel | DisplacementModel, points: np.ndarray) -> np.ndarray:
    """Images of `points` under the map model (flow end points or the compositional map)."""
    if isinstance(model, DisplacementModel):
        return model.apply(points)
    return integrate_flow(model, points, config.optimizer.steps, config.optimizer.scheme, threads=config.threads).endpoints


def synthetic_clouds(
    config: RunConfig, workspace: Workspace, model: VelocityModel | DisplacementModel, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Uniform sources in the inner 80% of the bounding box and their images under the true warp."""
    x_min, x_max, y_min, y_max = workspace.domain.bounding_box
    unit = rng.uniform(0.1, 0.9, size=(config.target.synthetic_points, 2))
    sources = np.column_stack([x_min + unit[:, 0] * (x_max - x_min), y_min + unit[:, 1] * (y_max - y_min)])
    sources = physical_points(workspace, sources)
    truth = model.with_coefficients(true_coefficients(config, model.size))
    return sources, warp(config, truth, sources)


def build_target(
    config: RunConfig,
    workspace: Workspace,
    model: VelocityModel | DisplacementModel,
    mu: float | None = None,
) -> Target:
    section = config.target
    if section.kind == "pointwise":
        if section.source_file is not None:
            sources = read_point_set(Path(section.source_file))
            targets = read_point_set(Path(section.target_file))
        else:
            sources, targets = synthetic_clouds(config, workspace, model, np.random.default_rng(config.seed))
        weights = None if len(sources) == len(targets) else np.full((len(sources), len(targets)), 1.0 / len(targets))
        return PointwiseTarget(sources, targets, weights, section.doubly_stochastic)

    mu = section.mu if mu is None else mu
    u = field_from_tag(section.field, section.field_params, mu)
    if section.z_space == "zero":
        z_space = ZSpace.zero()
    elif section.z_space == "polynomial":
        z_space = ZSpace.polynomial(section.z_degree)
    else:
        z_space = ZSpace.snapshots([field_from_tag(section.field, section.field_params, m) for m in section.z_mu])
    points, weights = quadrature(workspace.tri, config.domain.quad_order)
    if workspace.curved_map is not None:
        jac = np.abs(np.linalg.det(workspace.curved_map.gradient(points)))
        points, weights = workspace.curved_map.apply(points), weights * jac
    return DistributedTarget(u, z_space, points, weights)


def build_problem(
    config: RunConfig,
    workspace: Workspace,
    mu: float | None = None,
    metric: GramMatrix | None = None,
) -> RegistrationProblem:
    model = build_map_model(config, workspace)
    metric = metric or build_metric(config, workspace)
    target = build_target(config, workspace, model, mu)
    section = config.optimizer
    penalty_points = None
    if config.family == "cm":
        # the penalty sees every point the bijectivity verdict samples
        quad_points, _ = quadrature(workspace.tri, config.domain.quad_order)
        penalty_points = np.vstack([quad_points, workspace.domain.grid(section.bijectivity_density)])
    return RegistrationProblem(
        map_model=model,
        target=target,
        metric=Metric(metric),
        tikhonov_weight=config.basis.tikhonov_weight,
        tikhonov_operator=metric.entries,
        penalty_weight=section.penalty_weight,
        penalty_threshold=section.penalty_threshold,
        penalty_points=penalty_points,
        steps=section.steps,
        scheme=section.scheme,
        threads=config.threads,
        gradient_method=section.gradient,
    )


def descent_config(config: RunConfig) -> DescentConfig:
    section = config.optimizer
    return DescentConfig(
        max_iters=section.max_iters,
        grad_tol=section.grad_tol,
        gamma0=section.gamma0,
        step_rule=section.step_rule,
        rho=section.rho,
        c=section.armijo_c,
        penalty_continuation=section.penalty_continuation,
        max_continuations=section.max_continuations,
        bijectivity_density=section.bijectivity_density,
    )
