"""The register, modal and flow-eval commands."""

from __future__ import annotations

import logging
import time
from pathlib import Path
from typing import Sequence

import humanize
import numpy as np

from diffeoreg.basis.gram import GramForm, GramMatrix, assemble_gram
from diffeoreg.cli.builders import (
    Workspace,
    build_map_model,
    build_problem,
    build_workspace,
    descent_config,
    physical_points,
    warp,
)
from diffeoreg.cli.config import RunConfig
from diffeoreg.errors import ConfigError
from diffeoreg.geometry.quadrature import quadrature
from diffeoreg.io.artifacts import (
    read_matrix,
    read_vector,
    write_deformed_points,
    write_frame,
    write_json,
    write_matrix,
    write_point_set,
)
from diffeoreg.io.schemas.ModalSweepSchema import ModalSweepSchema
from diffeoreg.modal.eigen import solve_generalized_eig
from diffeoreg.modal.gfem import build_gfem_basis
from diffeoreg.modal.ModalBasis import ModalBasis
from diffeoreg.modal.snapshots import generate_snapshots, snapshot_objective
from diffeoreg.modal.sweeps import objective_error_sweep, projection_error_sweep, sweep_frame
from diffeoreg.optimizer.alternation import em_registration
from diffeoreg.optimizer.descent import minimize
from diffeoreg.optimizer.OptimizerReport import OptimizerReport
from diffeoreg.optimizer.RegistrationProblem import RegistrationProblem
from diffeoreg.targets.PointwiseTarget import PointwiseTarget
from diffeoreg.vectorflow.integrate import integrate_flow

logger = logging.getLogger(__name__)


def _optimize(config: RunConfig, problem: RegistrationProblem, initial: np.ndarray) -> tuple[RegistrationProblem, OptimizerReport]:
    if isinstance(problem.target, PointwiseTarget) and config.target.em_outer_iters > 0:
        result = em_registration(
            problem, descent_config(config), config.target.em_outer_iters, initial, config.target.em_sigma0
        )
        return result.problem, result.final_report
    report = minimize(problem, descent_config(config), initial)
    if report.continuations:
        problem = problem.with_penalty_weight(report.penalty_weight)
    return problem, report


def register_once(
    config: RunConfig,
    workspace: Workspace,
    out_dir: Path,
    mu: float | None = None,
    initial: np.ndarray | None = None,
) -> np.ndarray:
    """
    One registration: report.csv, coefficients.txt, deformed_grid.csv and summary.json in `out_dir`.

    Pointwise runs also write the clouds they fitted as source_points.csv and target_points.csv.
    """
    started = time.perf_counter()
    problem = build_problem(config, workspace, mu)
    a0 = np.zeros(problem.size) if initial is None else np.asarray(initial, dtype=float)
    problem, report = _optimize(config, problem, a0)
    coefficients = report.coefficients

    report.write(out_dir)
    grid = physical_points(workspace, workspace.domain.grid(config.output.grid_density))
    images = warp(config, problem.model(coefficients), grid)
    write_deformed_points(grid, images, out_dir / "deformed_grid.csv")
    if isinstance(problem.target, PointwiseTarget):
        write_point_set(problem.target.source_points, out_dir / "source_points.csv")
        write_point_set(problem.target.target_points, out_dir / "target_points.csv")

    verdict = problem.bijectivity(coefficients, config.optimizer.bijectivity_density)
    wall_time = time.perf_counter() - started
    summary = {
        "family": config.family,
        "mu": config.target.mu if mu is None else mu,
        "initial_objective": problem.objective(a0),
        "final_objective": problem.objective(coefficients),
        "min_jacobian": verdict.min_jacobian,
        "bijectivity_verdict": verdict.verdict.value,
        "termination_reason": report.reason.value,
        "iterations": report.iterations,
        "continuations": report.continuations,
        "penalty_weight": problem.penalty_weight,
        "wall_time": wall_time,
    }
    write_json(summary, out_dir / "summary.json")
    logger.info(
        "Registration finished in %s: objective %.6g -> %.6g, verdict %s. Artifacts in %s",
        humanize.precisedelta(wall_time, minimum_unit="milliseconds"),
        summary["initial_objective"],
        summary["final_objective"],
        verdict.verdict.value,
        out_dir,
    )
    return coefficients


def run_register(
    config: RunConfig,
    param_sweep: Sequence[float] | None = None,
    initial: np.ndarray | None = None,
) -> int:
    workspace = build_workspace(config)
    out_dir = Path(config.output.directory)
    if not param_sweep:
        register_once(config, workspace, out_dir, initial=initial)
        return 0
    if config.target.kind != "distributed":
        raise ConfigError("--param-sweep needs a distributed target")
    coefficients = initial
    for index, mu in enumerate(param_sweep):
        logger.info("Parameter sweep %d/%d: mu = %g", index + 1, len(param_sweep), mu)
        coefficients = register_once(config, workspace, out_dir / f"mu_{index:02d}", mu, coefficients)
    return 0


def _modal_basis(config: RunConfig, workspace: Workspace, form_tag: str, M: GramMatrix) -> ModalBasis:
    section = config.modal
    A = assemble_gram(workspace.spatial, GramForm.from_tag(form_tag), workspace.tri)
    if section.basis_kind == "gfem":
        return build_gfem_basis(
            A,
            workspace.spatial,
            workspace.tri,
            section.gfem_degree,
            metric=M,
            boundary_degree=section.gfem_boundary_degree,
        )
    m = workspace.spatial.size if section.m_max is None else min(section.m_max, workspace.spatial.size)
    return solve_generalized_eig(A, M, m)


def run_modal(config: RunConfig) -> int:
    """Per form: a sweep CSV `m, E_proj, E_obj` and the persisted basis."""
    workspace = build_workspace(config)
    out_dir = Path(config.output.directory)
    section = config.modal
    if section.snapshot_file is not None:
        snapshots = read_matrix(Path(section.snapshot_file))
        mu_values = list(section.mu_values)[: len(snapshots)]
    else:
        mu_values = list(section.mu_values)
        snapshots = generate_snapshots(workspace.spatial, workspace.tri, mu_values)
    write_matrix(snapshots, out_dir / "snapshots.txt")
    M = assemble_gram(workspace.spatial, "L2", workspace.tri)

    evaluator = None
    if section.objective and len(mu_values) == len(snapshots):
        points, _ = quadrature(workspace.tri, config.domain.quad_order)
        evaluator = snapshot_objective(workspace.spatial, mu_values, points)

    for form_tag in section.forms:
        form = GramForm.from_tag(form_tag)
        basis = _modal_basis(config, workspace, form_tag, M)
        m_values = list(range(0, basis.m + 1))
        e_proj = projection_error_sweep(snapshots, basis, m_values)
        e_obj = objective_error_sweep(snapshots, basis, evaluator, m_values) if evaluator else None
        write_frame(sweep_frame(m_values, e_proj, e_obj), out_dir / f"sweep_{form.file_tag}.csv", ModalSweepSchema)
        basis.save(out_dir / f"basis_{form.file_tag}.txt")
        logger.info("%s: %d modes, E_proj(m=%d) = %.3g", form.tag, basis.m, basis.m, e_proj[-1])
    return 0


def run_flow_eval(config: RunConfig, coefficients_path: Path | None) -> int:
    """Dump the trajectories of a grid of seeds under the flow with the given coefficients."""
    if config.family != "vf":
        raise ConfigError("flow-eval needs family 'vf'")
    workspace = build_workspace(config)
    model = build_map_model(config, workspace)
    if coefficients_path is not None:
        model = model.with_coefficients(read_vector(coefficients_path))
    seeds = workspace.domain.grid(config.output.grid_density)
    flow = integrate_flow(
        model, seeds, config.optimizer.steps, config.optimizer.scheme, with_logdet=True, threads=config.threads
    )
    path = flow.write_csv(Path(config.output.directory) / "flow.csv")
    logger.info("Wrote %s trajectories to %s", humanize.intcomma(len(seeds)), path)
    return 0
