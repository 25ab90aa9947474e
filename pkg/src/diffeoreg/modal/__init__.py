"""Reduced coefficient bases: generalised eigenmodes, gfem spaces and truncation diagnostics."""

from diffeoreg.modal.eigen import solve_generalized_eig
from diffeoreg.modal.gfem import build_gfem_basis
from diffeoreg.modal.lemma import LemmaReport, eigen_bound_report, minimize_regularized, norm_instance, quadratic_instance
from diffeoreg.modal.ModalBasis import ModalBasis
from diffeoreg.modal.snapshots import SnapshotFamily, generate_snapshots, snapshot_objective
from diffeoreg.modal.sweeps import objective_error_sweep, projection_error_sweep, sweep_frame

__all__ = [
    "LemmaReport",
    "ModalBasis",
    "SnapshotFamily",
    "build_gfem_basis",
    "eigen_bound_report",
    "generate_snapshots",
    "minimize_regularized",
    "norm_instance",
    "objective_error_sweep",
    "projection_error_sweep",
    "quadratic_instance",
    "snapshot_objective",
    "solve_generalized_eig",
    "sweep_frame",
]
