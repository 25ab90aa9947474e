"""Truncation diagnostics: worst-case projection and objective errors per basis size."""

from __future__ import annotations

import logging
from typing import Callable, Sequence

import numpy as np
import pandas as pd

from diffeoreg.errors import ModalError
from diffeoreg.io.schemas.ModalSweepSchema import ModalSweepSchema
from diffeoreg.io.schemas.SchemaValidation import validate_dataframe
from diffeoreg.modal.ModalBasis import ModalBasis

logger = logging.getLogger(__name__)

Evaluator = Callable[[np.ndarray, int], float]


def _snapshot_matrix(snapshots: Sequence[np.ndarray] | np.ndarray, N: int) -> np.ndarray:
    matrix = np.atleast_2d(np.asarray(snapshots, dtype=float))
    if matrix.shape[1] != N:
        raise ModalError(f"Snapshots have {matrix.shape[1]} entries, basis dimension is {N}.")
    return matrix


def _m_values(basis: ModalBasis, m_values: Sequence[int] | None, start: int) -> list[int]:
    values = list(range(start, basis.m + 1)) if m_values is None else [int(m) for m in m_values]
    for m in values:
        if not 0 <= m <= basis.m:
            raise ModalError(f"m={m} outside 0..{basis.m}.")
    return values


def projection_error_sweep(
    snapshots: Sequence[np.ndarray] | np.ndarray,
    basis: ModalBasis,
    m_values: Sequence[int] | None = None,
) -> np.ndarray:
    """E_m = max_s |u_s - P_W u_s|_M / |u_s|_M for each m (1..basis.m by default)."""
    matrix = _snapshot_matrix(snapshots, basis.N)
    norms = np.array([basis.m_norm(u) for u in matrix])
    if np.any(norms == 0.0):
        raise ModalError(f"Snapshot {int(np.argmin(norms))} has zero M-norm.")
    errors = []
    for m in _m_values(basis, m_values, 1):
        reduced = basis.truncate(m)
        residuals = np.array([reduced.project(u)[1] for u in matrix])
        errors.append(float(np.max(residuals / norms)))
    return np.array(errors)


def objective_error_sweep(
    snapshots: Sequence[np.ndarray] | np.ndarray,
    basis: ModalBasis,
    evaluator: Evaluator,
    m_values: Sequence[int] | None = None,
) -> np.ndarray:
    """E_m^obj = max_s evaluator(P_W u_s, s); m = 0 evaluates the zero map."""
    matrix = _snapshot_matrix(snapshots, basis.N)
    errors = []
    for m in _m_values(basis, m_values, 0):
        reduced = basis.truncate(m)
        values = [evaluator(reduced.projector(u), index) for index, u in enumerate(matrix)]
        errors.append(float(np.max(values)))
    return np.array(errors)


def sweep_frame(m_values: Sequence[int], e_proj: np.ndarray, e_obj: np.ndarray | None = None) -> pd.DataFrame:
    df = pd.DataFrame(
        {
            "m": list(m_values),
            "E_proj": np.asarray(e_proj, dtype=float),
            "E_obj": np.full(len(m_values), np.nan) if e_obj is None else np.asarray(e_obj, dtype=float),
        }
    )
    return validate_dataframe(df, ModalSweepSchema, context="modal sweep")
