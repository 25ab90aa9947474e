"""Generalised symmetric eigenbases A phi = lambda M phi."""

from __future__ import annotations

import logging

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, eigh

from diffeoreg.basis.gram import GramMatrix
from diffeoreg.errors import ModalError
from diffeoreg.modal.ModalBasis import ModalBasis

logger = logging.getLogger(__name__)

NEGATIVE_EIG_RTOL = 1e-10


def as_matrix(matrix: np.ndarray | GramMatrix) -> tuple[np.ndarray, str]:
    if isinstance(matrix, GramMatrix):
        return matrix.entries, matrix.form_tag
    return np.atleast_2d(np.asarray(matrix, dtype=float)), "custom"


def fix_signs(vectors: np.ndarray) -> np.ndarray:
    """Make the largest-magnitude entry of every column positive."""
    if vectors.size == 0:
        return vectors
    rows = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[rows, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs[None, :]


def solve_generalized_eig(A: np.ndarray | GramMatrix, M: np.ndarray | GramMatrix, m: int) -> ModalBasis:
    """
    The m eigenpairs of smallest eigenvalue, M-orthonormal and ascending.

    The full dense spectrum is computed once and truncated, so bases of
    different sizes from the same pencil are nested.
    """
    A_entries, form_tag = as_matrix(A)
    M_entries, _ = as_matrix(M)
    N = A_entries.shape[0]
    if A_entries.shape != (N, N) or M_entries.shape != (N, N):
        raise ModalError(f"Pencil matrices must be square and equal in size, got {A_entries.shape} and {M_entries.shape}.")
    if not 0 <= m <= N:
        raise ModalError(f"Requested {m} modes from a pencil of size {N}.")
    try:
        cho_factor(M_entries)
        eigenvalues, vectors = eigh(A_entries, M_entries)
    except LinAlgError as exc:
        raise ModalError(f"M is not positive definite: {exc}") from exc

    floor = -NEGATIVE_EIG_RTOL * max(1.0, abs(float(eigenvalues[-1])))
    if eigenvalues[0] < floor:
        raise ModalError(f"A is not positive semi-definite (smallest eigenvalue {eigenvalues[0]:.3g}).")
    if eigenvalues[0] < 0:
        logger.warning("Clipping slightly negative eigenvalue %.3g to zero.", eigenvalues[0])
        eigenvalues = np.maximum(eigenvalues, 0.0)

    vectors = fix_signs(vectors[:, :m])
    logger.debug("Solved %dx%d pencil (%s); kept %d modes.", N, N, form_tag, m)
    return ModalBasis(vectors, eigenvalues[:m], M_entries, A_entries, form_tag)
