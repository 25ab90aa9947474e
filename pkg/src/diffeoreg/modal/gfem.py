"""Reduced bases spanned by operator solutions with polynomial volume and boundary sources."""

from __future__ import annotations

import logging

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve, cholesky, solve_triangular, svd

from diffeoreg.basis.BasisSet import BasisKind, BasisSet
from diffeoreg.basis.gram import DEFAULT_QUAD_ORDER, FormKind, GramForm, GramMatrix, assemble_gram
from diffeoreg.errors import BasisError, ModalError
from diffeoreg.geometry.quadrature import facet_quadrature, quadrature
from diffeoreg.geometry.Triangulation import Triangulation
from diffeoreg.modal.eigen import as_matrix
from diffeoreg.modal.ModalBasis import ModalBasis

logger = logging.getLogger(__name__)

SHIFT_FACTOR = 1e-10
RANK_RTOL = 1e-10
FACET_POINTS = 8


def _monomial_exponents(degree: int) -> list[tuple[int, int]]:
    return [(i, total - i) for total in range(degree + 1) for i in range(total, -1, -1)]


def volume_loads(basis: BasisSet, tri: Triangulation, degree: int, quad_order: int | None = None) -> np.ndarray:
    """
    b_i = int f . phi_i for f = x1^i x2^j e_c, total degree <= p; shape (N, sources).
    The default order integrates polynomial bases exactly.
    """
    if quad_order is None:
        field_degree = basis.field_degree
        quad_order = DEFAULT_QUAD_ORDER if field_degree is None else field_degree + degree
    points, weights = quadrature(tri, max(quad_order, 1))
    values = basis.evaluate(points)
    loads = []
    for component in (0, 1):
        for i, j in _monomial_exponents(degree):
            monomial = points[:, 0] ** i * points[:, 1] ** j
            loads.append(np.einsum("mq,q->m", values[:, :, component], weights * monomial))
    return np.array(loads).T


def boundary_loads(basis: BasisSet, degree: int, points_per_facet: int = FACET_POINTS) -> np.ndarray:
    """
    b_i = int_facet s^q (t . phi_i) per facet and per q <= degree, with s the
    facet parameter and t the unit tangent. Only the tangential component of a
    boundary source pairs with a tangential test field.
    """
    loads = []
    for facet in basis.domain.facets:
        points, weights, s = facet_quadrature(facet, points_per_facet)
        tangent = (facet.end - facet.start) / facet.length
        tangential = np.einsum("mpr,r->mp", basis.evaluate(points), tangent)
        for q in range(degree + 1):
            loads.append(tangential @ (weights * s**q))
    return np.array(loads).T


def m_orthonormalize(U: np.ndarray, M: np.ndarray, rtol: float = RANK_RTOL) -> np.ndarray:
    """
    Columns spanning col(U), orthonormal in the M inner product, ordered by
    singular value; directions with singular value below rtol * largest are dropped.
    """
    L = cholesky(M, lower=True)
    Q, sigma, _ = svd(L.T @ U, full_matrices=False)
    if sigma.size == 0 or sigma[0] == 0.0:
        raise ModalError("All sources produced zero solutions.")
    keep = sigma > rtol * sigma[0]
    dropped = int(np.sum(~keep))
    if dropped:
        logger.debug("Dropped %d dependent source directions.", dropped)
    return solve_triangular(L.T, Q[:, keep], lower=False)


def build_gfem_basis(
    A: np.ndarray | GramMatrix,
    basis: BasisSet,
    tri: Triangulation,
    degree: int,
    *,
    metric: np.ndarray | GramMatrix | None = None,
    boundary_degree: int | None = None,
    quad_order: int | None = None,
    shift: bool = True,
) -> ModalBasis:
    """
    Solve A u = b for every volume source of total degree <= `degree` and,
    when `boundary_degree` is set, every facet-wise boundary source, then
    M-orthonormalise the solutions. M defaults to the L2 Gram matrix.
    """
    if basis.kind is not BasisKind.SPATIAL:
        raise BasisError("gfem bases are built on spatial bases.")
    if degree < 0:
        raise ModalError(f"Source degree must be non-negative, got {degree}.")
    A_entries, form_tag = as_matrix(A)
    if metric is None:
        metric = assemble_gram(basis, GramForm(FormKind.L2), tri, quad_order)
    M_entries, _ = as_matrix(metric)
    N = basis.size
    if A_entries.shape != (N, N) or M_entries.shape != (N, N):
        raise ModalError(f"Operator and metric must be {N}x{N}.")

    loads = volume_loads(basis, tri, degree, quad_order)
    if boundary_degree is not None:
        loads = np.hstack([loads, boundary_loads(basis, boundary_degree)])

    try:
        factor = cho_factor(A_entries)
    except LinAlgError as exc:
        if not shift:
            raise ModalError(f"Operator {form_tag} is singular: {exc}") from exc
        epsilon = SHIFT_FACTOR * float(np.trace(A_entries)) / N
        logger.warning("Operator %s is semi-definite; shifting by %.3g * M.", form_tag, epsilon)
        try:
            factor = cho_factor(A_entries + epsilon * M_entries)
        except LinAlgError as inner:
            raise ModalError(f"Shifted operator {form_tag} is still singular: {inner}") from inner

    solutions = cho_solve(factor, loads)
    W = m_orthonormalize(solutions, M_entries)
    logger.info("gfem basis (%s, degree %d): %d of %d sources kept.", form_tag, degree, W.shape[1], loads.shape[1])
    return ModalBasis(W, None, M_entries, A_entries, f"gfem-{form_tag}")
