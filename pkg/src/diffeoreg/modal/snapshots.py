"""Synthetic parametric displacement snapshots for modal studies."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from diffeoreg.basis.BasisSet import BasisSet
from diffeoreg.basis.gram import DEFAULT_QUAD_ORDER, FormKind, GramForm, assemble_gram, exact_quad_order
from diffeoreg.compositional.DisplacementModel import DisplacementModel
from diffeoreg.errors import DomainError
from diffeoreg.geometry.quadrature import quadrature
from diffeoreg.geometry.Triangulation import Triangulation
from diffeoreg.targets.PointwiseTarget import PointwiseTarget

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SnapshotFamily:
    """
    d_mu(x) = amplitude * b(x) * exp(-|x - c(mu)|^2 / (2 width^2)) * direction,
    with b the rectangle bubble (1 at the centre, 0 on the boundary) and the
    centre moving linearly from `center_start` (mu=0) to `center_end` (mu=1).
    """

    amplitude: float = 0.05
    width: float = 0.2
    direction: tuple[float, float] = (1.0, 0.5)
    center_start: tuple[float, float] = (0.3, 0.4)
    center_end: tuple[float, float] = (0.7, 0.6)

    def center(self, mu: float) -> np.ndarray:
        start, end = np.asarray(self.center_start), np.asarray(self.center_end)
        return start + mu * (end - start)

    def displacement(self, points: np.ndarray, mu: float, bounds: tuple[float, float, float, float]) -> np.ndarray:
        points = np.atleast_2d(points)
        a, b, c, d = bounds
        s = (points[:, 0] - a) / (b - a)
        r = (points[:, 1] - c) / (d - c)
        bubble = 16.0 * s * (1.0 - s) * r * (1.0 - r)
        gauss = np.exp(-((points - self.center(mu)) ** 2).sum(axis=1) / (2.0 * self.width**2))
        direction = np.asarray(self.direction, dtype=float)
        direction = direction / np.linalg.norm(direction)
        return self.amplitude * (bubble * gauss)[:, None] * direction[None, :]


def _bounds(basis: BasisSet) -> tuple[float, float, float, float]:
    bounds = basis.domain.rectangle_bounds()
    if bounds is None:
        raise DomainError("Synthetic snapshots are defined on rectangles.")
    return bounds


def generate_snapshots(
    basis: BasisSet,
    tri: Triangulation,
    mu_values: Sequence[float],
    family: SnapshotFamily | None = None,
    quad_order: int | None = None,
) -> np.ndarray:
    """L2 projections of d_mu onto the basis, one row per mu."""
    family = family or SnapshotFamily()
    bounds = _bounds(basis)
    M = assemble_gram(basis, GramForm(FormKind.L2), tri, quad_order).entries
    if quad_order is None:
        quad_order = exact_quad_order(basis, GramForm(FormKind.L2)) or DEFAULT_QUAD_ORDER
    factor = cho_factor(M)
    points, weights = quadrature(tri, quad_order)
    values = basis.evaluate(points)
    rows = []
    for mu in mu_values:
        load = np.einsum("mqr,qr,q->m", values, family.displacement(points, mu, bounds), weights)
        rows.append(cho_solve(factor, load))
    logger.debug("Generated %d snapshots of dimension %d.", len(rows), basis.size)
    return np.array(rows)


def snapshot_objective(
    basis: BasisSet,
    mu_values: Sequence[float],
    points: np.ndarray,
    family: SnapshotFamily | None = None,
) -> Callable[[np.ndarray, int], float]:
    """
    Evaluator for objective sweeps: the mean squared misfit between the CM
    with the given coefficients and the warp x + d_mu(x) at `points`.
    """
    family = family or SnapshotFamily()
    bounds = _bounds(basis)
    points = np.atleast_2d(points)
    targets = [
        PointwiseTarget(points, points + family.displacement(points, mu, bounds)) for mu in mu_values
    ]
    model = DisplacementModel.zero(basis)

    def evaluate(coefficients: np.ndarray, index: int) -> float:
        target = targets[index]
        return target.value(model.with_coefficients(coefficients).apply(points)) / len(points)

    return evaluate
