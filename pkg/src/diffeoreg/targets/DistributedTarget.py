"""L2 misfit between u o Phi and its best approximation in a fixed space Z_N."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from diffeoreg.errors import TargetError
from diffeoreg.geometry.quadrature import quadrature
from diffeoreg.geometry.Triangulation import Triangulation
from diffeoreg.targets.fields import ScalarField, ZSpace

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class DistributedTarget:
    """
    f(Phi) = min_{zeta in Z_N} 1/2 int (u o Phi - zeta)^2 by quadrature.

    The Z Gram factorisation does not depend on Phi and is computed once;
    zeta_Phi itself is recomputed for every set of images.
    """

    u: ScalarField
    z_space: ZSpace
    points: np.ndarray
    weights: np.ndarray
    _z_values: np.ndarray = field(init=False, repr=False)
    _z_factor: tuple[np.ndarray, bool] | None = field(init=False, repr=False)

    def __post_init__(self) -> None:
        points = np.atleast_2d(np.asarray(self.points, dtype=float))
        weights = np.asarray(self.weights, dtype=float).reshape(-1)
        if len(points) != len(weights):
            raise TargetError(f"{len(points)} quadrature points but {len(weights)} weights.")
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "weights", weights)

        z_values = self.z_space.values(points)
        object.__setattr__(self, "_z_values", z_values)
        if len(self.z_space) == 0:
            object.__setattr__(self, "_z_factor", None)
            return
        gram = (z_values * weights[None, :]) @ z_values.T
        eig = np.linalg.eigvalsh(gram)
        condition = float(eig[-1] / eig[0]) if eig[0] > 0 else float("inf")
        logger.info("Z_N Gram (%s, size %d): condition number %.3e", self.z_space.tag, len(gram), condition)
        try:
            factor = cho_factor(gram)
        except LinAlgError as exc:
            raise TargetError(f"Z_N Gram matrix ({self.z_space.tag}) is singular.") from exc
        if not np.isfinite(condition) or condition > 1e14:
            raise TargetError(f"Z_N Gram matrix ({self.z_space.tag}) is numerically singular (cond {condition:.3g}).")
        object.__setattr__(self, "_z_factor", factor)

    @classmethod
    def on_mesh(cls, u: ScalarField, z_space: ZSpace, tri: Triangulation, quad_order: int = 3) -> DistributedTarget:
        points, weights = quadrature(tri, quad_order)
        return cls(u, z_space, points, weights)

    @property
    def control_points(self) -> np.ndarray:
        return self.points

    def _check(self, images: np.ndarray) -> np.ndarray:
        images = np.atleast_2d(np.asarray(images, dtype=float))
        if images.shape != self.points.shape:
            raise TargetError(f"Expected images of shape {self.points.shape}, got {images.shape}.")
        return images

    def projection(self, values: np.ndarray) -> np.ndarray:
        """zeta at the quadrature points: L2 projection of `values` onto Z_N."""
        if self._z_factor is None:
            return np.zeros_like(values)
        rhs = self._z_values @ (self.weights * values)
        return self._z_values.T @ cho_solve(self._z_factor, rhs)

    def residual(self, images: np.ndarray) -> np.ndarray:
        values = self.u.value(self._check(images))
        return values - self.projection(values)

    def value(self, images: np.ndarray) -> float:
        res = self.residual(images)
        return 0.5 * float(np.dot(self.weights, res**2))

    def derivative_weights(self, images: np.ndarray) -> np.ndarray:
        """r_q = w_q (u(Phi_q) - zeta_q) grad u(Phi_q)."""
        images = self._check(images)
        res = self.residual(images)
        return (self.weights * res)[:, None] * self.u.gradient(images)

    def frechet(self, images: np.ndarray, directions: np.ndarray) -> float:
        """int (u o Phi - zeta) (grad u o Phi) . h"""
        directions = self._check(directions)
        return float(np.sum(self.derivative_weights(images) * directions))
