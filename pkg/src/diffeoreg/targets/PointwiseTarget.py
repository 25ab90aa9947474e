"""Weighted squared distances between mapped control points and target points."""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace

import numpy as np

from diffeoreg.errors import TargetError

logger = logging.getLogger(__name__)

STOCHASTIC_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class PointwiseTarget:
    """
    f(Phi) = 1/2 sum_ij P_ij |Phi(xi_i) - y_j|^2.

    Rows of P sum to one. In doubly-stochastic mode (N0 == N1) the columns do
    as well.
    """

    source_points: np.ndarray
    target_points: np.ndarray
    weights: np.ndarray | None = None
    doubly_stochastic: bool = False

    def __post_init__(self) -> None:
        sources = np.atleast_2d(np.asarray(self.source_points, dtype=float))
        targets = np.atleast_2d(np.asarray(self.target_points, dtype=float))
        n0, n1 = len(sources), len(targets)
        if self.weights is None:
            if n0 != n1:
                raise TargetError(f"Default identity weights need equal counts, got {n0} and {n1}.")
            weights = np.eye(n0)
        else:
            weights = np.asarray(self.weights, dtype=float)
        if weights.shape != (n0, n1):
            raise TargetError(f"Weight matrix must be {n0}x{n1}, got {weights.shape}.")
        if weights.min() < 0.0 or weights.max() > 1.0 + STOCHASTIC_TOL:
            raise TargetError("Weights must lie in [0, 1].")
        row_dev = float(np.abs(weights.sum(axis=1) - 1.0).max())
        if row_dev > STOCHASTIC_TOL:
            raise TargetError(f"Weight rows must sum to 1 (max deviation {row_dev:.3g}).")
        if self.doubly_stochastic:
            if n0 != n1:
                raise TargetError(f"Doubly-stochastic weights need N0 == N1, got {n0} and {n1}.")
            col_dev = float(np.abs(weights.sum(axis=0) - 1.0).max())
            if col_dev > STOCHASTIC_TOL:
                raise TargetError(f"Weight columns must sum to 1 (max deviation {col_dev:.3g}).")
        object.__setattr__(self, "source_points", sources)
        object.__setattr__(self, "target_points", targets)
        object.__setattr__(self, "weights", weights)

    @property
    def control_points(self) -> np.ndarray:
        return self.source_points

    def with_weights(self, weights: np.ndarray) -> PointwiseTarget:
        return replace(self, weights=weights)

    def barycenters(self) -> np.ndarray:
        """sum_j P_ij y_j per source point."""
        return self.weights @ self.target_points

    def _check(self, images: np.ndarray) -> np.ndarray:
        images = np.atleast_2d(np.asarray(images, dtype=float))
        if images.shape != self.source_points.shape:
            raise TargetError(f"Expected {len(self.source_points)} images, got {len(images)}.")
        return images

    def value(self, images: np.ndarray) -> float:
        images = self._check(images)
        sq = ((images[:, None, :] - self.target_points[None, :, :]) ** 2).sum(axis=-1)
        return 0.5 * float(np.sum(self.weights * sq))

    def derivative_weights(self, images: np.ndarray) -> np.ndarray:
        """r_i = Phi(xi_i) - sum_j P_ij y_j."""
        return self._check(images) - self.barycenters()

    def frechet(self, images: np.ndarray, directions: np.ndarray) -> float:
        directions = self._check(directions)
        return float(np.sum(self.derivative_weights(images) * directions))

    def matched_error(self, images: np.ndarray) -> float:
        """Mean distance between images and their barycentric targets."""
        return float(np.linalg.norm(self.derivative_weights(images), axis=1).mean())
