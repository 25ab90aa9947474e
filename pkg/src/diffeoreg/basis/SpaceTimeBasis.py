"""Space-time tensor products of a spatial basis with shifted Legendre polynomials."""

from __future__ import annotations

import logging

import numpy as np
from numpy.polynomial import Legendre

from diffeoreg.basis.BasisSet import BasisKind, BasisSet
from diffeoreg.errors import BasisError

logger = logging.getLogger(__name__)


class SpaceTimeBasis(BasisSet):
    """Member i*(p_t+1)+k is spatial_i(x) * L_k(t), with L_k the Legendre polynomial on [0, 1]."""

    kind = BasisKind.SPACE_TIME

    def __init__(self, spatial: BasisSet, temporal_degree: int) -> None:
        if spatial.kind is not BasisKind.SPATIAL:
            raise BasisError("Space-time tensorisation needs a spatial basis.")
        if temporal_degree < 0:
            raise BasisError(f"Temporal degree must be non-negative, got {temporal_degree}.")
        self.spatial = spatial
        self.temporal_degree = temporal_degree
        self.domain = spatial.domain
        self._legendre = [Legendre.basis(k, domain=[0.0, 1.0]) for k in range(temporal_degree + 1)]

    @property
    def size(self) -> int:
        return self.spatial.size * (self.temporal_degree + 1)

    def temporal_values(self, t: float) -> np.ndarray:
        return np.array([float(poly(t)) for poly in self._legendre])

    def spatial_coefficients(self, coefficients: np.ndarray, t: float) -> np.ndarray:
        """Contract the time factors at t: c_i(t) = sum_k a_(i,k) L_k(t)."""
        grid = self._check_coefficients(coefficients).reshape(self.spatial.size, self.temporal_degree + 1)
        return grid @ self.temporal_values(t)

    @staticmethod
    def _require_time(t: float | None) -> float:
        if t is None:
            raise BasisError("Space-time basis evaluation needs a time t.")
        return float(t)

    def evaluate(self, points: np.ndarray, t: float | None = None) -> np.ndarray:
        lk = self.temporal_values(self._require_time(t))
        spatial = self.spatial.evaluate(points)
        return (spatial[:, None] * lk[None, :, None, None]).reshape(self.size, *spatial.shape[1:])

    def evaluate_grad(self, points: np.ndarray, t: float | None = None) -> np.ndarray:
        lk = self.temporal_values(self._require_time(t))
        spatial = self.spatial.evaluate_grad(points)
        return (spatial[:, None] * lk[None, :, None, None, None]).reshape(self.size, *spatial.shape[1:])

    def combine(self, coefficients: np.ndarray, points: np.ndarray, t: float | None = None) -> np.ndarray:
        return self.spatial.combine(self.spatial_coefficients(coefficients, self._require_time(t)), points)

    def combine_grad(self, coefficients: np.ndarray, points: np.ndarray, t: float | None = None) -> np.ndarray:
        return self.spatial.combine_grad(self.spatial_coefficients(coefficients, self._require_time(t)), points)


def tensorize_time(spatial: BasisSet, temporal_degree: int) -> SpaceTimeBasis:
    basis = SpaceTimeBasis(spatial, temporal_degree)
    logger.debug("Tensorised %d spatial members with temporal degree %d.", spatial.size, temporal_degree)
    return basis
