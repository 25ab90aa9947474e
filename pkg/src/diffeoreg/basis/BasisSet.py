"""Common interface of finite families of boundary-tangent vector fields."""

from __future__ import annotations

import logging
from abc import ABC, abstractmethod
from enum import Enum

import numpy as np

from diffeoreg.errors import BasisError
from diffeoreg.geometry.PolygonalDomain import PolygonalDomain

logger = logging.getLogger(__name__)


class BasisKind(str, Enum):
    SPATIAL = "spatial"
    SPACE_TIME = "space-time"


class BasisSet(ABC):
    """
    A family of M vector fields phi_i(x) or phi_i(x, t).

    Batched evaluation returns arrays indexed as (member, point, ...). Gradient
    entries follow [..., r, c] = d phi_r / d x_c.
    """

    kind: BasisKind
    domain: PolygonalDomain

    @property
    @abstractmethod
    def size(self) -> int:
        """Number of members M."""

    @abstractmethod
    def evaluate(self, points: np.ndarray, t: float | None = None) -> np.ndarray:
        """Values of every member, shape (M, P, 2)."""

    @abstractmethod
    def evaluate_grad(self, points: np.ndarray, t: float | None = None) -> np.ndarray:
        """Spatial gradients of every member, shape (M, P, 2, 2)."""

    @abstractmethod
    def combine(self, coefficients: np.ndarray, points: np.ndarray, t: float | None = None) -> np.ndarray:
        """sum_i a_i phi_i at the points, shape (P, 2)."""

    @abstractmethod
    def combine_grad(self, coefficients: np.ndarray, points: np.ndarray, t: float | None = None) -> np.ndarray:
        """sum_i a_i grad phi_i at the points, shape (P, 2, 2)."""

    @property
    def field_degree(self) -> int | None:
        """Maximal total polynomial degree of a member, or None for non-polynomial families."""
        return None

    def __len__(self) -> int:
        return self.size

    def _check_index(self, index: int) -> None:
        if not 0 <= index < self.size:
            raise IndexError(f"basis index {index} out of range for {self.size} members")

    def _check_coefficients(self, coefficients: np.ndarray) -> np.ndarray:
        coefficients = np.asarray(coefficients, dtype=float).reshape(-1)
        if coefficients.shape[0] != self.size:
            raise BasisError(f"Expected {self.size} coefficients, got {coefficients.shape[0]}.")
        return coefficients

    def eval(self, index: int, x: np.ndarray, t: float | None = None) -> np.ndarray:
        """Value of member `index` at one point."""
        self._check_index(index)
        return self.evaluate(np.atleast_2d(np.asarray(x, dtype=float)), t)[index, 0]

    def eval_grad(self, index: int, x: np.ndarray, t: float | None = None) -> np.ndarray:
        """2x2 spatial gradient of member `index` at one point."""
        self._check_index(index)
        return self.evaluate_grad(np.atleast_2d(np.asarray(x, dtype=float)), t)[index, 0]
