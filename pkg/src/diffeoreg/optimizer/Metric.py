"""Factorised SPD metric used to precondition coefficient gradients."""

from __future__ import annotations

import logging

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from diffeoreg.basis.gram import GramMatrix
from diffeoreg.errors import OptimizerError

logger = logging.getLogger(__name__)


class Metric:
    """
    Holds the Cholesky factor of H so that H^-1 g is a pair of triangular
    solves. The factor is computed once, at construction.
    """

    def __init__(self, matrix: np.ndarray | GramMatrix, name: str | None = None) -> None:
        if isinstance(matrix, GramMatrix):
            name = name or matrix.form_tag
            matrix = matrix.entries
        matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
        if matrix.shape[0] != matrix.shape[1]:
            raise OptimizerError(f"Metric must be square, got shape {matrix.shape}.")
        if not np.allclose(matrix, matrix.T, rtol=1e-12, atol=1e-14 * max(1.0, np.abs(matrix).max())):
            raise OptimizerError("Metric must be symmetric.")
        try:
            self._factor = cho_factor(matrix, lower=True)
        except LinAlgError as exc:
            raise OptimizerError(f"Metric {name or ''} is not positive definite: {exc}") from exc
        self.matrix = matrix
        self.name = name or "custom"

    @classmethod
    def identity(cls, size: int) -> Metric:
        return cls(np.eye(size), name="identity")

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    def solve(self, gradient: np.ndarray) -> np.ndarray:
        """H^-1 g without forming the inverse."""
        gradient = np.asarray(gradient, dtype=float)
        if gradient.shape[0] != self.size:
            raise OptimizerError(f"Gradient has {gradient.shape[0]} entries, metric is {self.size}x{self.size}.")
        return cho_solve(self._factor, gradient)

    def dual_norm(self, gradient: np.ndarray) -> float:
        """sqrt(g^T H^-1 g)."""
        return float(np.sqrt(max(float(gradient @ self.solve(gradient)), 0.0)))

    def __repr__(self) -> str:
        return f"Metric(name={self.name!r}, size={self.size})"
