"""Analytic bijections from a reference polytope onto a curved domain."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np

from diffeoreg.errors import DomainError

logger = logging.getLogger(__name__)

PointMap = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class CurvedMap:
    """
    Psi: Omega_p -> Omega with a user-supplied analytic inverse.

    All callables act on (P, 2) arrays; `forward_gradient` returns (P, 2, 2)
    with entry [r, c] = d Psi_r / d xi_c.
    """

    forward: PointMap
    inverse: PointMap
    forward_gradient: Callable[[np.ndarray], np.ndarray]
    name: str = "custom"

    def apply(self, points: np.ndarray) -> np.ndarray:
        return np.asarray(self.forward(np.atleast_2d(points)), dtype=float)

    def apply_inverse(self, points: np.ndarray) -> np.ndarray:
        try:
            result = np.asarray(self.inverse(np.atleast_2d(points)), dtype=float)
        except (ValueError, FloatingPointError, ZeroDivisionError) as exc:
            raise DomainError(f"Inverse of curved map '{self.name}' failed: {exc}") from exc
        if not np.all(np.isfinite(result)):
            raise DomainError(f"Inverse of curved map '{self.name}' produced non-finite values.")
        return result

    def gradient(self, points: np.ndarray) -> np.ndarray:
        return np.asarray(self.forward_gradient(np.atleast_2d(points)), dtype=float)

    def round_trip_error(self, samples: np.ndarray) -> float:
        """Max |inverse(forward(xi)) - xi| over the samples."""
        samples = np.atleast_2d(samples)
        return float(np.abs(self.apply_inverse(self.apply(samples)) - samples).max())

    @classmethod
    def identity(cls) -> CurvedMap:
        return cls(
            forward=lambda x: np.array(x, dtype=float),
            inverse=lambda x: np.array(x, dtype=float),
            forward_gradient=lambda x: np.broadcast_to(np.eye(2), (len(x), 2, 2)).copy(),
            name="identity",
        )

    @classmethod
    def affine(cls, matrix: np.ndarray, offset: np.ndarray) -> CurvedMap:
        """x -> B x + c with B invertible."""
        B = np.asarray(matrix, dtype=float).reshape(2, 2)
        c = np.asarray(offset, dtype=float).reshape(2)
        if abs(np.linalg.det(B)) < 1e-14:
            raise DomainError("Affine curved map needs an invertible matrix.")
        B_inv = np.linalg.inv(B)
        return cls(
            forward=lambda x: x @ B.T + c,
            inverse=lambda y: (y - c) @ B_inv.T,
            forward_gradient=lambda x: np.broadcast_to(B, (len(x), 2, 2)).copy(),
            name="affine",
        )

    @classmethod
    def sine_bulge(cls, amplitude: float) -> CurvedMap:
        """(xi1, xi2) -> (xi1, xi2 + amplitude * sin(pi xi1)); bends horizontal facets of the unit square."""
        alpha = float(amplitude)

        def forward(x: np.ndarray) -> np.ndarray:
            return np.column_stack([x[:, 0], x[:, 1] + alpha * np.sin(np.pi * x[:, 0])])

        def inverse(y: np.ndarray) -> np.ndarray:
            return np.column_stack([y[:, 0], y[:, 1] - alpha * np.sin(np.pi * y[:, 0])])

        def gradient(x: np.ndarray) -> np.ndarray:
            grad = np.zeros((len(x), 2, 2))
            grad[:, 0, 0] = 1.0
            grad[:, 1, 1] = 1.0
            grad[:, 1, 0] = alpha * np.pi * np.cos(np.pi * x[:, 0])
            return grad

        return cls(forward=forward, inverse=inverse, forward_gradient=gradient, name="sine_bulge")


def curved_map_from_tag(tag: str, params: dict[str, float] | None = None) -> CurvedMap:
    """Build a library curved map from a config tag."""
    params = dict(params or {})
    if tag == "identity":
        return CurvedMap.identity()
    if tag == "sine_bulge":
        return CurvedMap.sine_bulge(params.get("amplitude", 0.1))
    if tag == "affine":
        matrix = np.array(
            [[params.get("b11", 1.0), params.get("b12", 0.0)], [params.get("b21", 0.0), params.get("b22", 1.0)]]
        )
        return CurvedMap.affine(matrix, np.array([params.get("c1", 0.0), params.get("c2", 0.0)]))
    raise DomainError(f"Unknown curved map tag '{tag}'.")
