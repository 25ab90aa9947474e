"""Compositional maps: identity plus tangential displacements, optionally conjugated by Psi."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from diffeoreg.basis.BasisSet import BasisKind, BasisSet
from diffeoreg.errors import BasisError, DomainError
from diffeoreg.geometry.CurvedMap import CurvedMap
from diffeoreg.geometry.PolygonalDomain import PolygonalDomain

logger = logging.getLogger(__name__)

CLOSURE_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class DisplacementModel:
    """
    N_p(xi; a) = xi + sum_i a_i phi_i(xi) on the polytope, and
    Psi(N_p(Psi^-1(x); a)) on the curved domain when `curved_map` is set.
    """

    basis: BasisSet
    coefficients: np.ndarray
    curved_map: CurvedMap | None = None

    def __post_init__(self) -> None:
        if self.basis.kind is not BasisKind.SPATIAL:
            raise BasisError("Compositional maps need a spatial basis.")
        coefficients = np.asarray(self.coefficients, dtype=float).reshape(-1)
        if coefficients.shape[0] != self.basis.size:
            raise BasisError(f"Displacement model needs {self.basis.size} coefficients, got {coefficients.shape[0]}.")
        object.__setattr__(self, "coefficients", coefficients)

    @classmethod
    def zero(cls, basis: BasisSet, curved_map: CurvedMap | None = None) -> DisplacementModel:
        return cls(basis, np.zeros(basis.size), curved_map)

    @property
    def polytope(self) -> PolygonalDomain:
        return self.basis.domain

    @property
    def size(self) -> int:
        return self.basis.size

    def with_coefficients(self, coefficients: np.ndarray) -> DisplacementModel:
        return DisplacementModel(self.basis, coefficients, self.curved_map)

    def _require_closure(self, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        outside = self.polytope.outside_distance(points)
        if len(outside) and outside.max() > CLOSURE_TOL:
            bad = int(np.argmax(outside))
            raise DomainError(
                f"Point ({points[bad, 0]:.6g}, {points[bad, 1]:.6g}) lies {outside[bad]:.3g} outside the polytope."
            )
        return points

    def displacement(self, points: np.ndarray) -> np.ndarray:
        return self.basis.combine(self.coefficients, points)

    def map_polytope(self, points: np.ndarray) -> np.ndarray:
        points = self._require_closure(points)
        return points + self.displacement(points)

    def polytope_gradient(self, points: np.ndarray) -> np.ndarray:
        """I + sum_i a_i grad phi_i, shape (P, 2, 2)."""
        return np.eye(2)[None] + self.basis.combine_grad(self.coefficients, points)

    def reference_points(self, points: np.ndarray) -> np.ndarray:
        """Psi^-1(x) on curved domains, the points themselves otherwise."""
        if self.curved_map is None:
            return self._require_closure(points)
        return self._require_closure(self.curved_map.apply_inverse(points))

    def map_curved(self, points: np.ndarray) -> np.ndarray:
        if self.curved_map is None:
            raise DomainError("Curved evaluation needs a curved map.")
        reference = self.reference_points(points)
        return self.curved_map.apply(reference + self.displacement(reference))

    def apply(self, points: np.ndarray) -> np.ndarray:
        """The registration map on its physical domain."""
        return self.map_polytope(points) if self.curved_map is None else self.map_curved(points)

    def sensitivities(self, points: np.ndarray) -> np.ndarray:
        """
        dN/da_i at the physical points, shape (P, M, 2): phi_i(xi) on the
        polytope, grad Psi(N_p(xi')) phi_i(xi') with xi' = Psi^-1(x) otherwise.
        """
        reference = self.reference_points(points)
        members = np.transpose(self.basis.evaluate(reference), (1, 0, 2))
        if self.curved_map is None:
            return members
        outer = self.curved_map.gradient(reference + self.displacement(reference))
        return np.einsum("pij,pmj->pmi", outer, members)
