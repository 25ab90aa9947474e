"""Time-dependent velocity fields v(x, t; a) = sum_i a_i phi_i(x, t)."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Protocol

import numpy as np

from diffeoreg.basis.BasisSet import BasisKind, BasisSet
from diffeoreg.basis.SpaceTimeBasis import tensorize_time
from diffeoreg.errors import BasisError
from diffeoreg.geometry.PolygonalDomain import PolygonalDomain

logger = logging.getLogger(__name__)


class VelocityField(Protocol):
    domain: PolygonalDomain

    def velocity(self, points: np.ndarray, t: float) -> np.ndarray: ...

    def velocity_grad(self, points: np.ndarray, t: float) -> np.ndarray: ...


@dataclass(frozen=True, eq=False)
class VelocityModel:
    """Coefficients over a space-time basis; spatial bases are lifted with temporal degree 0."""

    basis: BasisSet
    coefficients: np.ndarray

    def __post_init__(self) -> None:
        basis = self.basis
        if basis.kind is BasisKind.SPATIAL:
            basis = tensorize_time(basis, 0)
        coefficients = np.asarray(self.coefficients, dtype=float).reshape(-1)
        if coefficients.shape[0] != basis.size:
            raise BasisError(f"Velocity model needs {basis.size} coefficients, got {coefficients.shape[0]}.")
        object.__setattr__(self, "basis", basis)
        object.__setattr__(self, "coefficients", coefficients)

    @classmethod
    def zero(cls, basis: BasisSet) -> VelocityModel:
        size = basis.size if basis.kind is BasisKind.SPACE_TIME else tensorize_time(basis, 0).size
        return cls(basis, np.zeros(size))

    @property
    def domain(self) -> PolygonalDomain:
        return self.basis.domain

    @property
    def size(self) -> int:
        return self.basis.size

    def with_coefficients(self, coefficients: np.ndarray) -> VelocityModel:
        return VelocityModel(self.basis, coefficients)

    def velocity(self, points: np.ndarray, t: float) -> np.ndarray:
        return self.basis.combine(self.coefficients, points, t)

    def velocity_grad(self, points: np.ndarray, t: float) -> np.ndarray:
        return self.basis.combine_grad(self.coefficients, points, t)


@dataclass(frozen=True, eq=False)
class ReversedVelocity:
    """The field -v(x, 1 - t), whose time-1 flow inverts that of v."""

    forward: VelocityField

    @property
    def domain(self) -> PolygonalDomain:
        return self.forward.domain

    def velocity(self, points: np.ndarray, t: float) -> np.ndarray:
        return -self.forward.velocity(points, 1.0 - t)

    def velocity_grad(self, points: np.ndarray, t: float) -> np.ndarray:
        return -self.forward.velocity_grad(points, 1.0 - t)


def sample_sup_norm(
    v: VelocityField,
    w: VelocityField | None,
    points: np.ndarray,
    times: np.ndarray,
) -> float:
    """max over the samples of |v - w| (or |v| when w is None)."""
    best = 0.0
    for t in times:
        diff = v.velocity(points, float(t))
        if w is not None:
            diff = diff - w.velocity(points, float(t))
        best = max(best, float(np.linalg.norm(diff, axis=1).max(initial=0.0)))
    return best


def lipschitz_estimate(v: VelocityField, points: np.ndarray, times: np.ndarray) -> float:
    """max over the samples of the spectral norm of grad v."""
    best = 0.0
    for t in times:
        grads = v.velocity_grad(points, float(t))
        best = max(best, float(np.linalg.norm(grads, ord=2, axis=(1, 2)).max(initial=0.0)))
    return best
