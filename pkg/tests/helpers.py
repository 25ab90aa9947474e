import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from diffeoreg.basis.SpaceTimeBasis import tensorize_time
from diffeoreg.basis.TangentialPolynomialBasis import TangentialPolynomialBasis, build_tangential_polynomial_basis
from diffeoreg.compositional.DisplacementModel import DisplacementModel
from diffeoreg.geometry.PolygonalDomain import PolygonalDomain
from diffeoreg.geometry.Triangulation import Triangulation
from diffeoreg.vectorflow.VelocityModel import VelocityModel


def unit_square() -> PolygonalDomain:
    return PolygonalDomain.unit_square()


def unit_mesh(n: int = 4) -> Triangulation:
    return Triangulation.structured_rectangle(unit_square(), n)


def bubble_basis() -> TangentialPolynomialBasis:
    """The single unnormalised field x1 (1 - x1) e1 on the unit square."""
    return build_tangential_polynomial_basis(unit_square(), 0, normalize=False).subset([0])


def logistic_model(amplitude: float = 1.0) -> VelocityModel:
    """v(x) = amplitude * x1 (1 - x1) e1, whose flow is the logistic map in x1."""
    return VelocityModel(bubble_basis(), [amplitude])


def logistic_end(x1: np.ndarray, amplitude: float = 1.0, t: float = 1.0) -> np.ndarray:
    growth = np.exp(amplitude * t)
    return x1 * growth / (1.0 - x1 + x1 * growth)


def bubble_displacement(amplitude: float) -> DisplacementModel:
    return DisplacementModel(bubble_basis(), [amplitude])


def random_velocity(seed: int = 0, degree: int = 1, temporal_degree: int = 1, amplitude: float = 0.5) -> VelocityModel:
    spatial = build_tangential_polynomial_basis(unit_square(), degree)
    basis = tensorize_time(spatial, temporal_degree)
    rng = np.random.default_rng(seed)
    return VelocityModel(basis, amplitude * rng.standard_normal(basis.size) / np.sqrt(basis.size))


def write_config(directory: Path, data: dict[str, Any], name: str = "run.json") -> Path:
    path = directory / name
    path.write_text(json.dumps(data, indent=2), encoding="utf-8")
    return path


def _quartic_bubble(s: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """g = s^2 (1 - s)^2 and its first two derivatives."""
    return s**2 * (1.0 - s) ** 2, 2.0 * s * (1.0 - s) * (1.0 - 2.0 * s), 2.0 - 12.0 * s + 12.0 * s**2


@dataclass(frozen=True)
class StreamFunctionVelocity:
    """v = (d psi / dx2, -d psi / dx1) for psi = scale g(x1) g(x2) (1 + alpha x1 + beta x2); divergence free."""

    scale: float = 1.0
    alpha: float = 0.0
    beta: float = 0.0
    domain: PolygonalDomain = field(default_factory=PolygonalDomain.unit_square)

    def _parts(self, points: np.ndarray) -> tuple[np.ndarray, ...]:
        points = np.atleast_2d(points)
        gx, dgx, ddgx = _quartic_bubble(points[:, 0])
        gy, dgy, ddgy = _quartic_bubble(points[:, 1])
        affine = 1.0 + self.alpha * points[:, 0] + self.beta * points[:, 1]
        return gx, dgx, ddgx, gy, dgy, ddgy, affine

    def velocity(self, points: np.ndarray, t: float) -> np.ndarray:
        gx, dgx, _, gy, dgy, _, affine = self._parts(points)
        psi_1 = dgx * gy * affine + gx * gy * self.alpha
        psi_2 = gx * dgy * affine + gx * gy * self.beta
        return self.scale * np.column_stack([psi_2, -psi_1])

    def velocity_grad(self, points: np.ndarray, t: float) -> np.ndarray:
        gx, dgx, ddgx, gy, dgy, ddgy, affine = self._parts(points)
        psi_11 = ddgx * gy * affine + 2.0 * dgx * gy * self.alpha
        psi_22 = gx * ddgy * affine + 2.0 * gx * dgy * self.beta
        psi_12 = dgx * dgy * affine + dgx * gy * self.beta + gx * dgy * self.alpha
        grads = np.empty((len(gx), 2, 2))
        grads[:, 0, 0] = psi_12
        grads[:, 0, 1] = psi_22
        grads[:, 1, 0] = -psi_11
        grads[:, 1, 1] = -psi_12
        return self.scale * grads
