"""Evaluation, Jacobian penalty, gradients and bijectivity verdicts for compositional maps."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.spatial import cKDTree

from diffeoreg.compositional.DisplacementModel import DisplacementModel
from diffeoreg.errors import DomainError
from diffeoreg.targets.Target import Target
from diffeoreg.vectorflow.sensitivity import GradientResult

logger = logging.getLogger(__name__)

DEFAULT_THRESHOLD = 0.01
DEFAULT_MARGIN = 1e-6


def evaluate_cm(model: DisplacementModel, points: np.ndarray) -> np.ndarray:
    """xi + sum_i a_i phi_i(xi) for points in the closed polytope."""
    return model.map_polytope(points)


def evaluate_cm_curved(model: DisplacementModel, points: np.ndarray) -> np.ndarray:
    """Psi(N_p(Psi^-1(x))) for points of the curved domain."""
    return model.map_curved(points)


def _det(matrices: np.ndarray) -> np.ndarray:
    return matrices[:, 0, 0] * matrices[:, 1, 1] - matrices[:, 0, 1] * matrices[:, 1, 0]


def _cofactor(matrices: np.ndarray) -> np.ndarray:
    """d det(A) / dA for 2x2 A = [[a, b], [c, d]] is [[d, -c], [-b, a]]."""
    cof = np.empty_like(matrices)
    cof[:, 0, 0] = matrices[:, 1, 1]
    cof[:, 0, 1] = -matrices[:, 1, 0]
    cof[:, 1, 0] = -matrices[:, 0, 1]
    cof[:, 1, 1] = matrices[:, 0, 0]
    return cof


def jacobian_field(model: DisplacementModel, points: np.ndarray) -> np.ndarray:
    """det(I + sum_i a_i grad phi_i) at polytope points."""
    return _det(model.polytope_gradient(np.atleast_2d(points)))


@dataclass(frozen=True, eq=False)
class PenaltyResult:
    value: float
    gradient: np.ndarray
    min_jacobian: float


def penalty(model: DisplacementModel, points: np.ndarray, threshold: float = DEFAULT_THRESHOLD) -> PenaltyResult:
    """
    f_pen(a) = (1/Q) sum_q max(0, eps_J - J_q(a))^2 and its coefficient gradient.

    The gradient uses the cofactor form of d det/dA, which stays defined when
    J_q vanishes.
    """
    if threshold <= 0:
        raise ValueError(f"Penalty threshold must be positive, got {threshold}.")
    points = np.atleast_2d(points)
    A = model.polytope_gradient(points)
    J = _det(A)
    hinge = np.maximum(0.0, threshold - J)
    Q = len(points)
    value = float(np.sum(hinge**2) / Q)
    if not np.any(hinge):
        return PenaltyResult(value, np.zeros(model.size), float(J.min(initial=np.inf)))
    member_grads = model.basis.evaluate_grad(points)
    dJ = np.einsum("prc,mprc->mp", _cofactor(A), member_grads)
    gradient = -2.0 / Q * (dJ @ hinge)
    return PenaltyResult(value, gradient, float(J.min()))


def cm_target_gradient(model: DisplacementModel, target: Target) -> GradientResult:
    """dE/da_i = Df[N(a)](dN/da_i), contracted through the target's derivative weights."""
    control = target.control_points
    images = model.apply(control)
    weights = target.derivative_weights(images)
    gradient = np.einsum("pi,pmi->m", weights, model.sensitivities(control))
    return GradientResult(target.value(images), gradient, images)


class Verdict(str, Enum):
    BIJECTIVE = "bijective"
    VIOLATED = "violated"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True, eq=False)
class BijectivityReport:
    verdict: Verdict
    min_jacobian: float
    location: np.ndarray
    sample_count: int

    def to_dict(self) -> dict[str, object]:
        return {
            "verdict": self.verdict.value,
            "min_jacobian": self.min_jacobian,
            "location": [float(x) for x in self.location],
            "sample_count": self.sample_count,
        }


def bijectivity_check(
    model: DisplacementModel,
    density: int = 101,
    extra_points: np.ndarray | None = None,
    margin: float = DEFAULT_MARGIN,
) -> BijectivityReport:
    """
    Sampled verdict on min J over a dense polytope grid plus optional extra
    points (e.g. quadrature nodes): bijective above `margin`, violated at or
    below zero, inconclusive in between.
    """
    samples = model.polytope.grid(density)
    if extra_points is not None and len(extra_points):
        samples = np.vstack([samples, np.atleast_2d(extra_points)])
    J = jacobian_field(model, samples)
    worst = int(np.argmin(J))
    min_j = float(J[worst])
    if min_j > margin:
        verdict = Verdict.BIJECTIVE
    elif min_j <= 0.0:
        verdict = Verdict.VIOLATED
    else:
        verdict = Verdict.INCONCLUSIVE
        logger.warning("Bijectivity inconclusive: min J = %.3g is within the margin %.1g.", min_j, margin)
    return BijectivityReport(verdict, min_j, samples[worst].copy(), len(samples))


@dataclass(frozen=True)
class FoldReport:
    positive_cells: int
    negative_cells: int
    min_signed_area: float
    min_pair_distance: float

    @property
    def has_fold(self) -> bool:
        return self.positive_cells > 0 and self.negative_cells > 0


def detect_folds(model: DisplacementModel, density: int = 100) -> FoldReport:
    """
    Map a structured density x density grid of the polytope's bounding box and
    inspect the signed areas of the image triangles, plus the smallest
    distance between two image points.
    """
    bounds = model.polytope.rectangle_bounds()
    if bounds is None:
        raise DomainError("Fold detection runs on rectangular polytopes.")
    x_min, x_max, y_min, y_max = bounds
    xs = np.linspace(x_min, x_max, density)
    ys = np.linspace(y_min, y_max, density)
    grid = np.stack(np.meshgrid(xs, ys, indexing="xy"), axis=-1).reshape(-1, 2)
    images = model.map_polytope(grid).reshape(density, density, 2)

    a = images[:-1, :-1]
    b = images[:-1, 1:]
    c = images[1:, 1:]
    d = images[1:, :-1]

    def signed(p: np.ndarray, q: np.ndarray, r: np.ndarray) -> np.ndarray:
        e1 = q - p
        e2 = r - p
        return 0.5 * (e1[..., 0] * e2[..., 1] - e1[..., 1] * e2[..., 0])

    areas = np.concatenate([signed(a, b, c).ravel(), signed(a, c, d).ravel()])
    distances, _ = cKDTree(images.reshape(-1, 2)).query(images.reshape(-1, 2), k=2)
    return FoldReport(
        positive_cells=int(np.sum(areas > 0)),
        negative_cells=int(np.sum(areas < 0)),
        min_signed_area=float(areas.min()),
        min_pair_distance=float(distances[:, 1].min()),
    )
