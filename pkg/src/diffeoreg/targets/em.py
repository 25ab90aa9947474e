"""Expectation step for correspondence weights and the bandwidth schedule."""

from __future__ import annotations

import logging

import numpy as np

from diffeoreg.errors import TargetError
from diffeoreg.targets.PointwiseTarget import PointwiseTarget

logger = logging.getLogger(__name__)

SINKHORN_TOL = 1e-8
SINKHORN_MAX_ITERS = 500
ANNEAL_FACTOR = 0.92
SIGMA_FLOOR_FRACTION = 1e-3


def responsibilities(images: np.ndarray, targets: np.ndarray, sigma: float) -> np.ndarray:
    """Row-normalised Gaussian responsibilities exp(-|Phi_i - y_j|^2 / (2 sigma^2))."""
    if sigma <= 0:
        raise TargetError(f"EM bandwidth must be positive, got {sigma}.")
    sq = ((images[:, None, :] - targets[None, :, :]) ** 2).sum(axis=-1)
    kernel = np.exp(-sq / (2.0 * sigma**2))
    row_sums = kernel.sum(axis=1)
    empty = np.flatnonzero(row_sums == 0.0)
    if empty.size:
        raise TargetError(
            f"All responsibilities of source point {int(empty[0])} underflowed at sigma={sigma:.3g}; "
            "increase sigma (or start the annealing schedule from a larger value)."
        )
    return kernel / row_sums[:, None]


def _normalise(result: np.ndarray, axis: int, what: str) -> None:
    sums = result.sum(axis=axis, keepdims=True)
    empty = np.flatnonzero(sums.reshape(-1) == 0.0)
    if empty.size:
        raise TargetError(
            f"Sinkhorn cannot balance the weights: {what} {int(empty[0])} has no mass; "
            "increase sigma so every point receives some responsibility."
        )
    result /= sums


def sinkhorn(matrix: np.ndarray, tol: float = SINKHORN_TOL, max_iters: int = SINKHORN_MAX_ITERS) -> np.ndarray:
    """
    Alternate column and row normalisation until both sums are within tol of 1.

    Raises TargetError when a column (a target point no source responds to)
    or a row sums to zero.
    """
    result = np.array(matrix, dtype=float)
    deviation = np.inf
    for iteration in range(max_iters):
        _normalise(result, axis=0, what="target point")
        _normalise(result, axis=1, what="source point")
        deviation = max(
            float(np.abs(result.sum(axis=0) - 1.0).max()),
            float(np.abs(result.sum(axis=1) - 1.0).max()),
        )
        if deviation < tol:
            logger.debug("Sinkhorn converged after %d iterations.", iteration + 1)
            return result
    logger.warning("Sinkhorn stopped after %d iterations with deviation %.3g.", max_iters, deviation)
    return result


def em_update_weights(target: PointwiseTarget, images: np.ndarray, sigma: float) -> np.ndarray:
    """New correspondence matrix P for the current images."""
    images = np.atleast_2d(np.asarray(images, dtype=float))
    if images.shape != target.source_points.shape:
        raise TargetError(f"Expected {len(target.source_points)} images, got {len(images)}.")
    weights = responsibilities(images, target.target_points, sigma)
    if target.doubly_stochastic:
        if weights.shape[0] != weights.shape[1]:
            raise TargetError("Doubly-stochastic EM needs N0 == N1.")
        weights = sinkhorn(weights)
    return np.clip(weights, 0.0, 1.0)


def initial_sigma(images: np.ndarray, targets: np.ndarray) -> float:
    """Mean pairwise distance between images and target points."""
    dist = np.sqrt(((images[:, None, :] - targets[None, :, :]) ** 2).sum(axis=-1))
    return float(dist.mean())


def anneal_sigma(sigma: float, diameter: float) -> float:
    return max(ANNEAL_FACTOR * sigma, SIGMA_FLOOR_FRACTION * diameter)
