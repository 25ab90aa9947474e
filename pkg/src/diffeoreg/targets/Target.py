"""Interface shared by the distributed and pointwise targets."""

from __future__ import annotations

from typing import Protocol

import numpy as np


class Target(Protocol):
    """
    A target functional f(Phi) that only sees Phi at its control points.

    `derivative_weights(images)` returns r (Q, 2) with
    Df[Phi](h) = sum_q r_q . h(xi_q); adjoint terminal conditions and the
    compositional chain rule are both built on it.
    """

    @property
    def control_points(self) -> np.ndarray: ...

    def value(self, images: np.ndarray) -> float: ...

    def derivative_weights(self, images: np.ndarray) -> np.ndarray: ...

    def frechet(self, images: np.ndarray, directions: np.ndarray) -> float: ...
