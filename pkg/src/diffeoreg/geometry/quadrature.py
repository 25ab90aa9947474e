"""Symmetric triangle rules and Gauss-Legendre rules on facets."""

from __future__ import annotations

import logging
from functools import lru_cache

import numpy as np

from diffeoreg.errors import QuadratureError
from diffeoreg.geometry.PolygonalDomain import Facet
from diffeoreg.geometry.Triangulation import Triangulation

logger = logging.getLogger(__name__)

SYMMETRIC_ORDERS = (1, 2, 3, 4, 5)
MAX_ORDER = 40

_SQRT15 = np.sqrt(15.0)


def _orbit3(a: float) -> list[tuple[float, float, float]]:
    b = 1.0 - 2.0 * a
    return [(a, a, b), (a, b, a), (b, a, a)]


def _collapsed_rule(order: int) -> tuple[np.ndarray, np.ndarray]:
    """
    Product rule on the square mapped by (u, v) -> (u, (1 - u) v).

    The Jacobian 1 - u raises the degree in u by one, so n = (order + 3) // 2
    Gauss points per direction integrate total degree <= order exactly.
    """
    n = (order + 3) // 2
    nodes, weights = np.polynomial.legendre.leggauss(n)
    s, w = 0.5 * (nodes + 1.0), 0.5 * weights
    u, v = np.meshgrid(s, s, indexing="ij")
    wu, wv = np.meshgrid(w, w, indexing="ij")
    x, y = u.ravel(), ((1.0 - u) * v).ravel()
    # the reference triangle has area 1/2; weights are normalised to sum to 1
    product = 2.0 * (wu * wv * (1.0 - u)).ravel()
    return np.column_stack([1.0 - x - y, x, y]), product


@lru_cache(maxsize=None)
def reference_rule(order: int) -> tuple[np.ndarray, np.ndarray]:
    """
    Barycentric points (Q, 3) and weights (Q,) summing to 1 for a rule that is
    exact for total degree <= order. Orders 3 and 4 share the positive
    six-point rule; order 5 is the seven-point rule with closed-form nodes.
    Higher orders up to MAX_ORDER use the collapsed Gauss-Legendre product rule.
    """
    if not 1 <= order <= MAX_ORDER:
        raise QuadratureError(f"Unsupported triangle quadrature order {order}; use 1..{MAX_ORDER}.")
    if order not in SYMMETRIC_ORDERS:
        return _collapsed_rule(order)
    if order == 1:
        bary = [(1 / 3, 1 / 3, 1 / 3)]
        weights = [1.0]
    elif order == 2:
        bary = _orbit3(1 / 6)
        weights = [1 / 3] * 3
    elif order in (3, 4):
        bary = _orbit3(0.44594849091596488632) + _orbit3(0.09157621350977074346)
        weights = [0.22338158967801146570] * 3 + [0.10995174365532186764] * 3
    else:
        bary = [(1 / 3, 1 / 3, 1 / 3)] + _orbit3((6 - _SQRT15) / 21) + _orbit3((6 + _SQRT15) / 21)
        weights = [9 / 40] + [(155 - _SQRT15) / 1200] * 3 + [(155 + _SQRT15) / 1200] * 3
    return np.asarray(bary, dtype=float), np.asarray(weights, dtype=float)


def quadrature(tri: Triangulation, order: int) -> tuple[np.ndarray, np.ndarray]:
    """
    Map the reference rule onto every triangle.

    Returns points (T*Q, 2) and weights (T*Q,); points are grouped by triangle in
    triangle order, so reductions over them are deterministic.
    """
    bary, ref_weights = reference_rule(order)
    corners = tri.nodes[tri.triangles]  # (T, 3, 2)
    points = np.einsum("qk,tkd->tqd", bary, corners).reshape(-1, 2)
    weights = (tri.signed_areas[:, None] * ref_weights[None, :]).reshape(-1)
    return points, weights


def integrate(values: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Contract quadrature values along their first axis with the weights."""
    return np.tensordot(weights, values, axes=(0, 0))


def facet_quadrature(facet: Facet, points_per_facet: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Gauss-Legendre rule on one facet.

    Returns physical points (P, 2), weights (P,) summing to the facet length and
    the facet parameter s in [0, 1] of each point.
    """
    nodes, weights = np.polynomial.legendre.leggauss(points_per_facet)
    s = 0.5 * (nodes + 1.0)
    points = facet.start[None, :] + s[:, None] * (facet.end - facet.start)[None, :]
    return points, 0.5 * weights * facet.length, s
