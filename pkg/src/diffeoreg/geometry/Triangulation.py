"""Conforming triangulations of polygonal domains."""

from __future__ import annotations

import logging
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping

import numpy as np

from diffeoreg.errors import DomainError
from diffeoreg.geometry.PolygonalDomain import PolygonalDomain, _signed_area

logger = logging.getLogger(__name__)

AREA_RTOL = 1e-12


@dataclass(frozen=True, eq=False)
class Triangulation:
    """
    Nodes, positively oriented triangles and per-node facet membership.

    `boundary_node_flags` maps a node index to the set of facet ids it lies on;
    corner nodes carry two (or more) facets. When a domain is given, the
    triangle areas must add up to the domain area.
    """

    nodes: np.ndarray
    triangles: np.ndarray
    boundary_node_flags: Mapping[int, frozenset[int]] = field(default_factory=dict)
    domain: PolygonalDomain | None = None

    def __post_init__(self) -> None:
        nodes = np.asarray(self.nodes, dtype=float).reshape(-1, 2)
        triangles = np.asarray(self.triangles, dtype=int).reshape(-1, 3)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "triangles", triangles)
        object.__setattr__(
            self,
            "boundary_node_flags",
            MappingProxyType({int(k): frozenset(v) for k, v in self.boundary_node_flags.items()}),
        )
        if triangles.size and (triangles.min() < 0 or triangles.max() >= len(nodes)):
            raise DomainError("Triangle references a node index that does not exist.")
        areas = self.signed_areas
        if np.any(areas <= 0.0):
            bad = int(np.argmin(areas))
            raise DomainError(f"Triangle {bad} is not positively oriented (area {areas[bad]:.3g}).")
        edge_counts = Counter(self._edges())
        overused = [edge for edge, count in edge_counts.items() if count > 2]
        if overused:
            raise DomainError(f"Non-conforming mesh: edge {overused[0]} shared by more than two triangles.")
        if self.domain is not None:
            expected = self.domain.area
            if abs(areas.sum() - expected) > AREA_RTOL * expected:
                raise DomainError(
                    f"Triangulation area {areas.sum():.15g} does not match domain area {expected:.15g}."
                )

    @property
    def signed_areas(self) -> np.ndarray:
        p0 = self.nodes[self.triangles[:, 0]]
        p1 = self.nodes[self.triangles[:, 1]]
        p2 = self.nodes[self.triangles[:, 2]]
        e1 = p1 - p0
        e2 = p2 - p0
        return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])

    @property
    def area(self) -> float:
        return float(self.signed_areas.sum())

    def _edges(self) -> list[tuple[int, int]]:
        edges: list[tuple[int, int]] = []
        for a, b, c in self.triangles:
            for u, v in ((a, b), (b, c), (c, a)):
                edges.append((min(u, v), max(u, v)))
        return edges

    def boundary_edges(self) -> list[tuple[int, int]]:
        """Directed boundary edges, oriented so the mesh lies on their left."""
        counts = Counter(self._edges())
        directed: list[tuple[int, int]] = []
        for a, b, c in self.triangles:
            for u, v in ((a, b), (b, c), (c, a)):
                if counts[(min(u, v), max(u, v))] == 1:
                    directed.append((int(u), int(v)))
        return directed

    def boundary_loops(self) -> list[np.ndarray]:
        """Chain boundary edges into closed loops of node indices (collinear nodes kept)."""
        successor: dict[int, int] = {}
        for u, v in self.boundary_edges():
            if u in successor:
                raise DomainError(f"Boundary node {u} is pinched (two outgoing boundary edges).")
            successor[u] = v
        loops: list[np.ndarray] = []
        remaining = set(successor)
        while remaining:
            start = min(remaining)
            loop = [start]
            node = successor[start]
            while node != start:
                loop.append(node)
                node = successor[node]
            remaining.difference_update(loop)
            loops.append(np.asarray(loop, dtype=int))
        return loops

    def to_domain(self) -> PolygonalDomain:
        """Rebuild the polygon from the mesh boundary, dropping collinear boundary nodes."""
        polygons = [_drop_collinear(self.nodes[loop]) for loop in self.boundary_loops()]
        outer_index = int(np.argmax([_signed_area(poly) for poly in polygons]))
        outer = polygons[outer_index]
        holes = tuple(poly for i, poly in enumerate(polygons) if i != outer_index)
        return PolygonalDomain(outer, holes)

    def facet_nodes(self) -> dict[int, list[int]]:
        """Invert `boundary_node_flags`: facet id -> node indices."""
        inverse: dict[int, list[int]] = defaultdict(list)
        for node, facet_ids in self.boundary_node_flags.items():
            for facet_id in facet_ids:
                inverse[facet_id].append(node)
        return dict(inverse)

    @classmethod
    def structured_rectangle(cls, domain: PolygonalDomain, nx: int, ny: int | None = None) -> Triangulation:
        """Split an nx-by-ny grid of the rectangle into 2*nx*ny triangles."""
        bounds = domain.rectangle_bounds()
        if bounds is None:
            raise DomainError("Structured triangulation needs an axis-aligned rectangle.")
        ny = nx if ny is None else ny
        if nx < 1 or ny < 1:
            raise DomainError("nx and ny must be at least 1.")
        x_min, x_max, y_min, y_max = bounds
        xs = np.linspace(x_min, x_max, nx + 1)
        ys = np.linspace(y_min, y_max, ny + 1)
        nodes = np.array([[x, y] for y in ys for x in xs])

        def node_id(i: int, j: int) -> int:
            return j * (nx + 1) + i

        triangles: list[tuple[int, int, int]] = []
        for j in range(ny):
            for i in range(nx):
                a, b = node_id(i, j), node_id(i + 1, j)
                c, d = node_id(i + 1, j + 1), node_id(i, j + 1)
                triangles.append((a, b, c))
                triangles.append((a, c, d))

        # facet ids follow PolygonalDomain.rectangle: bottom, right, top, left
        flags: dict[int, set[int]] = defaultdict(set)
        for i in range(nx + 1):
            flags[node_id(i, 0)].add(0)
            flags[node_id(i, ny)].add(2)
        for j in range(ny + 1):
            flags[node_id(nx, j)].add(1)
            flags[node_id(0, j)].add(3)
        return cls(nodes, np.asarray(triangles), {k: frozenset(v) for k, v in flags.items()}, domain)


def _drop_collinear(polygon: np.ndarray) -> np.ndarray:
    prev = np.roll(polygon, 1, axis=0)
    nxt = np.roll(polygon, -1, axis=0)
    e1 = polygon - prev
    e2 = nxt - polygon
    cross = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    scale = np.linalg.norm(e1, axis=1) * np.linalg.norm(e2, axis=1)
    keep = np.abs(cross) > 1e-12 * scale
    return polygon[keep]
