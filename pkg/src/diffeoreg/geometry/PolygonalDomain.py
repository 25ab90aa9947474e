"""Bounded Lipschitz polygons with optional holes."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import TYPE_CHECKING, Sequence

import numpy as np

from diffeoreg.errors import DomainError

if TYPE_CHECKING:
    from diffeoreg.geometry.Triangulation import Triangulation

logger = logging.getLogger(__name__)


class PointClass(str, Enum):
    INTERIOR = "interior"
    BOUNDARY = "boundary"
    EXTERIOR = "exterior"


@dataclass(frozen=True, eq=False)
class Facet:
    """One boundary segment with its outward unit normal."""

    loop_id: int
    start: np.ndarray
    end: np.ndarray
    normal: np.ndarray

    @property
    def length(self) -> float:
        return float(np.linalg.norm(self.end - self.start))

    def sample(self, count: int) -> np.ndarray:
        """Return `count` points strictly inside the segment."""
        s = (np.arange(count) + 0.5) / count
        return self.start[None, :] + s[:, None] * (self.end - self.start)[None, :]


def _signed_area(loop: np.ndarray) -> float:
    x, y = loop[:, 0], loop[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def _segments(loop: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    return loop, np.roll(loop, -1, axis=0)


def _segments_cross(p1: np.ndarray, p2: np.ndarray, q1: np.ndarray, q2: np.ndarray) -> bool:
    """True when closed segments p1p2 and q1q2 intersect."""

    def orient(a: np.ndarray, b: np.ndarray, c: np.ndarray) -> float:
        return float((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))

    def on_segment(a: np.ndarray, b: np.ndarray, c: np.ndarray) -> bool:
        return (
            min(a[0], b[0]) - 1e-15 <= c[0] <= max(a[0], b[0]) + 1e-15
            and min(a[1], b[1]) - 1e-15 <= c[1] <= max(a[1], b[1]) + 1e-15
        )

    d1 = orient(q1, q2, p1)
    d2 = orient(q1, q2, p2)
    d3 = orient(p1, p2, q1)
    d4 = orient(p1, p2, q2)
    if ((d1 > 0 > d2) or (d1 < 0 < d2)) and ((d3 > 0 > d4) or (d3 < 0 < d4)):
        return True
    if d1 == 0 and on_segment(q1, q2, p1):
        return True
    if d2 == 0 and on_segment(q1, q2, p2):
        return True
    if d3 == 0 and on_segment(p1, p2, q1):
        return True
    if d4 == 0 and on_segment(p1, p2, q2):
        return True
    return False


def _check_simple(loop: np.ndarray, loop_id: int) -> None:
    count = len(loop)
    if count < 3:
        raise DomainError(f"Loop {loop_id} needs at least 3 vertices, got {count}.")
    if len(np.unique(np.round(loop, 14), axis=0)) != count:
        raise DomainError(f"Loop {loop_id} has repeated vertices.")
    starts, ends = _segments(loop)
    for i in range(count):
        for j in range(i + 1, count):
            # neighbouring segments share a vertex by construction
            if j == i + 1 or (i == 0 and j == count - 1):
                continue
            if _segments_cross(starts[i], ends[i], starts[j], ends[j]):
                raise DomainError(f"Loop {loop_id} self-intersects (segments {i} and {j}).")


@dataclass(frozen=True, eq=False)
class PolygonalDomain:
    """
    A bounded polygon: one counter-clockwise outer loop and clockwise hole loops.

    Loops are stored without repeating the first vertex. Facets are derived on
    construction; a facet's normal is the facet direction rotated by -90 degrees,
    which points out of the domain for CCW outer loops and into the hole for CW
    hole loops. Normals belong to facets only; corners have none.
    """

    outer_loop: np.ndarray
    hole_loops: tuple[np.ndarray, ...] = ()
    facets: tuple[Facet, ...] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        outer = np.asarray(self.outer_loop, dtype=float).reshape(-1, 2)
        holes = tuple(np.asarray(loop, dtype=float).reshape(-1, 2) for loop in self.hole_loops)
        object.__setattr__(self, "outer_loop", outer)
        object.__setattr__(self, "hole_loops", holes)

        loops = (outer, *holes)
        for loop_id, loop in enumerate(loops):
            _check_simple(loop, loop_id)
        if _signed_area(outer) <= 0.0:
            raise DomainError("Outer loop must be counter-clockwise.")
        for hole_id, hole in enumerate(holes, start=1):
            if _signed_area(hole) >= 0.0:
                raise DomainError(f"Hole loop {hole_id} must be clockwise.")
        self._check_holes(outer, holes)

        facets: list[Facet] = []
        for loop_id, loop in enumerate(loops):
            starts, ends = _segments(loop)
            for start, end in zip(starts, ends):
                direction = end - start
                normal = np.array([direction[1], -direction[0]]) / np.linalg.norm(direction)
                facets.append(Facet(loop_id, start.copy(), end.copy(), normal))
        object.__setattr__(self, "facets", tuple(facets))

    @staticmethod
    def _check_holes(outer: np.ndarray, holes: tuple[np.ndarray, ...]) -> None:
        loops = (outer, *holes)
        for a in range(len(loops)):
            for b in range(a + 1, len(loops)):
                sa, ea = _segments(loops[a])
                sb, eb = _segments(loops[b])
                for i in range(len(sa)):
                    for j in range(len(sb)):
                        if _segments_cross(sa[i], ea[i], sb[j], eb[j]):
                            raise DomainError(f"Loops {a} and {b} intersect.")
        for hole_id, hole in enumerate(holes, start=1):
            if not np.all(_parity_inside(hole, (outer,))):
                raise DomainError(f"Hole loop {hole_id} is not inside the outer loop.")
            for other_id, other in enumerate(holes, start=1):
                if other_id != hole_id and np.any(_parity_inside(hole, (other,))):
                    raise DomainError(f"Holes {hole_id} and {other_id} overlap.")

    @classmethod
    def rectangle(cls, x_min: float, x_max: float, y_min: float, y_max: float) -> PolygonalDomain:
        """Axis-aligned rectangle; facets are bottom, right, top, left in that order."""
        if not (x_max > x_min and y_max > y_min):
            raise DomainError("Rectangle bounds must satisfy x_min < x_max and y_min < y_max.")
        return cls(
            np.array([[x_min, y_min], [x_max, y_min], [x_max, y_max], [x_min, y_max]]),
        )

    @classmethod
    def unit_square(cls) -> PolygonalDomain:
        return cls.rectangle(0.0, 1.0, 0.0, 1.0)

    @classmethod
    def from_triangulation(cls, tri: Triangulation) -> PolygonalDomain:
        """Rebuild the polygon whose closure the mesh covers."""
        return tri.to_domain()

    @property
    def loops(self) -> tuple[np.ndarray, ...]:
        return (self.outer_loop, *self.hole_loops)

    @property
    def area(self) -> float:
        return sum(_signed_area(loop) for loop in self.loops)

    @property
    def bounding_box(self) -> tuple[float, float, float, float]:
        x_min, y_min = self.outer_loop.min(axis=0)
        x_max, y_max = self.outer_loop.max(axis=0)
        return float(x_min), float(x_max), float(y_min), float(y_max)

    @property
    def diameter(self) -> float:
        diffs = self.outer_loop[:, None, :] - self.outer_loop[None, :, :]
        return float(np.sqrt((diffs**2).sum(axis=-1)).max())

    def rectangle_bounds(self) -> tuple[float, float, float, float] | None:
        """Return (a, b, c, d) when the domain is the rectangle [a,b]x[c,d], else None."""
        if self.hole_loops or len(self.outer_loop) != 4:
            return None
        x_min, x_max, y_min, y_max = self.bounding_box
        corners = {(x_min, y_min), (x_max, y_min), (x_max, y_max), (x_min, y_max)}
        if {tuple(map(float, vertex)) for vertex in self.outer_loop} != corners:
            return None
        return x_min, x_max, y_min, y_max

    def outward_normal(self, facet_id: int) -> np.ndarray:
        """Return the outward unit normal of a facet."""
        if not 0 <= facet_id < len(self.facets):
            raise IndexError(f"facet_id {facet_id} out of range for {len(self.facets)} facets")
        return self.facets[facet_id].normal.copy()

    def facet_distances(self, points: np.ndarray) -> np.ndarray:
        """Return the (P, F) matrix of distances from points to every facet segment."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        starts = np.array([facet.start for facet in self.facets])
        ends = np.array([facet.end for facet in self.facets])
        direction = ends - starts
        length2 = (direction**2).sum(axis=1)
        rel = points[:, None, :] - starts[None, :, :]
        s = np.clip((rel * direction[None, :, :]).sum(axis=-1) / length2[None, :], 0.0, 1.0)
        closest = starts[None, :, :] + s[..., None] * direction[None, :, :]
        return np.sqrt(((points[:, None, :] - closest) ** 2).sum(axis=-1))

    def facet_line_residuals(self, points: np.ndarray) -> np.ndarray:
        """(P, F) matrix of |(p - start_f) . n_f|, the distance to each facet's supporting line."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        starts = np.array([facet.start for facet in self.facets])
        normals = np.array([facet.normal for facet in self.facets])
        return np.abs(((points[:, None, :] - starts[None, :, :]) * normals[None, :, :]).sum(axis=-1))

    def boundary_distance(self, points: np.ndarray) -> np.ndarray:
        """Distance of each point to the boundary."""
        return self.facet_distances(points).min(axis=1)

    def classify_points(self, points: np.ndarray, tol: float = 0.0) -> np.ndarray:
        """Vectorised `classify_point`; returns an array of PointClass values."""
        if tol < 0:
            raise DomainError("tol must be non-negative")
        points = np.atleast_2d(np.asarray(points, dtype=float))
        on_boundary = self.boundary_distance(points) <= tol
        inside = _parity_inside(points, self.loops)
        result = np.empty(len(points), dtype=object)
        for index in range(len(points)):
            if on_boundary[index]:
                result[index] = PointClass.BOUNDARY
            elif inside[index]:
                result[index] = PointClass.INTERIOR
            else:
                result[index] = PointClass.EXTERIOR
        return result

    def classify_point(self, x: Sequence[float], tol: float = 0.0) -> PointClass:
        """Classify one point as interior, boundary (within tol of a facet) or exterior."""
        return self.classify_points(np.asarray(x, dtype=float)[None, :], tol)[0]

    def outside_distance(self, points: np.ndarray) -> np.ndarray:
        """Distance to the closure: 0 inside or on the boundary, else distance to the boundary."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        inside = _parity_inside(points, self.loops)
        return np.where(inside, 0.0, self.boundary_distance(points))

    def contains_closure(self, points: np.ndarray, tol: float = 0.0) -> np.ndarray:
        """True for points inside the domain or within tol of it."""
        return self.outside_distance(points) <= tol

    def grid(self, density: int) -> np.ndarray:
        """Structured density x density grid over the bounding box, restricted to the closure."""
        x_min, x_max, y_min, y_max = self.bounding_box
        xs = np.linspace(x_min, x_max, density)
        ys = np.linspace(y_min, y_max, density)
        pts = np.stack(np.meshgrid(xs, ys, indexing="xy"), axis=-1).reshape(-1, 2)
        return pts[self.contains_closure(pts, tol=1e-12)]

    def facet_sum(self) -> np.ndarray:
        """Sum of length times outward normal over all facets (zero for closed loops)."""
        return np.sum([facet.length * facet.normal for facet in self.facets], axis=0)


def _parity_inside(points: np.ndarray, loops: Sequence[np.ndarray]) -> np.ndarray:
    """Even-odd ray casting over all loops (holes flip parity back to outside)."""
    points = np.atleast_2d(points)
    x = points[:, 0][:, None]
    y = points[:, 1][:, None]
    crossings = np.zeros(len(points), dtype=int)
    for loop in loops:
        starts, ends = _segments(loop)
        x1, y1 = starts[:, 0][None, :], starts[:, 1][None, :]
        x2, y2 = ends[:, 0][None, :], ends[:, 1][None, :]
        straddles = (y1 > y) != (y2 > y)
        with np.errstate(divide="ignore", invalid="ignore"):
            x_cross = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
        crossings += np.sum(straddles & (x < x_cross), axis=1)
    return crossings % 2 == 1
