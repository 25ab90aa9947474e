import numpy as np
import pytest

from diffeoreg.errors import DomainError, QuadratureError
from diffeoreg.geometry.CurvedMap import CurvedMap, curved_map_from_tag
from diffeoreg.geometry.MeshFileParser import MeshFileParser, write_mesh_file
from diffeoreg.geometry.PolygonalDomain import PointClass, PolygonalDomain
from diffeoreg.geometry.quadrature import facet_quadrature, integrate, quadrature
from diffeoreg.geometry.Triangulation import Triangulation
from tests.helpers import unit_mesh, unit_square

L_SHAPE = [(0, 0), (2, 0), (2, 1), (1, 1), (1, 2), (0, 2)]
HOLE = [(0.4, 0.4), (0.4, 0.6), (0.6, 0.6), (0.6, 0.4)]

TWO_TRIANGLES = """
# unit square, first triangle listed clockwise
NODES
10 0 0
11 1 0
12 1 1
13 0 1
TRIANGLES
0 10 12 11
1 10 12 13
BOUNDARY
10 0
10 3
11 0
11 1
12 1
12 2
13 2
13 3
"""


@pytest.mark.parametrize(
    ("facet_id", "expected"),
    [(0, (0.0, -1.0)), (1, (1.0, 0.0)), (2, (0.0, 1.0)), (3, (-1.0, 0.0))],
)
def test_unit_square_outward_normals(facet_id: int, expected: tuple[float, float]) -> None:
    normal = unit_square().outward_normal(facet_id)
    assert np.allclose(normal, expected, atol=1e-15), f"facet {facet_id}: {normal}"


def test_diagonal_facet_normal() -> None:
    domain = PolygonalDomain(np.array([(0.0, 0.0), (1.0, 1.0), (0.0, 1.0)]))
    expected = np.array([1.0, -1.0]) / np.sqrt(2.0)
    assert np.allclose(domain.outward_normal(0), expected, atol=1e-15)


def test_outward_normal_rejects_unknown_facet() -> None:
    with pytest.raises(IndexError):
        unit_square().outward_normal(4)


def test_facet_normals_close_up() -> None:
    domain = PolygonalDomain(np.array(L_SHAPE, dtype=float))
    assert domain.area == pytest.approx(3.0)
    assert np.allclose(domain.facet_sum(), 0.0, atol=1e-14)


@pytest.mark.parametrize(
    ("point", "expected"),
    [
        ((0.5, 0.5), PointClass.INTERIOR),
        ((0.5, 0.0), PointClass.BOUNDARY),
        ((1.0, 1.0), PointClass.BOUNDARY),
        ((1.5, 0.5), PointClass.EXTERIOR),
    ],
)
def test_classify_point(point: tuple[float, float], expected: PointClass) -> None:
    assert unit_square().classify_point(point) is expected


def test_line_residual_ignores_position_along_the_facet() -> None:
    square = unit_square()
    # on the line through the right facet but beyond its end
    point = np.array([[1.0, 1.5]])
    assert square.facet_line_residuals(point)[0, 1] == 0.0
    assert square.facet_distances(point)[0, 1] == pytest.approx(0.5)
    assert square.facet_line_residuals(np.array([[0.25, 0.5]]))[0].tolist() == [0.5, 0.75, 0.5, 0.25]


def test_classify_point_tolerance() -> None:
    domain = unit_square()
    assert domain.classify_point((0.5, 1e-9)) is PointClass.INTERIOR
    assert domain.classify_point((0.5, 1e-9), tol=1e-8) is PointClass.BOUNDARY
    with pytest.raises(DomainError):
        domain.classify_point((0.5, 0.5), tol=-1.0)


@pytest.mark.parametrize(
    "loop",
    [
        [(0, 0), (0, 1), (1, 1), (1, 0)],  # clockwise
        [(0, 0), (1, 1), (1, 0), (0, 1)],  # bow tie
        [(0, 0), (1, 0)],
    ],
)
def test_invalid_polygons_are_rejected(loop: list[tuple[float, float]]) -> None:
    with pytest.raises(DomainError):
        PolygonalDomain(np.array(loop, dtype=float))


def test_domain_with_hole() -> None:
    outer = np.array([(0, 0), (1, 0), (1, 1), (0, 1)], dtype=float)
    domain = PolygonalDomain(outer, (np.array(HOLE),))
    assert domain.area == pytest.approx(0.96)
    assert domain.classify_point((0.5, 0.5)) is PointClass.EXTERIOR
    assert domain.classify_point((0.4, 0.5)) is PointClass.BOUNDARY
    assert domain.classify_point((0.2, 0.2)) is PointClass.INTERIOR
    # hole facets point into the hole
    assert np.allclose(domain.outward_normal(4), (1.0, 0.0))


def test_hole_outside_outer_loop_is_rejected() -> None:
    outer = np.array([(0, 0), (1, 0), (1, 1), (0, 1)], dtype=float)
    stray = np.array([(2.0, 2.0), (2.0, 3.0), (3.0, 3.0), (3.0, 2.0)])
    with pytest.raises(DomainError):
        PolygonalDomain(outer, (stray,))


def test_grid_is_restricted_to_closure() -> None:
    assert len(unit_square().grid(5)) == 25
    l_shape = PolygonalDomain(np.array(L_SHAPE, dtype=float))
    points = l_shape.grid(9)
    assert np.all(l_shape.contains_closure(points, tol=1e-12))
    assert len(points) < 81


def test_structured_mesh_covers_rectangle() -> None:
    tri = unit_mesh(4)
    assert len(tri.triangles) == 32
    assert tri.area == pytest.approx(1.0, abs=1e-14)
    assert np.all(tri.signed_areas > 0)
    loops = tri.boundary_loops()
    assert len(loops) == 1 and len(loops[0]) == 16
    rebuilt = tri.to_domain()
    assert len(rebuilt.outer_loop) == 4
    assert rebuilt.area == pytest.approx(1.0)
    assert sorted(tri.facet_nodes()) == [0, 1, 2, 3]


def test_triangulation_rejects_bad_input() -> None:
    nodes = np.array([(0, 0), (1, 0), (1, 1)], dtype=float)
    with pytest.raises(DomainError):
        Triangulation(nodes, np.array([[0, 2, 1]]))
    with pytest.raises(DomainError):
        Triangulation(nodes, np.array([[0, 1, 2]]), domain=unit_square())


def test_quadrature_integrates_polynomials() -> None:
    tri = unit_mesh(4)
    points, weights = quadrature(tri, 1)
    assert weights.sum() == pytest.approx(1.0, abs=1e-14)
    points, weights = quadrature(tri, 2)
    assert integrate(points[:, 0], weights) == pytest.approx(0.5, abs=1e-14)
    points, weights = quadrature(tri, 5)
    value = integrate(points[:, 0] ** 2 * points[:, 1] ** 2, weights)
    assert value == pytest.approx(1.0 / 9.0, abs=1e-14)


def test_quadrature_points_stay_in_closure() -> None:
    domain = unit_square()
    points, _ = quadrature(unit_mesh(3), 5)
    classes = domain.classify_points(points)
    assert all(c in (PointClass.INTERIOR, PointClass.BOUNDARY) for c in classes)


@pytest.mark.parametrize("order", [6, 9, 12])
def test_collapsed_rules_are_exact(order: int) -> None:
    points, weights = quadrature(unit_mesh(3), order)
    assert weights.sum() == pytest.approx(1.0, abs=1e-13)
    assert np.all(weights > 0.0)
    half = order // 2
    value = integrate(points[:, 0] ** half * points[:, 1] ** (order - half), weights)
    assert value == pytest.approx(1.0 / ((half + 1) * (order - half + 1)), rel=1e-12)


def test_unsupported_quadrature_order() -> None:
    with pytest.raises(QuadratureError):
        quadrature(unit_mesh(1), 0)
    with pytest.raises(QuadratureError):
        quadrature(unit_mesh(1), 41)


def test_facet_quadrature() -> None:
    facet = unit_square().facets[1]
    points, weights, s = facet_quadrature(facet, 3)
    assert weights.sum() == pytest.approx(facet.length)
    assert float(weights @ s**4) == pytest.approx(0.2, abs=1e-14)
    assert np.allclose(points[:, 0], 1.0)


def test_mesh_file_parser_reorients_and_rebuilds_domain() -> None:
    tri = MeshFileParser(TWO_TRIANGLES).parse()
    assert tri.area == pytest.approx(1.0)
    assert np.all(tri.signed_areas > 0)
    assert tri.domain is not None and len(tri.domain.facets) == 4
    assert tri.boundary_node_flags[0] == frozenset({0, 3})


def test_mesh_file_parser_errors() -> None:
    with pytest.raises(DomainError):
        MeshFileParser("NODES\n0 0 0\n1 1 0\n2 0 1\n").parse()
    with pytest.raises(DomainError, match="unknown node"):
        MeshFileParser("NODES\n0 0 0\n1 1 0\n2 0 1\nTRIANGLES\n0 0 1 7\n").parse()


def test_written_mesh_parses_back(tmp_path) -> None:
    tri = unit_mesh(3)
    path = write_mesh_file(tri, tmp_path / "square.mesh")
    parsed = MeshFileParser(path).parse()
    assert len(parsed.nodes) == len(tri.nodes)
    assert len(parsed.triangles) == len(tri.triangles)
    assert parsed.domain.area == pytest.approx(1.0)


def test_curved_maps() -> None:
    samples = unit_square().grid(7)
    bulge = CurvedMap.sine_bulge(0.1)
    assert bulge.round_trip_error(samples) < 1e-12
    h = 1e-6
    shift = np.array([h, 0.0])
    fd = (bulge.apply(samples + shift) - bulge.apply(samples - shift)) / (2 * h)
    assert np.allclose(bulge.gradient(samples)[:, :, 0], fd, atol=1e-8)

    affine = curved_map_from_tag("affine", {"b11": 2.0, "c2": 1.0})
    assert np.allclose(affine.apply(np.array([[0.5, 0.5]])), [[1.0, 1.5]])
    with pytest.raises(DomainError):
        CurvedMap.affine(np.zeros((2, 2)), np.zeros(2))
    with pytest.raises(DomainError):
        curved_map_from_tag("spiral")
