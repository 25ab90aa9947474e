import numpy as np
import pytest

from diffeoreg.basis.gram import GramForm, GramMatrix, assemble_gram, exact_quad_order, tensorize_gram
from diffeoreg.basis.SpaceTimeBasis import tensorize_time
from diffeoreg.basis.TangentialPolynomialBasis import build_tangential_polynomial_basis
from diffeoreg.errors import BasisError, DomainError
from diffeoreg.geometry.PolygonalDomain import PolygonalDomain
from tests.helpers import bubble_basis, unit_mesh, unit_square


@pytest.mark.parametrize(("degree", "size"), [(0, 2), (1, 8), (2, 18)])
def test_basis_size(degree: int, size: int) -> None:
    basis = build_tangential_polynomial_basis(unit_square(), degree)
    assert basis.size == size
    assert basis.labels[0].startswith("e1")
    assert basis.labels[-1].startswith("e2")


def test_basis_rejects_bad_input() -> None:
    with pytest.raises(BasisError):
        build_tangential_polynomial_basis(unit_square(), -1)
    triangle = PolygonalDomain(np.array([(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)]))
    with pytest.raises(DomainError):
        build_tangential_polynomial_basis(triangle, 1)


def test_members_are_tangent_on_every_facet() -> None:
    domain = PolygonalDomain.rectangle(-1.0, 2.0, 0.5, 1.5)
    basis = build_tangential_polynomial_basis(domain, 2)
    for facet in domain.facets:
        values = basis.evaluate(facet.sample(7))
        normal_part = values @ facet.normal
        assert np.abs(normal_part).max() < 1e-13, f"normal component on facet {facet.start}->{facet.end}"


def test_gradient_matches_finite_differences() -> None:
    basis = build_tangential_polynomial_basis(unit_square(), 2)
    points = unit_square().grid(5)
    h = 1e-6
    for column, shift in enumerate((np.array([h, 0.0]), np.array([0.0, h]))):
        fd = (basis.evaluate(points + shift) - basis.evaluate(points - shift)) / (2 * h)
        assert np.allclose(basis.evaluate_grad(points)[..., column], fd, atol=1e-7)


def test_single_member_evaluation() -> None:
    basis = bubble_basis()
    assert np.allclose(basis.eval(0, [0.5, 0.2]), [0.25, 0.0])
    assert np.allclose(basis.eval_grad(0, [0.5, 0.2]), [[0.0, 0.0], [0.0, 0.0]])
    with pytest.raises(IndexError):
        basis.eval(1, [0.5, 0.5])
    with pytest.raises(BasisError):
        basis.combine(np.ones(2), np.array([[0.5, 0.5]]))


def test_space_time_members() -> None:
    spatial = build_tangential_polynomial_basis(unit_square(), 0, normalize=False)
    basis = tensorize_time(spatial, 1)
    assert basis.size == 4
    point = np.array([[0.5, 0.5]])
    # member 1 is spatial member 0 times L1, and L1(1/2) = 0
    assert np.allclose(basis.evaluate(point, 0.5)[1], 0.0)
    assert np.allclose(basis.evaluate(point, 1.0)[1], basis.evaluate(point, 1.0)[0])
    with pytest.raises(BasisError):
        basis.evaluate(point)


def test_l2_gram_of_bubble() -> None:
    gram = assemble_gram(bubble_basis(), "L2", unit_mesh(4))
    assert gram.entries[0, 0] == pytest.approx(1.0 / 30.0, abs=1e-15)
    h1 = assemble_gram(bubble_basis(), "H1semi", unit_mesh(4))
    assert h1.entries[0, 0] == pytest.approx(1.0 / 3.0, abs=1e-14)


def test_normalised_degree_zero_gram_is_identity() -> None:
    basis = build_tangential_polynomial_basis(unit_square(), 0)
    gram = assemble_gram(basis, "L2", unit_mesh(2))
    assert np.allclose(gram.entries, np.eye(2), atol=1e-13)
    assert gram.condition_number() == pytest.approx(1.0)


@pytest.mark.parametrize("degree", [1, 2])
@pytest.mark.parametrize("tag", ["L2", "H1semi", "H2semi", "elasticity(1,1/3)"])
def test_gram_entries_do_not_change_above_the_exact_order(degree: int, tag: str) -> None:
    basis = build_tangential_polynomial_basis(unit_square(), degree)
    tri = unit_mesh(2)
    q = exact_quad_order(basis, tag)
    assert q >= 2 * degree
    exact = assemble_gram(basis, tag, tri, q).entries
    finer = assemble_gram(basis, tag, tri, q + 2).entries
    assert np.abs(exact - finer).max() <= 1e-10 * max(1.0, np.abs(finer).max())


def test_exact_orders_and_rejected_orders() -> None:
    basis = build_tangential_polynomial_basis(unit_square(), 1)
    assert basis.field_degree == 4
    assert [exact_quad_order(basis, tag) for tag in ("L2", "H1semi", "elasticity", "H2semi")] == [8, 6, 6, 4]
    assert exact_quad_order(bubble_basis(), "L2") == 4
    with pytest.raises(BasisError, match="need at least 8"):
        assemble_gram(basis, "L2", unit_mesh(2), 5)
    # normalised members have unit L2 norm once the integrand is exact
    gram = assemble_gram(basis, "L2", unit_mesh(4))
    assert np.allclose(np.diag(gram.entries), 1.0, atol=1e-12)


@pytest.mark.parametrize("tag", ["L2", "H1semi", "H2semi", "elasticity(1,1/3)"])
def test_gram_matrices_are_symmetric_semidefinite(tag: str) -> None:
    basis = build_tangential_polynomial_basis(unit_square(), 1)
    gram = assemble_gram(basis, tag, unit_mesh(4))
    assert np.allclose(gram.entries, gram.entries.T)
    assert gram.eigenvalues().min() > -1e-12


def test_elasticity_tag_and_lame_coefficients() -> None:
    form = GramForm.from_tag("elasticity(1,1/3)")
    assert form.poisson_ratio == pytest.approx(1.0 / 3.0)
    first, second = form.lame_coefficients()
    assert first == pytest.approx(0.75)
    assert second == pytest.approx(0.375)
    with pytest.raises(BasisError):
        GramForm.from_tag("elasticity(1,0.5)").lame_coefficients()
    with pytest.raises(BasisError):
        GramForm.from_tag("H3semi")


def test_gram_matrix_validation_and_persistence(tmp_path) -> None:
    with pytest.raises(BasisError):
        GramMatrix(np.array([[1.0, 2.0], [0.0, 1.0]]), "custom")
    gram = GramMatrix(np.array([[2.0, 0.5], [0.5, 1.0]]), "custom")
    loaded = GramMatrix.load(gram.save(tmp_path / "gram.txt"), "custom")
    assert np.array_equal(loaded.entries, gram.entries)
    shifted = gram.plus(GramMatrix(np.eye(2), "L2"), 0.5)
    assert np.allclose(shifted.entries, [[2.5, 0.5], [0.5, 1.5]])


def test_space_time_gram_assembly() -> None:
    spatial = bubble_basis()
    with pytest.raises(BasisError):
        assemble_gram(tensorize_time(spatial, 1), "L2", unit_mesh(2))
    gram = tensorize_gram(assemble_gram(spatial, "L2", unit_mesh(2)), 1)
    assert np.allclose(np.diag(gram.entries), [1.0 / 30.0, 1.0 / 90.0])
