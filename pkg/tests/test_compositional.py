import numpy as np
import pytest

from diffeoreg.basis.TangentialPolynomialBasis import build_tangential_polynomial_basis
from diffeoreg.cli.checks import central_difference, relative_error
from diffeoreg.compositional.cm_maps import (
    Verdict,
    bijectivity_check,
    cm_target_gradient,
    detect_folds,
    evaluate_cm,
    evaluate_cm_curved,
    jacobian_field,
    penalty,
)
from diffeoreg.compositional.DisplacementModel import DisplacementModel
from diffeoreg.errors import BasisError, DomainError
from diffeoreg.geometry.CurvedMap import CurvedMap
from diffeoreg.targets.PointwiseTarget import PointwiseTarget
from tests.helpers import bubble_basis, bubble_displacement, unit_square


def _random_model(seed: int, amplitude: float = 0.3, curved: CurvedMap | None = None) -> DisplacementModel:
    basis = build_tangential_polynomial_basis(unit_square(), 1)
    rng = np.random.default_rng(seed)
    return DisplacementModel(basis, amplitude * rng.standard_normal(basis.size) / np.sqrt(basis.size), curved)


def test_evaluate_bubble_displacement() -> None:
    images = evaluate_cm(bubble_displacement(0.5), np.array([[0.5, 0.2]]))
    assert np.allclose(images, [[0.625, 0.2]])


def test_zero_coefficients_give_identity() -> None:
    points = unit_square().grid(6)
    zero = DisplacementModel.zero(build_tangential_polynomial_basis(unit_square(), 2))
    assert np.array_equal(zero.apply(points), points)
    assert np.allclose(jacobian_field(zero, points), 1.0)


def test_points_outside_polytope_are_rejected() -> None:
    with pytest.raises(DomainError):
        evaluate_cm(bubble_displacement(0.1), np.array([[1.2, 0.5]]))
    with pytest.raises(DomainError):
        evaluate_cm_curved(bubble_displacement(0.1), np.array([[0.5, 0.5]]))


def test_model_needs_spatial_basis_and_matching_coefficients() -> None:
    with pytest.raises(BasisError):
        DisplacementModel(bubble_basis(), [0.1, 0.2])


def test_facets_stay_on_their_supporting_lines() -> None:
    model = _random_model(0, amplitude=0.5)
    square = unit_square()
    for index, facet in enumerate(square.facets):
        images = model.map_polytope(facet.sample(11))
        assert square.facet_line_residuals(images)[:, index].max() <= 1e-10


@pytest.mark.parametrize("amplitude", [0.25, 0.5, 0.9])
def test_bijective_verdict_for_small_bubbles(amplitude: float) -> None:
    report = bijectivity_check(bubble_displacement(amplitude), density=41)
    assert report.verdict is Verdict.BIJECTIVE
    assert report.min_jacobian == pytest.approx(1.0 - amplitude, abs=1e-12)


def test_violated_verdict_and_fold() -> None:
    model = bubble_displacement(2.0)
    report = bijectivity_check(model, density=41)
    assert report.verdict is Verdict.VIOLATED
    assert report.min_jacobian == pytest.approx(-1.0, abs=1e-12)
    assert report.location[0] == pytest.approx(1.0)
    assert report.to_dict()["verdict"] == "violated"
    folds = detect_folds(model, density=40)
    assert folds.has_fold
    assert not detect_folds(bubble_displacement(0.5), density=40).has_fold


def test_inconclusive_verdict_inside_margin() -> None:
    report = bijectivity_check(bubble_displacement(1.0 - 1e-8), density=41)
    assert report.verdict is Verdict.INCONCLUSIVE


def test_penalty_value_and_gradient() -> None:
    points = unit_square().grid(21)
    model = bubble_displacement(2.0)
    result = penalty(model, points, 0.5)
    J = 1.0 + 2.0 * (1.0 - 2.0 * points[:, 0])
    assert result.value == pytest.approx(np.mean(np.maximum(0.0, 0.5 - J) ** 2))
    assert result.min_jacobian == pytest.approx(-1.0)

    random_model = _random_model(1, amplitude=1.5)

    def value(a: np.ndarray) -> float:
        return penalty(random_model.with_coefficients(a), points, 1.0).value

    fd = central_difference(value, random_model.coefficients, 1e-6)
    assert relative_error(penalty(random_model, points, 1.0).gradient, fd) < 1e-5


def test_penalty_is_zero_above_threshold() -> None:
    result = penalty(bubble_displacement(0.2), unit_square().grid(11), 0.01)
    assert result.value == 0.0
    assert np.array_equal(result.gradient, [0.0])
    with pytest.raises(ValueError):
        penalty(bubble_displacement(0.2), unit_square().grid(11), 0.0)


def test_target_gradient_matches_finite_differences() -> None:
    model = _random_model(2)
    points = unit_square().grid(6)
    target = PointwiseTarget(points, _random_model(3).apply(points))
    analytic = cm_target_gradient(model, target).gradient

    def value(a: np.ndarray) -> float:
        return target.value(model.with_coefficients(a).apply(points))

    fd = central_difference(value, model.coefficients, 1e-6)
    assert relative_error(analytic, fd) < 1e-8


def test_curved_map_conjugation() -> None:
    bulge = CurvedMap.sine_bulge(0.1)
    reference = unit_square().grid(6)
    physical = bulge.apply(reference)
    zero = DisplacementModel.zero(bubble_basis(), bulge)
    assert np.abs(zero.apply(physical) - physical).max() < 1e-12

    model = _random_model(4, curved=bulge)
    target = PointwiseTarget(physical, _random_model(5, curved=bulge).apply(physical))
    analytic = cm_target_gradient(model, target).gradient

    def value(a: np.ndarray) -> float:
        return target.value(model.with_coefficients(a).apply(physical))

    fd = central_difference(value, model.coefficients, 1e-6)
    assert relative_error(analytic, fd) < 1e-6
