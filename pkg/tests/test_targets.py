import numpy as np
import pytest

from diffeoreg.errors import TargetError
from diffeoreg.targets.DistributedTarget import DistributedTarget
from diffeoreg.targets.em import anneal_sigma, em_update_weights, initial_sigma, responsibilities, sinkhorn
from diffeoreg.targets.fields import AffineField, GaussianRidge, SmoothedStep, ZSpace, field_from_tag
from diffeoreg.targets.PointwiseTarget import PointwiseTarget
from tests.helpers import unit_mesh


def test_pointwise_value_and_derivative() -> None:
    target = PointwiseTarget(np.array([[0.0, 0.0]]), np.array([[1.0, 0.0]]))
    images = np.array([[0.0, 0.0]])
    assert target.value(images) == pytest.approx(0.5)
    assert np.allclose(target.derivative_weights(images), [[-1.0, 0.0]])
    assert target.frechet(images, np.array([[1.0, 0.0]])) == pytest.approx(-1.0)
    assert target.matched_error(images) == pytest.approx(1.0)


def test_pointwise_soft_weights_use_barycenters() -> None:
    sources = np.array([[0.5, 0.5]])
    targets = np.array([[0.0, 0.0], [1.0, 0.0]])
    target = PointwiseTarget(sources, targets, np.array([[0.5, 0.5]]))
    assert np.allclose(target.barycenters(), [[0.5, 0.0]])
    assert np.allclose(target.derivative_weights(sources), [[0.0, 0.5]])


@pytest.mark.parametrize(
    ("weights", "doubly"),
    [
        (np.array([[0.7, 0.7], [0.3, 0.3]]), False),  # rows do not sum to one
        (np.array([[1.0, 0.0], [1.0, 0.0]]), True),  # columns do not sum to one
        (np.array([[1.5, -0.5], [0.0, 1.0]]), False),  # entries outside [0, 1]
        (np.ones((2, 3)) / 3.0, False),  # wrong shape
    ],
)
def test_pointwise_rejects_bad_weights(weights: np.ndarray, doubly: bool) -> None:
    points = np.array([[0.1, 0.1], [0.9, 0.9]])
    with pytest.raises(TargetError):
        PointwiseTarget(points, points, weights, doubly)


def test_pointwise_rejects_unequal_counts_without_weights() -> None:
    with pytest.raises(TargetError):
        PointwiseTarget(np.zeros((2, 2)), np.zeros((3, 2)))
    target = PointwiseTarget(np.zeros((2, 2)), np.zeros((2, 2)))
    with pytest.raises(TargetError):
        target.value(np.zeros((3, 2)))


def test_distributed_value_against_constants() -> None:
    # u = x1, Z = span{1}: the best constant is 1/2 and the misfit is 1/2 * 1/12
    target = DistributedTarget.on_mesh(AffineField(), ZSpace.polynomial(0), unit_mesh(4), quad_order=2)
    assert target.value(target.points) == pytest.approx(1.0 / 24.0, abs=1e-14)
    assert np.allclose(target.projection(target.points[:, 0]), 0.5)


def test_distributed_target_with_zero_space() -> None:
    target = DistributedTarget.on_mesh(AffineField(), ZSpace.zero(), unit_mesh(4), quad_order=2)
    assert target.value(target.points) == pytest.approx(1.0 / 6.0, abs=1e-14)


def test_distributed_value_vanishes_on_the_space() -> None:
    target = DistributedTarget.on_mesh(AffineField(offset=0.3, slope=(1.0, -2.0)), ZSpace.polynomial(1), unit_mesh(3))
    assert target.value(target.points) == pytest.approx(0.0, abs=1e-20)


def test_distributed_derivative_weights_match_finite_differences() -> None:
    ridge = GaussianRidge(mu=0.1)
    target = DistributedTarget.on_mesh(ridge, ZSpace.snapshots([GaussianRidge()]), unit_mesh(4))
    rng = np.random.default_rng(3)
    images = target.points + 0.01 * rng.standard_normal(target.points.shape)
    direction = rng.standard_normal(target.points.shape)
    h = 1e-6
    fd = (target.value(images + h * direction) - target.value(images - h * direction)) / (2 * h)
    assert target.frechet(images, direction) == pytest.approx(fd, rel=1e-6)


def test_singular_z_space_is_rejected() -> None:
    z_space = ZSpace.snapshots([AffineField(offset=1.0, slope=(0.0, 0.0))])
    with pytest.raises(TargetError):
        DistributedTarget.on_mesh(AffineField(), z_space, unit_mesh(2))


@pytest.mark.parametrize("field", [GaussianRidge(mu=0.05), SmoothedStep(curve=(0.5, 0.1, -0.2))])
def test_field_gradients(field) -> None:
    points = np.random.default_rng(0).uniform(0.0, 1.0, size=(20, 2))
    h = 1e-6
    for column in range(2):
        shift = np.zeros(2)
        shift[column] = h
        fd = (field.value(points + shift) - field.value(points - shift)) / (2 * h)
        assert np.allclose(field.gradient(points)[:, column], fd, atol=1e-6)


def test_field_from_tag() -> None:
    ridge = field_from_tag("gaussian_ridge", {"width": 0.2}, mu=0.3)
    assert isinstance(ridge, GaussianRidge)
    assert ridge.mu == pytest.approx(0.3) and ridge.width == pytest.approx(0.2)
    with pytest.raises(TargetError):
        field_from_tag("constant", mu=0.1)
    with pytest.raises(TargetError):
        field_from_tag("spiral")


def test_responsibilities_are_row_stochastic() -> None:
    images = np.array([[0.0, 0.0], [1.0, 1.0]])
    targets = np.array([[0.1, 0.0], [1.0, 0.9], [0.5, 0.5]])
    weights = responsibilities(images, targets, 0.3)
    assert np.allclose(weights.sum(axis=1), 1.0)
    assert weights[0].argmax() == 0 and weights[1].argmax() == 1
    with pytest.raises(TargetError):
        responsibilities(images, targets, 0.0)
    with pytest.raises(TargetError, match="underflowed"):
        responsibilities(np.array([[100.0, 100.0]]), targets, 1e-3)


def test_sinkhorn_makes_doubly_stochastic() -> None:
    matrix = np.random.default_rng(1).uniform(0.1, 1.0, size=(4, 4))
    balanced = sinkhorn(matrix)
    assert np.allclose(balanced.sum(axis=0), 1.0, atol=1e-7)
    assert np.allclose(balanced.sum(axis=1), 1.0, atol=1e-7)


def test_sinkhorn_rejects_points_without_mass() -> None:
    empty_column = np.array([[0.5, 0.0, 0.5], [0.2, 0.0, 0.8], [1.0, 0.0, 0.0]])
    with pytest.raises(TargetError, match="target point 1"):
        sinkhorn(empty_column)
    assert empty_column[0, 0] == 0.5
    empty_row = np.array([[0.5, 0.5], [0.0, 0.0]])
    with pytest.raises(TargetError, match="source point 1"):
        sinkhorn(empty_row)


def test_em_update_produces_valid_target() -> None:
    points = np.random.default_rng(2).uniform(0.0, 1.0, size=(5, 2))
    target = PointwiseTarget(points, points[::-1], doubly_stochastic=False, weights=np.eye(5)[::-1])
    doubly = PointwiseTarget(points, points[::-1], np.eye(5)[::-1], doubly_stochastic=True)
    sigma = initial_sigma(points, points[::-1])
    for base in (target, doubly):
        updated = base.with_weights(em_update_weights(base, points, sigma))
        assert np.allclose(updated.weights.sum(axis=1), 1.0)


def test_sigma_schedule() -> None:
    assert initial_sigma(np.zeros((1, 2)), np.array([[3.0, 4.0]])) == pytest.approx(5.0)
    assert anneal_sigma(1.0, 1.0) == pytest.approx(0.92)
    assert anneal_sigma(1e-4, 1.0) == pytest.approx(1e-3)
