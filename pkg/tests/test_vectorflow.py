import numpy as np
import pandas as pd
import pytest

from diffeoreg.basis.SpaceTimeBasis import tensorize_time
from diffeoreg.basis.TangentialPolynomialBasis import build_tangential_polynomial_basis
from diffeoreg.errors import BoundaryLeakError, DomainError
from diffeoreg.geometry.PolygonalDomain import PolygonalDomain
from diffeoreg.vectorflow.FlowSolution import Scheme
from diffeoreg.vectorflow.integrate import (
    chunk_bounds,
    continuity_gap,
    integrate_flow,
    inverse_map,
    jacobian_logdet,
)
from diffeoreg.vectorflow.VelocityModel import VelocityModel
from tests.helpers import StreamFunctionVelocity, logistic_end, logistic_model, random_velocity, unit_square


def test_logistic_flow_end_point() -> None:
    flow = integrate_flow(logistic_model(), np.array([[0.5, 0.5]]), 1000, Scheme.RK4)
    assert flow.endpoints[0, 0] == pytest.approx(np.e / (1.0 + np.e), abs=1e-8)
    assert flow.endpoints[0, 1] == pytest.approx(0.5, abs=1e-15)


@pytest.mark.parametrize("scheme", ["RK4", "RK2"])
def test_zero_field_is_identity(scheme: str) -> None:
    seeds = unit_square().grid(6)
    zero = VelocityModel.zero(build_tangential_polynomial_basis(unit_square(), 1))
    flow = integrate_flow(zero, seeds, 10, scheme, with_gradient=True, with_logdet=True)
    assert np.abs(flow.endpoints - seeds).max() <= 1e-14
    assert np.allclose(flow.end_gradient, np.eye(2))
    assert np.allclose(flow.end_logdet, 0.0)


def test_trajectories_keep_shape_and_times() -> None:
    seeds = np.array([[0.2, 0.3], [0.7, 0.6]])
    flow = integrate_flow(random_velocity(), seeds, 8)
    assert flow.X.shape == (9, 2, 2)
    assert flow.steps == 8
    assert np.allclose(flow.times, np.linspace(0.0, 1.0, 9))
    assert np.array_equal(flow.X[0], seeds)


def test_rk4_converges_faster_than_rk2() -> None:
    seeds = np.array([[0.3, 0.5]])
    exact = logistic_end(0.3, amplitude=2.0)
    rk2 = integrate_flow(logistic_model(2.0), seeds, 20, "RK2").endpoints[0, 0]
    rk4 = integrate_flow(logistic_model(2.0), seeds, 20, "RK4").endpoints[0, 0]
    assert abs(rk4 - exact) < abs(rk2 - exact)
    assert abs(rk4 - exact) < 1e-4


def test_rk4_error_decays_at_fourth_order() -> None:
    seeds = np.array([[0.2, 0.5], [0.5, 0.5], [0.8, 0.5]])
    exact = logistic_end(seeds[:, 0], amplitude=8.0)
    steps = np.array([100, 200, 400, 800])
    errors = [
        np.abs(integrate_flow(logistic_model(8.0), seeds, int(K), "RK4").endpoints[:, 0] - exact).max()
        for K in steps
    ]
    slope = -np.polyfit(np.log(steps), np.log(errors), 1)[0]
    assert slope >= 3.7


def test_divergence_free_fields_keep_unit_jacobian() -> None:
    rng = np.random.default_rng(11)
    seeds = rng.uniform(0.02, 0.98, size=(100, 2))
    for _ in range(5):
        alpha, beta = rng.uniform(-0.5, 0.5, size=2)
        v = StreamFunctionVelocity(scale=rng.uniform(10.0, 30.0), alpha=alpha, beta=beta)
        flow = integrate_flow(v, seeds, 1000, with_gradient=True, with_logdet=True)
        assert np.abs(flow.end_logdet).max() <= 1e-8
        assert np.abs(np.linalg.det(flow.end_gradient) - 1.0).max() <= 1e-6
        assert np.abs(flow.endpoints - seeds).max() > 1e-3


def test_stream_function_field_lies_in_the_degree_four_basis() -> None:
    v = StreamFunctionVelocity(scale=20.0, alpha=0.3, beta=-0.2)
    basis = build_tangential_polynomial_basis(unit_square(), 4)
    points = unit_square().grid(15)
    design = basis.evaluate(points).reshape(basis.size, -1).T
    coefficients = np.linalg.lstsq(design, v.velocity(points, 0.0).reshape(-1), rcond=None)[0]
    fitted = VelocityModel(basis, coefficients)
    check = np.random.default_rng(12).uniform(0.0, 1.0, size=(50, 2))
    assert np.abs(fitted.velocity(check, 0.0) - v.velocity(check, 0.0)).max() <= 1e-8
    divergence = np.trace(fitted.velocity_grad(check, 0.0), axis1=1, axis2=2)
    assert np.abs(divergence).max() <= 1e-8
    single = np.trace(basis.evaluate_grad(check)[0], axis1=1, axis2=2)
    assert np.abs(single).max() > 1e-3


def test_boundary_stays_invariant() -> None:
    v = random_velocity(seed=4, amplitude=1.0)
    seeds = np.vstack([facet.sample(6) for facet in unit_square().facets])
    ends = integrate_flow(v, seeds, 200).endpoints
    assert unit_square().boundary_distance(ends).max() < 1e-12


def test_jacobian_determinant_matches_logdet() -> None:
    v = random_velocity(seed=5)
    flow = integrate_flow(v, unit_square().grid(5), 400, with_gradient=True, with_logdet=True)
    assert flow.determinant_mismatch() < 1e-6
    assert np.all(np.linalg.det(flow.end_gradient) > 0)


def test_logistic_jacobian_closed_form() -> None:
    seeds = np.array([[0.25, 0.5], [0.75, 0.1]])
    flow = jacobian_logdet(logistic_model(), seeds, 500)
    x0 = seeds[:, 0]
    expected = np.e / (1.0 - x0 + x0 * np.e) ** 2
    assert np.allclose(np.exp(flow.end_logdet), expected, rtol=1e-8)


def test_inverse_map_round_trip() -> None:
    v = random_velocity(seed=6)
    seeds = unit_square().grid(6)
    ends = integrate_flow(v, seeds, 500).endpoints
    back = inverse_map(v, ends, 500)
    assert np.abs(back - seeds).max() < 1e-6


def test_threads_give_identical_results() -> None:
    v = random_velocity(seed=7)
    seeds = unit_square().grid(7)
    serial = integrate_flow(v, seeds, 30, with_gradient=True, with_logdet=True)
    threaded = integrate_flow(v, seeds, 30, with_gradient=True, with_logdet=True, threads=4)
    assert np.allclose(serial.X, threaded.X, rtol=0.0, atol=1e-14)
    assert np.allclose(serial.gradX, threaded.gradX, rtol=0.0, atol=1e-13)
    assert np.allclose(serial.logJ, threaded.logJ, rtol=0.0, atol=1e-13)


def test_chunk_bounds_cover_range_in_order() -> None:
    bounds = chunk_bounds(10, 3)
    assert bounds[0][0] == 0 and bounds[-1][1] == 10
    assert all(a[1] == b[0] for a, b in zip(bounds, bounds[1:]))
    assert chunk_bounds(2, 8) == [(0, 1), (1, 2)]


def test_bad_inputs() -> None:
    with pytest.raises(ValueError):
        integrate_flow(logistic_model(), np.array([[0.5, 0.5]]), 0)
    with pytest.raises(DomainError):
        integrate_flow(logistic_model(), np.array([[1.5, 0.5]]), 10)
    with pytest.raises(ValueError):
        integrate_flow(logistic_model(), np.array([[0.5, 0.5]]), 10, "Euler")


def test_boundary_leak_is_reported() -> None:
    # a huge step on a strong field overshoots the right facet
    flow_field = logistic_model(40.0)
    with pytest.raises(BoundaryLeakError) as info:
        integrate_flow(flow_field, np.array([[0.5, 0.5]]), 1, "RK2")
    assert info.value.seed_index == 0
    assert info.value.distance > 1e-6


def test_velocity_on_non_rectangular_domain_needs_rectangle() -> None:
    triangle = PolygonalDomain(np.array([(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)]))
    with pytest.raises(DomainError):
        build_tangential_polynomial_basis(triangle, 1)


def test_continuity_bound_holds() -> None:
    v = random_velocity(seed=8)
    w = random_velocity(seed=9)
    gap = continuity_gap(v, w, unit_square().grid(5), 200)
    assert gap.lipschitz > 0
    assert gap.holds()
    identical = continuity_gap(v, v, unit_square().grid(5), 50)
    assert identical.lhs == 0.0 and identical.rhs == 0.0


def test_space_time_velocity_is_time_dependent() -> None:
    spatial = build_tangential_polynomial_basis(unit_square(), 0, normalize=False)
    v = VelocityModel(tensorize_time(spatial, 1), [0.0, 1.0, 0.0, 0.0])
    point = np.array([[0.5, 0.5]])
    assert np.allclose(v.velocity(point, 0.0), [[-0.25, 0.0]])
    assert np.allclose(v.velocity(point, 1.0), [[0.25, 0.0]])
    # the flow of an odd-in-time field returns x1 = 1/2 to itself
    assert integrate_flow(v, point, 200).endpoints[0, 0] == pytest.approx(0.5, abs=1e-7)


def test_flow_frame_has_one_row_per_seed_and_node(tmp_path) -> None:
    flow = jacobian_logdet(logistic_model(), np.array([[0.2, 0.2], [0.4, 0.8]]), 4)
    path = flow.write_csv(tmp_path / "flow.csv")
    df = pd.read_csv(path)
    assert list(df.columns) == ["seed_id", "t", "x1", "x2", "logJ"]
    assert len(df) == 10
    assert df.loc[df["seed_id"] == 1, "x2"].eq(0.8).all()
