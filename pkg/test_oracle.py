"""
Tests for the Picard oracle: grid helpers, fixed points and the heat term.
"""
import numpy as np
import pytest

from navier_cascade.errors import DomainError
from navier_cascade.models.config import OracleConfig
from navier_cascade.oracle import (
    FieldGrid,
    _heat_term,
    apply_picard_map,
    compare_mc_oracle,
    heat_by_quadrature,
    picard_solve,
)
from navier_cascade.verify import CHECK_POINTS, reference_spec

RULES = {"n_radial": 8, "n_time_quad": 2}


def test_volume_weights_cover_the_box():
    grid = FieldGrid.box(1.5, 7, 1.0, 2)
    assert grid.volume_weights().sum() == pytest.approx(3.0 ** 3)
    assert grid.shape == (7, 7, 7, 3)
    assert grid.nodes().shape == (7 ** 3, 3)


def test_from_config_refines_space_and_rules():
    config = OracleConfig(n_space=5, n_time=2, n_radial=16, n_time_quad=4)
    coarse = FieldGrid.from_config(config)
    fine = FieldGrid.from_config(config, refine=2)
    assert fine.axis.size == 9
    np.testing.assert_allclose(fine.axis[::2], coarse.axis)
    assert (fine.n_radial, fine.n_time_quad) == (32, 8)
    np.testing.assert_array_equal(fine.times, coarse.times)


def test_interpolation_is_exact_for_affine_fields():
    grid = FieldGrid.box(2.0, 5, 1.0, 2)
    nodes = grid.nodes()
    values = np.zeros_like(grid.values)
    for k, t in enumerate(grid.times):
        field = nodes @ np.array([[1.0, 0.0, 2.0], [0.0, -1.0, 0.0], [0.5, 0.0, 1.0]]) + t
        values[:, :, :, k, :] = field.reshape(5, 5, 5, 3)
    grid = grid.with_values(values)
    points = np.array([[0.3, -1.1, 0.7], [1.9, 1.9, -2.0]])
    expected = points @ np.array([[1.0, 0.0, 2.0], [0.0, -1.0, 0.0], [0.5, 0.0, 1.0]]) + 0.3
    np.testing.assert_allclose(grid.interpolate(points, 0.3, lambda p, t: np.full_like(p, np.nan)), expected,
                               atol=1e-12)


def test_interpolation_uses_outside_values_off_the_box():
    grid = FieldGrid.box(1.0, 3, 1.0, 1)
    out = grid.interpolate(np.array([[0.0, 0.0, 0.0], [5.0, 0.0, 0.0]]), 0.5, lambda p, t: np.full_like(p, 7.0))
    np.testing.assert_array_equal(out[0], np.zeros(3))
    np.testing.assert_array_equal(out[1], np.full(3, 7.0))


def test_zero_data_is_a_fixed_point(zero_spec):
    grid = FieldGrid.box(2.0, 3, 0.5, 1, **RULES)
    solved, sweeps = picard_solve(zero_spec, grid, 3)
    assert np.max(np.abs(solved.values)) == 0.0
    assert len(sweeps) == 1
    assert sweeps[0].sup_change == 0.0


def test_linear_regime_stays_close_to_the_heat_term():
    spec = reference_spec("linear_regime")
    grid = FieldGrid.box(2.0, 5, 0.5, 1, **RULES)
    solved, sweeps = picard_solve(spec, grid, 2)
    heat = _heat_term(spec, grid.nodes(), 0.5).reshape(5, 5, 5, 3)
    gap = np.max(np.abs(solved.values[:, :, :, -1, :] - heat))
    assert gap <= 0.1 * np.max(np.abs(heat))
    assert all(sweep.max_u_over_h <= spec.epsilon for sweep in sweeps)


def test_picard_map_rejects_times_off_the_grid(zero_spec):
    grid = FieldGrid.box(2.0, 3, 0.5, 1, **RULES)
    with pytest.raises(DomainError):
        apply_picard_map(grid, zero_spec, np.zeros((1, 3)), 0.0)
    with pytest.raises(DomainError):
        apply_picard_map(grid, zero_spec, np.zeros((1, 3)), 0.75)


def test_picard_solve_needs_one_sweep(zero_spec):
    with pytest.raises(DomainError):
        picard_solve(zero_spec, FieldGrid.box(2.0, 3, 0.5, 1), 0)


@pytest.mark.slow
def test_heat_quadrature_matches_closed_form(small_spec):
    x = np.array([0.8, -0.3, 0.4])
    closed = small_spec.data.u0.heat_at(x, 2.0 * small_spec.nu * 0.5)
    numeric = heat_by_quadrature(small_spec.data.u0, x, 0.5, small_spec.nu)
    assert np.linalg.norm(closed - numeric) <= 1e-5 * np.linalg.norm(closed)


def test_heat_quadrature_rejects_nonpositive_time(small_spec):
    with pytest.raises(DomainError):
        heat_by_quadrature(small_spec.data.u0, np.ones(3), 0.0, small_spec.nu)


def test_comparison_needs_oracle_horizon_covering_check_points(small_spec):
    with pytest.raises(DomainError):
        compare_mc_oracle(CHECK_POINTS, small_spec, 100, 0, OracleConfig(t_max=0.1))
