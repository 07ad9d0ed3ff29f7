"""
Tests for the heat kernel, the Gaussian ball mass, Γ and the quadrature rules.
"""
import math

import numpy as np
import pytest

from navier_cascade import quadrature
from navier_cascade.errors import DomainError
from navier_cascade.heat import (
    SERIES_SWITCH,
    ball_mass,
    ball_mass_array,
    gamma_kernel,
    heat_kernel,
    heat_kernel_radial,
)
from navier_cascade.oracle import gamma_fourier


def test_heat_kernel_has_unit_mass():
    variance = 0.7
    mass = quadrature.quad(lambda r: 4.0 * math.pi * r * r * float(heat_kernel_radial(r, variance)), 0.0, math.inf)
    assert mass == pytest.approx(1.0, rel=1e-9)


def test_heat_kernel_rejects_nonpositive_time():
    with pytest.raises(DomainError):
        heat_kernel(np.ones(3), 0.0)


@pytest.mark.parametrize("r, nu_s", [(0.3, 0.25), (1.0, 1.0), (4.0, 0.5)])
def test_ball_mass_matches_radial_quadrature(r, nu_s):
    expected = quadrature.quad(lambda rho: 4.0 * math.pi * rho * rho * float(heat_kernel_radial(rho, 2.0 * nu_s)),
                               0.0, r)
    assert ball_mass(r, nu_s) == pytest.approx(expected, rel=1e-8)


def test_ball_mass_limits_and_series_switch():
    assert ball_mass(0.0, 1.0) == 0.0
    assert ball_mass(1e3, 1.0) == pytest.approx(1.0, abs=1e-15)
    # both branches agree across the switch
    below = ball_mass(2.0 * SERIES_SWITCH * 0.999, 1.0)
    above = ball_mass(2.0 * SERIES_SWITCH * 1.001, 1.0)
    assert above > below
    assert above / below == pytest.approx(1.001 ** 3 / 0.999 ** 3, rel=1e-5)


def test_ball_mass_array_matches_scalar():
    radii = np.array([0.0, 1e-6, 0.1, 1.0, 10.0])
    np.testing.assert_allclose(ball_mass_array(radii, 0.3), [ball_mass(r, 0.3) for r in radii], rtol=1e-12)


def test_ball_mass_rejects_negative_radius():
    with pytest.raises(DomainError):
        ball_mass(-1.0, 1.0)


def test_gamma_trace_is_twice_the_heat_kernel(rng):
    nu = 0.8
    for _ in range(50):
        x = rng.standard_normal(3)
        s = 10.0 ** rng.uniform(-2, 1)
        g = gamma_kernel(x, s, nu)
        assert abs(np.trace(g) - 2.0 * heat_kernel(x, 2.0 * nu * s)) <= 1e-12 * np.abs(g).max()


def test_gamma_kernel_is_symmetric(rng):
    g = gamma_kernel(rng.standard_normal(3), 0.4, 1.0)
    np.testing.assert_array_equal(g, g.T)


def test_gamma_kernel_rejects_origin():
    with pytest.raises(DomainError):
        gamma_kernel(np.zeros(3), 1.0, 1.0)


@pytest.mark.parametrize("x, s", [((1.0, 0.5, 0.0), 0.5), ((0.3, -0.2, 0.9), 0.25)])
def test_gamma_fourier_matches_direct_form(x, s):
    direct = gamma_kernel(np.array(x), s, 1.0)
    fourier = gamma_fourier(np.array(x), s, 1.0)
    assert np.linalg.norm(direct - fourier) / np.linalg.norm(direct) < 0.02


def test_time_nodes_are_exact_for_singular_polynomials():
    s, w = quadrature.time_nodes(2.0, 6)
    assert np.all((s > 0) & (s < 2.0))
    # ∫₀² s^(-1/2) ds = 2√2, exact for the Gauss-Jacobi rule
    assert np.sum(w / np.sqrt(s)) == pytest.approx(2.0 * math.sqrt(2.0), rel=1e-12)
    assert np.sum(w * np.sqrt(s)) == pytest.approx(2.0 / 3.0 * 2.0 ** 1.5, rel=1e-12)


def test_sphere_grid_weights_sum_to_sphere_area():
    dirs, weights = quadrature.sphere_grid(8, 16)
    assert weights.sum() == pytest.approx(4.0 * math.pi, rel=1e-13)
    np.testing.assert_allclose(np.linalg.norm(dirs, axis=1), 1.0, rtol=1e-14)
    # second moments of the uniform law are I/3
    second = (dirs * weights[:, None]).T @ dirs / (4.0 * math.pi)
    np.testing.assert_allclose(second, np.eye(3) / 3.0, atol=1e-13)


def test_singular_volume_integral_of_gaussian():
    center = np.array([0.5, 0.0, 0.0])
    value = quadrature.singular_volume_integral(
        lambda y: heat_kernel_radial(np.linalg.norm(y - center, axis=1), 0.5),
        [np.zeros(3), center], scale=1.0, n_radial=120, n_theta=16, n_phi=32, span=1e4,
    )
    assert float(value) == pytest.approx(1.0, rel=1e-4)
