"""
Tests for kernel pairs: built-in constants, closed forms, the closure
algebra, config dispatch and the admissibility checks.
"""
import math

import numpy as np
import pytest
from pydantic import ValidationError
from scipy import special

from navier_cascade.errors import DomainError
from navier_cascade.quadrature import inverse_distance_overlap
from navier_cascade.fixtures import BallVortexForcing, GaussianVortex, ZeroForcing
from navier_cascade.kernels import (
    AdmissiblePair,
    build_kernel,
    cascade_multipliers,
    check_admissibility,
    default_check_points,
    fit_to_hypotheses,
    kernel_algebra,
    make_h0_pair,
    make_h1_pair,
    make_H_pair,
    make_Hp_pair,
    rescale,
    standardize,
)
from navier_cascade.kernels.algebra import convolve, equivalent, geo_mean, minimum, mixture, rotate, scale, translate
from navier_cascade.kernels.base import KernelPair
from navier_cascade.kernels.profiles import BallProfile, InverseSquareProfile, ProfileConfig
from navier_cascade.kernels.radial import HEAT_RATIO_H, SMOOTHING_DENSITY
from navier_cascade.models.config import AdmissibilityMode, KernelConfig

X = np.array([0.6, -0.8, 0.5])


def test_h0_constants():
    pair = make_h0_pair(BallProfile(1.0))
    assert pair.gamma == pytest.approx(math.pi ** 3)
    assert pair.gamma_tilde == pytest.approx(4.0 * math.pi ** 2 / 3.0)
    assert pair.excessive
    assert pair.has_endpoint_sampler


def test_h0_forcing_free_without_profile():
    pair = make_h0_pair()
    assert pair.forcing_free
    assert pair.newton_potential(X) == 0.0
    with pytest.raises(DomainError):
        pair.sample_z_forcing(X, np.random.default_rng(0))


def test_h0_square_potential_closed_form():
    pair = make_h0_pair()
    a = np.linalg.norm(X)
    assert pair.square_potential(X) == pytest.approx(math.pi ** 3 / a, rel=1e-14)


@pytest.mark.slow
def test_h0_square_potential_quadrature_matches_constant():
    pair = make_h0_pair()
    assert pair.square_potential_quadrature(X) / pair.h_at(X) == pytest.approx(math.pi ** 3, rel=5e-3)


def test_h0_heat_ratio_is_one_dimensional_normal():
    pair = make_h0_pair()
    a = np.linalg.norm(X)
    variance = 0.4
    ratio = pair.heat_convolution(X, variance) / pair.h_at(X)
    assert ratio == pytest.approx(float(special.erf(a / math.sqrt(2.0 * variance))), rel=1e-14)
    assert ratio <= 1.0


def test_H_pair_constants():
    pair = make_H_pair()
    assert pair.gamma == pytest.approx(math.pi ** 2)
    assert not pair.excessive
    assert pair.heat_ratio_M == pytest.approx(HEAT_RATIO_H)
    assert pair.square_potential(X) == pytest.approx(math.pi ** 2 / (1.0 + X @ X))


@pytest.mark.parametrize("p", [1.0, 2.5])
def test_Hp_pair_rejects_exponent_outside_range(p):
    with pytest.raises(DomainError):
        make_Hp_pair(p)


def test_h1_is_bounded_and_matches_closed_form():
    pair = make_h1_pair()
    a = np.linalg.norm(X)
    assert pair.h_at(np.zeros(3)) == pytest.approx(1.0)
    assert pair.h_at(X) == pytest.approx(1.0 / (1.0 + a), rel=1e-6)
    assert pair.forcing_free
    assert pair.excessive


def test_profiles_closed_form_newton_potentials():
    ball = BallProfile(2.0)
    assert ball.newton_potential(3.0) == pytest.approx(4.0 * math.pi * 8.0 / 9.0)
    # continuous at the boundary
    assert ball.newton_potential(2.0) == pytest.approx(2.0 * math.pi * (4.0 - 4.0 / 3.0))
    inverse_square = InverseSquareProfile()
    assert inverse_square.newton_potential(1.0) == pytest.approx(4.0 * math.pi * math.log(2.0))


def test_profile_config_rejects_unknown_type():
    with pytest.raises(ValueError):
        ProfileConfig(type="cube").build()


def test_rescale_constants_and_folding():
    pair = make_h0_pair(BallProfile(1.0))
    once = rescale(rescale(pair, 2.0, 3.0), 0.5, 2.0)
    assert once.gamma == pytest.approx(pair.gamma)
    assert once.gamma_tilde == pytest.approx(6.0 * pair.gamma_tilde)
    assert once.h_at(X) == pytest.approx(pair.h_at(X))


def test_fit_to_hypotheses_hits_the_bounds():
    nu, p = 0.7, 0.3
    fitted = fit_to_hypotheses(make_h0_pair(BallProfile(1.0)), nu, p)
    assert fitted.gamma == pytest.approx(8.0 * math.pi * nu * p / 11.0, rel=1e-13)
    assert fitted.gamma_tilde == pytest.approx(2.0 * math.pi * nu * (1.0 - p), rel=1e-13)
    m, m_tilde = cascade_multipliers(fitted, nu, X)
    assert 11.0 * m / p <= 1.0 + 1e-12
    assert 4.0 * m_tilde / (1.0 - p) <= 1.0 + 1e-12


def test_standardize_gives_unit_constants():
    pair = standardize(make_h0_pair(InverseSquareProfile()))
    assert pair.gamma == pytest.approx(1.0)
    assert pair.gamma_tilde == pytest.approx(1.0)


def test_translate_and_scale_relations():
    pair = make_h0_pair()
    mu = np.array([1.0, 2.0, -1.0])
    assert translate(pair, mu).h_at(X + mu) == pytest.approx(pair.h_at(X))
    scaled = scale(pair, 2.0)
    assert scaled.h_at(X) == pytest.approx(2.0 * pair.h_at(2.0 * X))
    assert scaled.gamma == pytest.approx(pair.gamma)


def test_rotate_rejects_non_orthogonal_matrix():
    with pytest.raises(DomainError):
        rotate(make_h0_pair(), np.diag([1.0, 2.0, 1.0]))


def test_mixture_constants_and_weights():
    first = make_h0_pair(BallProfile(1.0))
    second = translate(make_h0_pair(BallProfile(1.0)), [2.0, 0.0, 0.0])
    mixed = mixture([first, second], [0.25, 0.75])
    assert mixed.gamma == pytest.approx(first.gamma)
    assert mixed.h_at(X) == pytest.approx(0.25 * first.h_at(X) + 0.75 * second.h_at(X))
    with pytest.raises(DomainError):
        mixture([first, second], [0.5, 0.6])


def test_inverse_distance_overlap_reductions():
    a = np.array([0.3, -1.2, 0.4])
    b = np.array([1.5, 0.2, -0.7])
    assert inverse_distance_overlap(a, a) == pytest.approx(math.pi ** 3 / np.linalg.norm(a), rel=1e-9)
    assert inverse_distance_overlap(a, b) == pytest.approx(inverse_distance_overlap(b, a), rel=1e-12)
    turn = np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
    assert inverse_distance_overlap(turn @ a, turn @ b) == pytest.approx(inverse_distance_overlap(a, b), rel=1e-10)
    # Cauchy-Schwarz against the diagonal terms
    assert inverse_distance_overlap(a, b) < math.sqrt(inverse_distance_overlap(a, a) * inverse_distance_overlap(b, b))


def test_point_charge_follows_the_wrappers():
    y = np.array([0.4, 1.1, -0.3])
    turn = np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
    for pair in (
        translate(make_h0_pair(), [1.0, 2.0, 0.0]),
        scale(translate(make_h0_pair(), [1.0, 0.0, 0.0]), 2.0),
        rotate(translate(make_h0_pair(), [0.0, 1.0, 0.0]), turn),
        rescale(translate(make_h0_pair(), [0.0, 0.0, 1.0]), 3.0),
    ):
        k, c = pair.point_charge()
        assert pair.h_at(y) == pytest.approx(k / np.linalg.norm(y - c), rel=1e-12)
    assert make_H_pair().point_charge() is None


def test_mixture_of_one_center_keeps_the_h0_potential():
    mixed = mixture([make_h0_pair(), make_h0_pair()], [0.3, 0.7])
    assert mixed.square_potential(X) == pytest.approx(math.pi ** 3 / np.linalg.norm(X), rel=1e-9)


def test_mixture_kernel_multipliers_avoid_volume_quadrature(monkeypatch):
    def no_volume_quadrature(self, x, **grid):
        raise AssertionError("volume quadrature used")

    monkeypatch.setattr(KernelPair, "square_potential_quadrature", no_volume_quadrature)
    params = {"centers": [[0, 0, 0], [1.5, 0, 0]], "weights": [0.5, 0.5]}
    pair = build_kernel(KernelConfig(type="mixture", params=params))
    m, _ = pair.multipliers(1.0, X)
    assert 0.0 < m <= pair.gamma / (8.0 * math.pi) * (1.0 + 1e-9)


@pytest.mark.slow
def test_mixture_square_potential_matches_volume_quadrature():
    mixed = mixture([make_h0_pair(), translate(make_h0_pair(), [2.0, 0.0, 0.0])], [0.25, 0.75])
    assert mixed.square_potential(X) == pytest.approx(mixed.square_potential_quadrature(X), rel=5e-3)


def test_minimum_installs_the_larger_constants():
    low = rescale(make_h0_pair(), 0.5)
    high = make_H_pair()
    both = minimum(low, high)
    assert both.gamma == max(low.gamma, high.gamma)
    assert both.h_at(X) == pytest.approx(min(low.h_at(X), high.h_at(X)))


def test_convolve_requires_forcing_free_h0():
    with pytest.raises(DomainError):
        convolve(make_h0_pair(BallProfile(1.0)), SMOOTHING_DENSITY)


def test_kernel_algebra_dispatch():
    pair = kernel_algebra("rescale", make_h0_pair(), c=2.0)
    assert pair.gamma == pytest.approx(2.0 * math.pi ** 3)
    with pytest.raises(DomainError):
        kernel_algebra("shear", make_h0_pair())
    with pytest.raises(DomainError):
        kernel_algebra("translate", make_h0_pair(), sigma=1.0)


def test_build_kernel_from_config():
    config = KernelConfig(type="h0", params={"forcing_profile": {"type": "ball", "radius": 2.0}},
                          translate=[1.0, 0.0, 0.0])
    pair = build_kernel(config)
    assert pair.h_at(np.array([2.0, 0.0, 0.0])) == pytest.approx(1.0)
    assert pair.gamma_tilde == pytest.approx(4.0 * math.pi ** 2 * 8.0 / 3.0)


def test_build_kernel_validates_params():
    with pytest.raises(ValidationError):
        build_kernel(KernelConfig(type="Hp", params={"exponent": 3.0}))
    with pytest.raises(ValidationError):
        build_kernel(KernelConfig(type="mixture", params={"centers": [[0, 0, 0]], "weights": [0.5, 0.5]}))


def test_admissibility_passes_for_small_data():
    nu, p = 1.0, 0.5
    pair = fit_to_hypotheses(make_h0_pair(BallProfile(1.0)), nu, p)
    data = AdmissiblePair(GaussianVortex(0.004), BallVortexForcing(0.0007), 0.5, 0.5, 0.2)
    report = check_admissibility(data, pair, AdmissibilityMode.POINTWISE, default_check_points(), nu=nu)
    assert report.passed
    assert report.u_ratio <= report.u_bound
    assert report.g_ratio <= report.g_bound


def test_admissibility_reports_violation_without_raising():
    pair = fit_to_hypotheses(make_h0_pair(), 1.0, 0.5)
    data = AdmissiblePair(GaussianVortex(1.0), ZeroForcing(), 0.5, 0.5, 0.2)
    report = check_admissibility(data, pair, AdmissibilityMode.HEAT, default_check_points(), nu=1.0)
    assert not report.passed
    assert report.worst_point is not None


def test_admissibility_bounded_heat_divides_by_M():
    pair = make_H_pair()
    data = AdmissiblePair.zero()
    report = check_admissibility(data, pair, AdmissibilityMode.BOUNDED_HEAT, default_check_points())
    assert report.u_bound == pytest.approx(0.5 * 0.2 / HEAT_RATIO_H)
    assert report.passed


def test_geo_mean_constants_and_values():
    first, second = make_h0_pair(), make_H_pair()
    mean = geo_mean(first, second, 0.25)
    assert mean.gamma == pytest.approx(first.gamma ** 0.25 * second.gamma ** 0.75)
    assert mean.h_at(X) == pytest.approx(first.h_at(X) ** 0.25 * second.h_at(X) ** 0.75)
    assert not mean.excessive
    with pytest.raises(DomainError):
        geo_mean(first, second, 1.0)


def test_equivalent_inflates_constants_and_checks_the_claim():
    base = make_h0_pair(BallProfile(1.0))
    claimed = equivalent(base, make_h1_pair(), 2.0)
    assert claimed.gamma == pytest.approx(8.0 * base.gamma)
    assert claimed.gamma_tilde == pytest.approx(2.0 * base.gamma_tilde)
    # (1+r)^-1 against r^-1 differs by more than 2 near the origin and far out
    assert claimed.check_equivalence(default_check_points()) > 1.0
    with pytest.raises(DomainError):
        equivalent(base, make_h1_pair(), 0.5)
