"""
Tests for the exact samplers: branch type, waiting times, jump pairs,
the h-Brownian endpoint and stream addressing.
"""
import math
import pickle

import numpy as np
import pytest
from scipy import special, stats

from navier_cascade.errors import DomainError, SamplerHealthError
from navier_cascade.kernels import make_h0_pair, make_H_pair
from navier_cascade.kernels.profiles import BallProfile
from navier_cascade.samplers import (
    TRAP,
    AcceptanceMonitor,
    Branch,
    EnvelopeSampler,
    PowerLawPiece,
    RngStream,
    kappa_probabilities,
    rejection_loop,
    sample_hbm_endpoint,
    sample_kappa,
    sample_tau0,
    sample_tau0_first_passage,
    sample_tau1,
    sample_waiting_time,
    sample_Y_given_Z,
    sample_Z,
    stream_seed,
)
from navier_cascade.verify import chi_square, sampler_histograms, tau0_cdf, tau1_cdf
from navier_cascade.vecgeom import norm

N = 20_000


def test_kappa_probabilities_split_the_branching_event():
    probs = kappa_probabilities(0.3)
    assert probs.sum() == pytest.approx(1.0)
    assert probs[:3].sum() == pytest.approx(0.3)
    np.testing.assert_allclose(probs[:3] / probs[0], [1.0, 4.0, 6.0])


@pytest.mark.parametrize("p", [0.0, 0.6])
def test_kappa_rejects_p_outside_range(p, rng):
    with pytest.raises(DomainError):
        sample_kappa(p, rng)


def test_kappa_frequencies(rng):
    p = 0.5
    draws = np.array([sample_kappa(p, rng) for _ in range(N)])
    counts = np.bincount(draws, minlength=6)[1:]
    assert stats.chisquare(counts, N * kappa_probabilities(p)).pvalue > 1e-3


def test_tau1_matches_its_law(rng):
    a, nu = 1.0, 0.5
    samples = np.array([sample_tau1(a, nu, rng) for _ in range(N)])
    assert stats.kstest(samples, lambda s: tau1_cdf(s, a, nu)).pvalue > 1e-3


def test_tau0_matches_its_law(rng):
    a, nu = 0.7, 1.0
    samples = np.array([sample_tau0(a, nu, rng) for _ in range(N)])
    assert stats.kstest(samples, lambda s: tau0_cdf(s, a, nu)).pvalue > 1e-3


def test_tau0_first_passage_construction_has_the_same_law(make_rng):
    a, nu = 1.0, 1.0
    rng = make_rng(2)
    built = np.array([sample_tau0_first_passage(a, nu, rng) for _ in range(N)])
    assert stats.kstest(built, lambda s: tau0_cdf(s, a, nu)).pvalue > 1e-3


def test_waiting_time_rejects_unknown_kappa(rng):
    with pytest.raises(DomainError):
        sample_waiting_time(6, np.ones(3), np.ones(3), 1.0, rng)


def test_y_given_z_radius_law(rng):
    z = np.array([0.0, 2.0, 0.0])
    ratios = np.array([norm(sample_Y_given_Z(z, rng)) / 2.0 for _ in range(N)])
    assert ratios.max() < 1.0
    # |Y|/|Z| has CDF q²
    assert stats.kstest(ratios, lambda q: np.clip(q, 0.0, 1.0) ** 2).pvalue > 1e-3


def test_y_given_z_rejects_origin(rng):
    with pytest.raises(DomainError):
        sample_Y_given_Z(np.zeros(3), rng)


def test_sample_z_dispatches_on_branch(make_rng):
    pair = make_h0_pair(BallProfile(1.0))
    x = np.array([2.0, 0.0, 0.0])
    z = sample_Z(x, pair, Branch.FORCING, make_rng(3))
    # the forcing draw lands X - Z inside the unit ball
    assert norm(x - z) <= 1.0
    np.testing.assert_array_equal(z, pair.sample_z_forcing(x, make_rng(3)))


@pytest.mark.parametrize("sampler", ["z_bilinear", "z_forcing", "endpoint"])
def test_binned_samplers_pass_chi_square(sampler):
    rows = [row for row in sampler_histograms(4000, seed=3) if row[0].split(":")[0] == sampler]
    assert rows
    assert chi_square(rows) > 1e-3


def test_endpoint_trap_frequency(rng):
    pair = make_h0_pair()
    x = np.array([1.0, 0.0, 0.0])
    n = 4000
    # |x| = √(2νt)
    trapped = sum(sample_hbm_endpoint(x, 0.5, pair, 1.0, rng) is TRAP for _ in range(n))
    expected = float(special.erfc(1.0 / math.sqrt(2.0)))
    assert expected == pytest.approx(0.317311, abs=1e-6)
    assert abs(trapped / n - expected) <= 4.0 * math.sqrt(expected * (1.0 - expected) / n)


def test_endpoint_requires_excessive_pair(rng):
    with pytest.raises(DomainError):
        sample_hbm_endpoint(np.ones(3), 0.5, make_H_pair(), 1.0, rng)


def test_endpoint_rejects_nonpositive_time(rng):
    with pytest.raises(DomainError):
        sample_hbm_endpoint(np.ones(3), 0.0, make_h0_pair(), 1.0, rng)


def test_trap_survives_pickling():
    assert pickle.loads(pickle.dumps(TRAP)) is TRAP


def test_streams_are_reproducible_and_independent():
    stream = RngStream(stream_seed(5, 1, 2))
    first = stream.child(0).generator().random(4)
    np.testing.assert_array_equal(first, RngStream(stream.seed, (0,)).generator().random(4))
    assert not np.array_equal(first, stream.child(1).generator().random(4))
    assert stream_seed(5, 1, 2) != stream_seed(5, 2, 1)
    assert stream_seed(5) == stream_seed(5)


def test_monitor_checks_full_windows_only():
    monitor = AcceptanceMonitor("window", window=10_000, min_rate=1e-3)
    monitor.record(9_999, 0)
    monitor.record(1, 10)
    assert monitor.proposed == 0
    monitor.record(5_000, 4)
    with pytest.raises(SamplerHealthError):
        monitor.record(5_000, 5)
    # the window restarts after a failure
    assert monitor.proposed == monitor.accepted == 0


def _ball_envelope(label: str, level: float) -> EnvelopeSampler:
    piece = PowerLawPiece(0.0, 1.0, 1.0, 0.0)
    return EnvelopeSampler([(np.zeros(3), piece)], lambda z: level * piece.value(norm_rows(z)), label=label)


def norm_rows(z: np.ndarray) -> np.ndarray:
    return np.sqrt(np.sum(z * z, axis=1))


def test_envelope_sampler_flags_rare_but_nonzero_acceptance(rng):
    sampler = _ball_envelope("rare envelope", 1e-4)
    with pytest.raises(SamplerHealthError):
        for _ in range(50):
            sampler.sample(rng)


def test_envelope_sampler_accepts_a_matching_target(rng):
    sampler = _ball_envelope("matching envelope", 0.5)
    draws = np.array([sampler.sample(rng) for _ in range(6_000)])
    assert np.all(norm_rows(draws) < 1.0)


def test_single_proposal_loop_flags_low_acceptance(rng):
    with pytest.raises(SamplerHealthError):
        for _ in range(100):
            rejection_loop(rng.random, lambda v: v < 2e-4, "rare single proposals")
