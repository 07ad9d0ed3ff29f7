"""
Tests for cascade evaluation and problem construction.
"""
import numpy as np
import pytest

from navier_cascade.cascade import (
    ProblemSpec,
    apply_B,
    apply_C,
    build_problem_spec,
    chi0,
    eval_Upsilon,
    eval_Xi,
    evaluate_cascade,
    forcing_ratio,
    m0,
)
from navier_cascade.errors import ConfigError, DataError, DomainError
from navier_cascade.fixtures import BallVortexForcing, GaussianVortex
from navier_cascade.kernels import AdmissiblePair
from navier_cascade.models.config import CascadeMode
from navier_cascade.samplers import TRAP, RngStream, stream_seed
from navier_cascade.verify import CHECK_POINTS, reference_config, reference_spec

X = np.array([1.0, 0.0, 0.0])


def _stream(*keys: int) -> RngStream:
    return RngStream(stream_seed(99, *keys))


def test_zero_data_gives_zero(zero_spec):
    for i in range(50):
        outcome = eval_Xi(X, 0.5, zero_spec, _stream(i))
        np.testing.assert_array_equal(outcome.value, np.zeros(3))


def test_depth_cap_zero_keeps_the_data_term(small_spec):
    for i in range(30):
        outcome = evaluate_cascade(X, 0.5, small_spec, _stream(i), depth_cap=0, record=True)
        assert outcome.nodes == 1
        np.testing.assert_allclose(outcome.value, m0(X, 0.5, small_spec))
        (root,) = outcome.ensembles
        assert outcome.truncated == (root.tau <= 0.5)


def test_capped_leaves_are_not_counted_as_truncated(small_spec):
    # past its time horizon every root is a leaf, capped or not
    for i in range(30):
        outcome = evaluate_cascade(X, 1e-12, small_spec, _stream(i), depth_cap=0, record=True)
        assert outcome.ensembles[0].tau > 1e-12
        assert not outcome.truncated


def test_capped_forcing_free_root_is_not_truncated(zero_spec):
    outcomes = [evaluate_cascade(X, 0.5, zero_spec, _stream(i), depth_cap=0, record=True) for i in range(60)]
    leaves = [o for o in outcomes if not o.ensembles]
    assert leaves
    assert not any(o.truncated for o in leaves)


def test_cap_does_not_change_values_below_it(small_spec):
    for i in range(20):
        free = evaluate_cascade(X, 0.5, small_spec, _stream(i))
        capped = evaluate_cascade(X, 0.5, small_spec, _stream(i), depth_cap=free.max_depth + 1)
        np.testing.assert_array_equal(free.value, capped.value)
        assert not capped.truncated


def test_same_stream_gives_same_value(small_spec):
    for i in range(20):
        first = evaluate_cascade(X, 0.5, small_spec, _stream(i))
        again = evaluate_cascade(X, 0.5, small_spec, _stream(i))
        np.testing.assert_array_equal(first.value, again.value)
        assert first.nodes == again.nodes


def test_walk_order_does_not_change_the_value(small_spec):
    for i in range(20):
        left = evaluate_cascade(X, 0.5, small_spec, _stream(i))
        right = evaluate_cascade(X, 0.5, small_spec, _stream(i), right_first=True)
        np.testing.assert_array_equal(left.value, right.value)


@pytest.mark.parametrize("name", ["small_data", "upsilon_small_data"])
def test_outcomes_respect_the_contraction_bound(name):
    spec = reference_spec(name)
    for k, (x, t) in enumerate(CHECK_POINTS):
        for i in range(40):
            outcome = evaluate_cascade(np.array(x), t, spec, _stream(k, i))
            assert np.linalg.norm(outcome.value) <= spec.epsilon * (1.0 + 1e-12)


def test_record_keeps_one_ensemble_per_drawing_node(small_spec):
    outcome = evaluate_cascade(X, 0.5, small_spec, _stream(3), record=True)
    assert 0 < len(outcome.ensembles) <= outcome.nodes
    for node in outcome.ensembles:
        assert 1 <= node.kappa <= 5
        np.testing.assert_allclose(node.X, node.origin - node.Z)
        assert np.linalg.norm(node.Y) < np.linalg.norm(node.Z)
        assert len(node.path) == node.depth
    assert outcome.ensembles[0].path == ()


def test_nonpositive_time_rejected(small_spec):
    with pytest.raises(DomainError):
        evaluate_cascade(X, 0.0, small_spec, _stream(0))


def test_upsilon_requires_excessive_pair():
    spec = reference_spec("zero_data", kernel={"type": "H"})
    with pytest.raises(DomainError):
        eval_Upsilon(X, 0.5, spec, _stream(0))


def test_m0_at_time_zero_is_the_data_ratio(small_spec):
    expected = small_spec.data.u0.value_at(X) / small_spec.pair.h_at(X)
    np.testing.assert_allclose(m0(X, 0.0, small_spec), expected)
    with pytest.raises(DomainError):
        m0(X, -1.0, small_spec)


def test_chi0_of_trap_is_zero(small_spec):
    np.testing.assert_array_equal(chi0(TRAP, small_spec), np.zeros(3))


def test_branch_operators_reject_wrong_kappa():
    with pytest.raises(DomainError):
        apply_B(4, X, X, X)
    with pytest.raises(DomainError):
        apply_C(1, X, X)


def test_forcing_outside_h_tilde_support_raises_with_path(small_spec):
    data = AdmissiblePair(GaussianVortex(0.004), BallVortexForcing(0.0007, center=(3.0, 0.0, 0.0)), 0.5, 0.5, 0.2)
    spec = ProblemSpec(small_spec.nu, small_spec.p, small_spec.pair, data)
    with pytest.raises(DataError) as e:
        forcing_ratio(np.array([3.0, 0.5, 0.0]), 0.1, spec, (0, 1))
    assert e.value.node_path == (0, 1)
    assert "node 01" in str(e.value)


def test_unfitted_pair_violates_gamma_bound():
    with pytest.raises(ConfigError) as e:
        build_problem_spec(reference_config("small_data", rescale=False))
    assert e.value.hypothesis == "γ ≤ 8πνp/11"


def test_forcing_needs_a_forcing_profile():
    with pytest.raises(ConfigError) as e:
        build_problem_spec(reference_config("small_data", kernel={"type": "h0"}))
    assert e.value.hypothesis == "|g| ≤ βε h̃"


def test_large_data_fails_the_heat_check():
    config = reference_config("small_data", u0={"fixture": "gaussian_vortex", "amplitude": 1.0})
    with pytest.raises(ConfigError) as e:
        build_problem_spec(config)
    assert e.value.hypothesis == "sup|u₀∗K|/h ≤ αε"


def test_upsilon_config_needs_excessive_kernel():
    with pytest.raises(ConfigError) as e:
        build_problem_spec(reference_config("zero_data", kernel={"type": "H"}, mode="upsilon"))
    assert e.value.hypothesis == "h excessive"


def test_data_check_can_be_skipped():
    config = reference_config("small_data", u0={"fixture": "gaussian_vortex", "amplitude": 1.0})
    spec = build_problem_spec(config, check_data=False)
    assert spec.mode == CascadeMode.XI
    assert spec.epsilon == pytest.approx(0.2)


@pytest.mark.slow
def test_tree_size_matches_galton_watson_mean():
    spec = reference_spec("zero_data", p=0.25)
    sizes = np.array([evaluate_cascade(X, 1e8, spec, _stream(7, i)).nodes for i in range(4000)])
    # E[size] = 1/(1-2p)
    assert abs(sizes.mean() - 2.0) <= 4.0 * sizes.std(ddof=1) / np.sqrt(sizes.size)
