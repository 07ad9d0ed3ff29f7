"""
Tests for the estimator engine: determinism, reduction and argument checks.
"""
import asyncio

import numpy as np
import pytest

from navier_cascade.engine import EstimatorEngine, grid_evaluate, mc_estimate, point_key, run_chunk, summarize
from navier_cascade.errors import DomainError
from navier_cascade.models.config import CascadeMode

X = np.array([1.0, 0.0, 0.0])
POINTS = [(np.array([1.0, 0.0, 0.0]), 0.5), (np.array([0.0, 1.5, 0.0]), 0.25)]


def test_point_key_depends_on_every_coordinate():
    keys = {point_key(X, 0.5), point_key(X, 0.25), point_key(np.array([1.0, 0.0, 1e-12]), 0.5)}
    assert len(keys) == 3
    assert point_key(X, 0.5) == point_key([1.0, 0.0, 0.0], 0.5)


def test_estimate_is_independent_of_chunking(small_spec):
    small = EstimatorEngine(chunk_size=7)
    large = EstimatorEngine(chunk_size=1000)
    first = mc_estimate(X, 0.5, small_spec, 50, seed=3)
    assert first.n == 50
    a = asyncio.run(small.estimate(small_spec, X, 0.5, 50, 3))
    b = asyncio.run(large.estimate(small_spec, X, 0.5, 50, 3))
    assert a.u == b.u == first.u
    assert a.stderr == b.stderr


@pytest.mark.parametrize("workers", [2, 3, 4])
def test_grid_is_identical_across_worker_counts(small_spec, workers):
    inline = grid_evaluate(POINTS, small_spec, 40, seed=5, workers=1)
    pooled = grid_evaluate(POINTS, small_spec, 40, seed=5, workers=workers)
    for a, b in zip(inline, pooled):
        assert a.u == b.u
        assert a.stderr == b.stderr
        assert a.nodes_mean == b.nodes_mean


def test_grid_order_does_not_change_any_point(small_spec):
    points = POINTS + [(np.array([0.5, -0.5, 1.0]), 0.75)]
    forward = grid_evaluate(points, small_spec, 30, seed=9)
    backward = grid_evaluate(points[::-1], small_spec, 30, seed=9, workers=2)
    for a, b in zip(forward, backward[::-1]):
        assert a.x == b.x and a.t == b.t
        assert a.u == b.u
        assert a.stderr == b.stderr
        assert a.nodes_mean == b.nodes_mean
        assert a.max_depth == b.max_depth


def test_one_point_grid_equals_point_estimate(small_spec):
    (report,) = grid_evaluate([(X, 0.5)], small_spec, 30, seed=4)
    single = mc_estimate(X, 0.5, small_spec, 30, seed=4)
    assert report.u == single.u
    assert report.stderr == single.stderr
    assert report.nodes_mean == single.nodes_mean


def test_different_seeds_differ(small_spec):
    a = mc_estimate(X, 0.5, small_spec, 30, seed=1)
    b = mc_estimate(X, 0.5, small_spec, 30, seed=2)
    assert a.u != b.u


@pytest.mark.asyncio
async def test_async_estimate_report_fields(small_spec):
    report = await EstimatorEngine().estimate(small_spec, X, 0.5, 20, 0, depth_cap=0)
    # only roots that would have branched or added forcing count as truncated
    assert 0.0 <= report.truncated_fraction <= 1.0
    assert report.nodes_mean == 1.0
    assert report.max_depth == 0
    assert report.h == pytest.approx(small_spec.pair.h_at(X))
    assert report.mode == CascadeMode.XI.value
    # with depth cap 0 every cascade returns the same data term
    assert report.stderr == pytest.approx([0.0, 0.0, 0.0], abs=1e-15)


@pytest.mark.asyncio
async def test_estimate_rejects_bad_arguments(small_spec):
    engine = EstimatorEngine()
    with pytest.raises(DomainError):
        await engine.estimate(small_spec, X, 0.5, 1, 0)
    with pytest.raises(DomainError):
        await engine.estimate(small_spec, X, 0.0, 10, 0)
    with pytest.raises(DomainError):
        await engine.estimate(small_spec, np.zeros(3), 0.5, 10, 0)
    with pytest.raises(DomainError):
        await engine.evaluate_grid(small_spec, [], 10, 0)


def test_engine_needs_a_worker():
    with pytest.raises(DomainError):
        EstimatorEngine(workers=0)


def test_summarize_orders_chunks_by_start(small_spec):
    key = point_key(X, 0.5)
    chunks = [run_chunk(small_spec, X, 0.5, 0, key, start, stop, 50, CascadeMode.XI)
              for start, stop in ((5, 10), (0, 5))]
    report = summarize(X, 0.5, 1.0, 10, chunks, CascadeMode.XI, 0.0)
    ordered = np.concatenate([chunks[1].values, chunks[0].values])
    np.testing.assert_allclose(report.u, ordered.mean(axis=0), rtol=1e-14)
