"""
Tests for the 3-vector geometry: bilinear bounds, projections, frames.
"""
import numpy as np
import pytest

from navier_cascade.errors import DomainError
from navier_cascade.vecgeom import (
    as_vec3,
    b1,
    b2,
    norm,
    orthonormal_frame,
    proj_perp,
    projection_matrix,
    reflect,
    reflection_matrix,
    unit,
    vec3,
)


def test_unit_of_zero_raises():
    with pytest.raises(DomainError):
        unit(np.zeros(3))


def test_as_vec3_rejects_wrong_shape():
    with pytest.raises(DomainError):
        as_vec3([1.0, 2.0])


def test_as_vec3_copies():
    source = np.array([1.0, 2.0, 3.0])
    out = as_vec3(source)
    out[0] = 9.0
    assert source[0] == 1.0


def test_bilinear_bounds_on_random_triples(rng):
    for _ in range(5000):
        scale = 10.0 ** rng.uniform(-4, 4, size=3)
        y, u, v = (rng.standard_normal(3) * s for s in scale)
        uv = norm(u) * norm(v)
        assert norm(b1(y, u, v)) <= uv * (1 + 1e-12)
        assert norm(b2(y, u, v)) <= 2.0 * uv * (1 + 1e-12)
        assert norm(reflect(y, u)) <= 2.0 * norm(u) * (1 + 1e-12)


def test_b1_is_symmetric(rng):
    y, u, v = rng.standard_normal((3, 3))
    np.testing.assert_allclose(b1(y, u, v), b1(y, v, u), rtol=1e-14, atol=1e-14)


def test_b1_depends_only_on_direction(rng):
    y, u, v = rng.standard_normal((3, 3))
    np.testing.assert_allclose(b1(y, u, v), b1(7.5 * y, u, v), rtol=1e-13)


def test_b2_of_axis_aligned_vectors():
    e = vec3(0.0, 0.0, 1.0)
    u = vec3(0.0, 0.0, 2.0)
    # b1 vanishes for u parallel to e; the scalar part is |u|² - 3(u·e)² = -8
    np.testing.assert_allclose(b1(e, u, u), np.zeros(3))
    np.testing.assert_allclose(b2(e, u, u), vec3(0.0, 0.0, -8.0))


def test_projection_matrix_matches_proj_perp(rng):
    y, u = rng.standard_normal((2, 3))
    p = projection_matrix(y)
    np.testing.assert_allclose(p @ u, proj_perp(y, u), atol=1e-14)
    np.testing.assert_allclose(p @ p, p, atol=1e-14)
    assert abs(np.dot(proj_perp(y, u), y)) < 1e-12


def test_reflection_matrix_matches_reflect(rng):
    y, u = rng.standard_normal((2, 3))
    np.testing.assert_allclose(reflection_matrix(y) @ u, reflect(y, u), atol=1e-14)
    assert np.trace(reflection_matrix(y)) == pytest.approx(0.0, abs=1e-14)


def test_orthonormal_frame_has_axis_as_third_column(rng):
    for _ in range(20):
        e = rng.standard_normal(3)
        frame = orthonormal_frame(e)
        np.testing.assert_allclose(frame.T @ frame, np.eye(3), atol=1e-12)
        np.testing.assert_allclose(frame[:, 2], unit(e), atol=1e-14)
