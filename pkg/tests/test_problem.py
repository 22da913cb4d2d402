import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from multirev.errors import InvalidParameter, ModelViolation
from multirev.problem import (
    SchemeConfig,
    finite_difference_dir,
    make_custom,
    make_kubo,
    make_nonlinear_kubo,
    planar_rotation,
)

BUILT_IN = [make_kubo(1.3, 1e-3), make_nonlinear_kubo(1e-3)]


def test_kubo_examples():
    p = make_kubo(1, 1e-3)
    np.testing.assert_allclose(p.rotation(1.0, np.array([1.0, 0.0])), [1, 0], atol=1e-15)
    np.testing.assert_allclose(p.rotation(0.25, np.array([1.0, 0.0])), [0, 1], atol=1e-15)
    np.testing.assert_allclose(make_kubo(2, 1e-2).drift(np.array([1.0, 0.0])), [0, 2])
    assert p.dim == 2
    np.testing.assert_array_equal(p.invariant_matrix, np.eye(2))


def test_nonlinear_kubo_examples(rng):
    p = make_nonlinear_kubo(1e-3)
    np.testing.assert_allclose(p.drift(np.array([1.0, 0.0])), [0, 2])
    np.testing.assert_allclose(p.drift(np.zeros(2)), [0, 0])
    y = rng.standard_normal((100, 2))
    assert np.max(np.abs(np.sum(y * p.drift(y), axis=-1))) < 1e-12


@pytest.mark.parametrize("eps", [0.0, -1e-3, np.nan])
def test_epsilon_must_be_positive(eps):
    with pytest.raises(InvalidParameter):
        make_kubo(1, eps)
    with pytest.raises(InvalidParameter):
        make_nonlinear_kubo(eps)


@pytest.mark.parametrize("problem", BUILT_IN, ids=lambda p: p.name)
def test_rotation_periodic(problem, rng):
    theta = rng.random(100)
    y = rng.standard_normal((100, 2))
    a = problem.rotation((theta + 1) % 1, y)
    b = problem.rotation(theta, y)
    assert np.all(np.linalg.norm(a - b, axis=-1) <= 1e-12 * np.linalg.norm(y, axis=-1))


@pytest.mark.parametrize("problem", BUILT_IN, ids=lambda p: p.name)
def test_rotation_is_orthogonal_and_linear(problem, rng):
    theta = rng.random(50)
    y, z = rng.standard_normal((2, 50, 2))
    ry, rz = problem.rotation(theta, y), problem.rotation(theta, z)
    np.testing.assert_allclose(np.sum(ry * rz, -1), np.sum(y * z, -1), atol=1e-12)
    np.testing.assert_allclose(problem.rotation(theta, 2 * y - z), 2 * ry - rz, atol=1e-12)


@pytest.mark.parametrize("problem", BUILT_IN, ids=lambda p: p.name)
def test_drift_tangent_to_invariant(problem, rng):
    y = 2 * rng.standard_normal((200, 2))
    S = problem.invariant_matrix
    lhs = np.abs(np.einsum("...i,ij,...j->...", y, S, problem.drift(y)))
    assert np.all(lhs <= 1e-10 * (1 + np.linalg.norm(y, axis=-1) ** 6))


@pytest.mark.parametrize("problem", BUILT_IN, ids=lambda p: p.name)
def test_drift_dir_matches_finite_differences(problem, rng):
    y, z = rng.standard_normal((2, 40, 2))
    d = 1e-5
    fd = (problem.drift(y + d * z) - problem.drift(y - d * z)) / (2 * d)
    np.testing.assert_allclose(problem.drift_dir(y, z), fd, atol=1e-7)


@settings(max_examples=50, deadline=None)
@given(
    st.lists(st.floats(-3, 3), min_size=6, max_size=6),
    st.floats(-5, 5),
    st.floats(-5, 5),
)
def test_drift_dir_linear_in_direction(vals, a, b):
    p = make_nonlinear_kubo(1e-2)
    y, z1, z2 = np.reshape(vals, (3, 2))
    lhs = p.drift_dir(y, a * z1 + b * z2)
    rhs = a * p.drift_dir(y, z1) + b * p.drift_dir(y, z2)
    scale = 1 + np.abs(lhs).max() + np.abs(a * p.drift_dir(y, z1)).max() + np.abs(b * p.drift_dir(y, z2)).max()
    assert np.max(np.abs(lhs - rhs)) <= 1e-12 * scale


def test_invariant_is_half_squared_norm():
    p = make_kubo(1, 0.1)
    assert p.invariant(np.array([3.0, 4.0])) == pytest.approx(12.5)
    np.testing.assert_allclose(p.invariant(np.ones((3, 2))), [1, 1, 1])


def test_scheme_config():
    cfg = SchemeConfig(N=16, K_t=8)
    p = make_kubo(1, 1e-3)
    assert cfg.H(p) == 16 * 1e-3
    np.testing.assert_array_equal(cfg.modes, np.arange(-4, 4))
    for bad in ({"N": 0}, {"K_t": 3}, {"K_t": 0}, {"fp_tol": 0.0}, {"fp_max_iters": 0}):
        with pytest.raises(InvalidParameter):
            SchemeConfig(**bad)


def test_custom_zero_drift_is_valid():
    p = make_custom(2, planar_rotation, lambda y: np.zeros_like(np.asarray(y, float)), epsilon=0.1)
    np.testing.assert_array_equal(p.drift_dir(np.ones(2), np.ones(2)), [0, 0])


def test_custom_rejects_half_turn():
    def half_turn(theta, y):
        return planar_rotation(0.5 * np.asarray(theta), y)

    with pytest.raises(ModelViolation, match="probe #0"):
        make_custom(2, half_turn, lambda y: y, epsilon=0.1)


def test_custom_finite_difference_fallback(rng):
    def quad(y):
        y = np.asarray(y, float)
        return np.stack([y[..., 0] * y[..., 1], y[..., 0] ** 2 - 3 * y[..., 1] ** 2], axis=-1)

    def quad_dir(y, z):
        return np.stack(
            [z[..., 0] * y[..., 1] + y[..., 0] * z[..., 1], 2 * y[..., 0] * z[..., 0] - 6 * y[..., 1] * z[..., 1]],
            axis=-1,
        )

    p = make_custom(2, planar_rotation, quad, epsilon=0.1)
    y, z = rng.standard_normal((2, 30, 2))
    np.testing.assert_allclose(p.drift_dir(y, z), quad_dir(y, z), atol=1e-6)


def test_custom_scalar_callbacks_are_lifted(rng):
    def rot(theta, y):
        c, s = np.cos(2 * np.pi * theta), np.sin(2 * np.pi * theta)
        return np.array([c * y[0] - s * y[1], s * y[0] + c * y[1]])

    p = make_custom(2, rot, lambda y: np.array([-y[1], y[0]]), vectorized=False, epsilon=0.1)
    theta = rng.random((4, 3))
    y = rng.standard_normal((4, 3, 2))
    np.testing.assert_allclose(p.rotation(theta, y), planar_rotation(theta, y), atol=1e-14)
    np.testing.assert_allclose(p.drift(y), np.stack([-y[..., 1], y[..., 0]], -1))


def test_custom_rejects_asymmetric_invariant():
    with pytest.raises(InvalidParameter):
        make_custom(2, planar_rotation, lambda y: y, invariant_matrix=[[1, 1], [0, 1]], epsilon=0.1)


def test_finite_difference_zero_direction():
    fd = finite_difference_dir(lambda y: np.asarray(y) ** 2)
    np.testing.assert_array_equal(fd(np.ones(2), np.zeros(2)), [0, 0])
