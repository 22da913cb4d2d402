import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from multirev import nls
from multirev.errors import InvalidParameter
from multirev.fourier import truncation_decay


def _random_modes(rng, K, decay=0.3):
    l = nls.mode_numbers(K)
    return (rng.standard_normal(K) + 1j * rng.standard_normal(K)) * np.exp(-decay * np.abs(l))


def test_rotation_period_is_identity(rng):
    prob = nls.build_nls_problem(64, 2, 1e-2)
    y = rng.standard_normal(128)
    np.testing.assert_allclose(prob.rotation(np.float64(1.0), y), y, atol=1e-12)
    np.testing.assert_allclose(prob.rotation(np.float64(3.0), y), y, atol=1e-12)


def test_rotation_phase_per_mode():
    prob = nls.build_nls_problem(8, 1, 1e-2)
    m = np.zeros(8, complex)
    m[nls.mode_numbers(8) == 3] = 1.0
    out = nls.unpack(prob.rotation(np.float64(0.01), nls.pack(m)))
    assert abs(out[3 + 4] - np.exp(-2j * np.pi * 9 * 0.01)) < 1e-15


@settings(max_examples=30, deadline=None)
@given(theta=st.floats(-3, 3), seed=st.integers(0, 2**31))
def test_rotation_is_l2_isometry(theta, seed):
    prob = nls.build_nls_problem(16, 2, 1e-2)
    y = np.random.default_rng(seed).standard_normal(32)
    assert abs(nls.l2_norm(prob.rotation(np.float64(theta), y)) - nls.l2_norm(y)) < 1e-12


@pytest.mark.parametrize("sigma", [1, 2, 4])
def test_constant_field_drift(sigma):
    prob = nls.build_nls_problem(16, sigma, 1e-2)
    c = 0.7 - 0.4j
    m = np.zeros(16, complex)
    m[8] = c
    out = nls.unpack(prob.drift(nls.pack(m)))
    expect = np.zeros(16, complex)
    expect[8] = 1j * abs(c) ** (2 * sigma) * c
    np.testing.assert_allclose(out, expect, atol=1e-14)


@pytest.mark.parametrize("dealias", [False, True])
def test_drift_dir_matches_finite_differences(rng, dealias):
    prob = nls.build_nls_problem(16, 2, 1e-2, dealias=dealias)
    y = nls.pack(0.5 * _random_modes(rng, 16))
    z = rng.standard_normal(32)
    d = 1e-6
    fd = (prob.drift(y + d * z) - prob.drift(y - d * z)) / (2 * d)
    np.testing.assert_allclose(prob.drift_dir(y, z), fd, atol=1e-6)


@pytest.mark.parametrize("sigma", [1, 2, 4])
def test_drift_is_l2_tangent(rng, sigma):
    prob = nls.build_nls_problem(32, sigma, 1e-2)
    y = nls.pack(_random_modes(rng, 32))
    assert abs(y @ prob.drift(y)) <= 1e-10 * (1 + np.linalg.norm(y) ** (2 * sigma + 2))


def test_dealiased_drift_matches_dense_quadrature(rng):
    # with padding the pseudo-spectral product equals exact projection
    K, sigma = 8, 1
    m = _random_modes(rng, K)
    prob = nls.build_nls_problem(K, sigma, 1e-2, dealias=True)
    x = nls.grid(512)
    f = nls.SpectralField(m, K).evaluate(x)
    ref = nls.from_grid(1j * np.abs(f) ** 2 * f, K)
    np.testing.assert_allclose(nls.unpack(prob.drift(nls.pack(m))), ref, atol=1e-13)


def test_round_trip_and_conjugate_symmetry(rng):
    m = _random_modes(rng, 32)
    np.testing.assert_allclose(nls.from_grid(nls.to_grid(m), 32), m, atol=1e-12)
    f = nls.initial_profile(32)
    assert np.max(np.abs(f.grid_values().imag)) < 1e-12
    np.testing.assert_allclose(f.evaluate(nls.grid(32)), f.grid_values(), atol=1e-12)


def test_initial_profile_values():
    f = nls.initial_profile(64)
    x = nls.grid(64)
    assert x[0] == -np.pi and abs(f.grid_values()[32] - 1.0) < 1e-12
    assert abs(f.grid_values()[0] - np.exp(-3 * np.pi**4 + np.pi**2)) < 1e-12
    l = np.abs(nls.mode_numbers(64))
    # the profile has a bump of modes near |l| = 12 before its fast decay
    assert 1e-4 < np.max(np.abs(f.modes[l >= 16])) < 1e-3
    assert np.max(np.abs(f.modes[l >= 24])) <= 2e-6
    assert np.max(np.abs(f.modes[l >= 31])) <= 1e-7
    # sampling on 64 points aliases below 1e-7 against a 4096-point grid
    fine = nls.initial_profile(4096).modes[2048 - 32 : 2048 + 32]
    np.testing.assert_allclose(f.modes, fine, atol=1e-7)


def test_initial_l2_against_dense_quadrature():
    x = np.linspace(-np.pi, np.pi, 10_001)
    u2 = np.exp(2 * (-3 * x**4 + x**2))
    ref = np.sqrt(np.trapezoid(u2, x))
    assert abs(nls.l2_norm(nls.initial_profile(64)) - ref) < 1e-6


def test_norm_examples():
    z = nls.SpectralField(np.zeros(8, complex), 8)
    assert nls.l2_norm(z) == 0 and nls.h1_norm(z) == 0
    m = np.zeros(8, complex)
    m[4] = 1.0
    one = nls.SpectralField(m, 8)
    assert np.isclose(nls.l2_norm(one), np.sqrt(2 * np.pi)) and np.isclose(nls.h1_norm(one), np.sqrt(2 * np.pi))
    m = np.zeros(8, complex)
    m[7] = 1.0
    three = nls.SpectralField(m, 8)
    assert np.isclose(nls.h1_norm(three) / nls.l2_norm(three), np.sqrt(10))
    assert np.isclose(nls.l2_norm(three.to_state()), nls.l2_norm(three))


def test_field_decay_past_bandwidth():
    # sigma=2 rotated field at the initial profile: tail decays to the floor
    prob = nls.build_nls_problem(16, 2, 1e-2)
    y = nls.initial_profile(16).to_state()
    prof = truncation_decay(prob, y, 512)
    tail = prof[300:]
    assert np.all(tail <= 1e-12)


def test_snapshot_columns():
    rows = nls.initial_profile(32).snapshot(300)
    assert rows.shape == (300, 4)
    np.testing.assert_allclose(rows[:, 3], np.hypot(rows[:, 1], rows[:, 2]))


@pytest.mark.parametrize("args", [(48, 2, 1e-2), (64, 0, 1e-2), (64, 1.5, 1e-2), (64, 2, 0.0)])
def test_invalid_parameters(args):
    with pytest.raises(InvalidParameter):
        nls.build_nls_problem(*args)
