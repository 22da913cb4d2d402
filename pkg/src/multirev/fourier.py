"""Fourier modes of the rotated vector fields.

For a problem with rotation ``R(theta) = e^{A theta}`` the fields

    g0_theta(y)    = R(-theta) F(R(theta) y)
    g1_theta(y)(z) = R(-theta) F'(R(theta) y)(R(theta) z)

are 1-periodic in ``theta``.  Their coefficients are computed by the
equispaced rectangle rule on ``M = OVERSAMPLE * K_t`` nodes (a DFT), and
truncated to modes ``k = -K_t/2, ..., K_t/2 - 1``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameter
from .problem import OscillatorProblem

OVERSAMPLE = 2
DEFAULT_AVERAGING_MODES = 16


def _check_modes(K_t):
    if int(K_t) != K_t or K_t < 2 or K_t % 2:
        raise InvalidParameter(f"K_t must be even and >= 2, got {K_t}")


def mode_indices(K_t: int) -> np.ndarray:
    return np.arange(-(K_t // 2), K_t // 2)


def quadrature_nodes(K_t: int) -> np.ndarray:
    M = OVERSAMPLE * K_t
    return np.arange(M) / M


def _node_shape(theta, batch_ndim):
    return theta.reshape(theta.shape + (1,) * batch_ndim)


def sample_g0(problem: OscillatorProblem, y, theta) -> np.ndarray:
    """``g0_theta(y)`` at every node; output shape ``theta.shape + y.shape``."""
    y = np.asarray(y, dtype=float)
    th = _node_shape(np.asarray(theta, dtype=float), y.ndim - 1)
    ry = problem.rotation(th, y)
    return problem.rotation(-th, problem.drift(ry))


def sample_g1(problem: OscillatorProblem, y, z, theta) -> np.ndarray:
    """``g1_theta(y)(z)``; ``z`` is shared by all nodes or given per node."""
    y = np.asarray(y, dtype=float)
    z = np.asarray(z, dtype=float)
    th = _node_shape(np.asarray(theta, dtype=float), y.ndim - 1)
    ry = problem.rotation(th, y)
    rz = problem.rotation(th, z)
    return problem.rotation(-th, problem.drift_dir(ry, rz))


def spectrum_from_samples(samples: np.ndarray, K_t: int) -> np.ndarray:
    """Truncated DFT along axis 0, modes in ascending order."""
    M = samples.shape[0]
    c = np.fft.fft(samples, axis=0) / M
    return c[mode_indices(K_t) % M]


@dataclass(frozen=True)
class ModeSpectrum:
    """Coefficients ``c_k`` for ``k = -K_t/2 .. K_t/2-1`` stacked on axis 0."""

    coeffs: np.ndarray
    K_t: int

    @property
    def modes(self) -> np.ndarray:
        return mode_indices(self.K_t)

    def mode(self, k: int) -> np.ndarray:
        if not -(self.K_t // 2) <= k < self.K_t // 2:
            raise IndexError(f"mode {k} outside the truncation range")
        return self.coeffs[k + self.K_t // 2]

    def evaluate(self, theta) -> np.ndarray:
        """Truncated series ``sum_k c_k e^{2 i pi k theta}``; theta is 1-d."""
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        phase = np.exp(2j * np.pi * np.outer(theta, self.modes))
        return np.tensordot(phase, self.coeffs, axes=(1, 0))


def coeffs_g0(problem: OscillatorProblem, y, K_t: int) -> ModeSpectrum:
    _check_modes(K_t)
    samples = sample_g0(problem, y, quadrature_nodes(K_t))
    return ModeSpectrum(spectrum_from_samples(samples, K_t), K_t)


def coeffs_g1_dir(problem: OscillatorProblem, y, z, K_t: int) -> ModeSpectrum:
    """Modes of ``theta -> g1_theta(y)(z)``; complex ``z`` is split by linearity."""
    _check_modes(K_t)
    z = np.asarray(z)
    theta = quadrature_nodes(K_t)
    if np.iscomplexobj(z):
        re = spectrum_from_samples(sample_g1(problem, y, z.real, theta), K_t)
        im = spectrum_from_samples(sample_g1(problem, y, z.imag, theta), K_t)
        return ModeSpectrum(re + 1j * im, K_t)
    samples = sample_g1(problem, y, z, theta)
    return ModeSpectrum(spectrum_from_samples(samples, K_t), K_t)


def averaged_field(problem: OscillatorProblem, y, K_t: int = DEFAULT_AVERAGING_MODES) -> np.ndarray:
    """Mean ``<g0>(y) = c_0(y)`` of the rotated field over one period."""
    _check_modes(K_t)
    samples = sample_g0(problem, y, quadrature_nodes(K_t))
    return samples.mean(axis=0)


def truncation_decay(problem: OscillatorProblem, y, K_t: int) -> np.ndarray:
    """Magnitude profile by ``|k|``: entry j is ``sqrt(|c_j|^2 + |c_-j|^2)``.

    Entry 0 is ``|c_0|`` and entry ``K_t/2`` holds the unpaired mode
    ``-K_t/2`` alone.  Norms are taken over the state components.
    """
    spectrum = coeffs_g0(problem, y, K_t)
    y = np.asarray(y)
    if y.ndim != 1:
        raise InvalidParameter("truncation_decay expects a single state")
    half = K_t // 2
    mag2 = np.sum(np.abs(spectrum.coeffs) ** 2, axis=-1)
    out = np.zeros(half + 1)
    out[0] = mag2[half]
    for j in range(1, half):
        out[j] = mag2[half + j] + mag2[half - j]
    out[half] = mag2[0]
    return np.sqrt(out)
