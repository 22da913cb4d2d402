"""Spectral NLS with white-noise dispersion on the torus [-pi, pi).

The field ``u(x) = sum_l Y_l e^{i l x}`` is truncated to modes
``l = -K_x/2 .. K_x/2 - 1``.  The real state vector interleaves
``(Re Y_l, Im Y_l)`` in ascending ``l``.  The noise-driven Laplacian acts by
the phase ``e^{-2 i pi l^2 theta}`` on mode ``l``; the drift ``i |u|^{2 sigma} u``
is evaluated pseudo-spectrally on the ``K_x``-point grid (optionally on a
zero-padded grid, which removes aliasing exactly for this polynomial).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameter
from .problem import OscillatorProblem, _check_epsilon


def _check_modes(K_x):
    if int(K_x) != K_x or K_x < 2 or (int(K_x) & (int(K_x) - 1)):
        raise InvalidParameter(f"K_x must be a power of two >= 2, got {K_x}")


def _check_sigma(sigma):
    if int(sigma) != sigma or sigma < 1:
        raise InvalidParameter(f"sigma must be an integer >= 1, got {sigma}")


def mode_numbers(K_x: int) -> np.ndarray:
    return np.arange(-(K_x // 2), K_x // 2)


def grid(K_x: int) -> np.ndarray:
    return -np.pi + 2.0 * np.pi * np.arange(K_x) / K_x


def pack(modes: np.ndarray) -> np.ndarray:
    """Complex modes (..., K) to the interleaved real state (..., 2K)."""
    modes = np.asarray(modes, dtype=complex)
    out = np.empty(modes.shape[:-1] + (2 * modes.shape[-1],))
    out[..., 0::2] = modes.real
    out[..., 1::2] = modes.imag
    return out


def unpack(y: np.ndarray) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    return y[..., 0::2] + 1j * y[..., 1::2]


def to_grid(modes: np.ndarray, n_grid: int | None = None) -> np.ndarray:
    """Values ``u(x_j)`` on the ``n_grid``-point grid (default: K points)."""
    K = modes.shape[-1]
    n = K if n_grid is None else n_grid
    l = mode_numbers(K)
    # e^{i l x_j} = (-1)^l e^{2 i pi l j / n} on x_j = -pi + 2 pi j / n
    buf = np.zeros(modes.shape[:-1] + (n,), dtype=complex)
    buf[..., l % n] = modes * np.where(l % 2, -1.0, 1.0)
    return np.fft.ifft(buf, axis=-1) * n


def from_grid(values: np.ndarray, K: int) -> np.ndarray:
    """Modes ``-K/2 .. K/2-1`` of grid samples (trapezoidal rule)."""
    n = values.shape[-1]
    l = mode_numbers(K)
    spectrum = np.fft.fft(values, axis=-1) / n
    return spectrum[..., l % n] * np.where(l % 2, -1.0, 1.0)


def _padded_size(K_x, sigma):
    n = (int(sigma) + 1) * K_x
    return 1 << (n - 1).bit_length()


@dataclass(frozen=True)
class SpectralField:
    """A truncated Fourier field on [-pi, pi)."""

    modes: np.ndarray
    K_x: int
    sigma: int = 2
    epsilon: float = 1e-2

    @classmethod
    def from_state(cls, y, sigma=2, epsilon=1e-2) -> "SpectralField":
        m = unpack(y)
        return cls(m, m.shape[-1], sigma, epsilon)

    def to_state(self) -> np.ndarray:
        return pack(self.modes)

    def grid_values(self) -> np.ndarray:
        return to_grid(self.modes)

    def evaluate(self, x) -> np.ndarray:
        """Trigonometric interpolant at arbitrary points ``x``."""
        x = np.asarray(x, dtype=float)
        return np.exp(1j * np.multiply.outer(x, mode_numbers(self.K_x))) @ self.modes

    def snapshot(self, n_points: int = 300) -> np.ndarray:
        """Rows ``(x, Re u, Im u, |u|)`` on an ``n_points`` grid over [-pi, pi)."""
        x = grid(n_points)
        u = self.evaluate(x)
        return np.column_stack([x, u.real, u.imag, np.abs(u)])


def l2_norm(field) -> float:
    m = field.modes if isinstance(field, SpectralField) else unpack(field)
    return np.sqrt(2.0 * np.pi * np.sum(np.abs(m) ** 2, axis=-1))


def h1_norm(field) -> float:
    m = field.modes if isinstance(field, SpectralField) else unpack(field)
    l = mode_numbers(m.shape[-1])
    return np.sqrt(2.0 * np.pi * np.sum((1.0 + l**2) * np.abs(m) ** 2, axis=-1))


def initial_profile(K_x: int, sigma: int = 2, epsilon: float = 1e-2) -> SpectralField:
    """Modes of ``u0(x) = exp(-3 x^4 + x^2)`` sampled on the ``K_x`` grid."""
    _check_modes(K_x)
    x = grid(K_x)
    return SpectralField(from_grid(np.exp(-3 * x**4 + x**2) + 0j, K_x), int(K_x), sigma, epsilon)


def build_nls_problem(K_x: int, sigma: int, epsilon: float, dealias: bool = False) -> OscillatorProblem:
    """Packed real form of the spectral NLS with white-noise dispersion."""
    _check_modes(K_x)
    _check_sigma(sigma)
    _check_epsilon(epsilon)
    K_x, sigma = int(K_x), int(sigma)
    n_grid = _padded_size(K_x, sigma) if dealias else K_x
    l2 = mode_numbers(K_x).astype(float) ** 2

    def rotation(theta, y):
        th = np.asarray(theta, dtype=float)[..., None]
        # reduce l^2 theta mod 1 so that integer theta gives the identity exactly
        phase = np.exp(-2j * np.pi * np.mod(l2 * th, 1.0))
        return pack(unpack(y) * phase)

    def drift(y):
        u = to_grid(unpack(y), n_grid)
        return pack(from_grid(1j * np.abs(u) ** (2 * sigma) * u, K_x))

    def drift_dir(y, z):
        u = to_grid(unpack(y), n_grid)
        v = to_grid(unpack(z), n_grid)
        a2 = np.abs(u) ** 2
        d = a2**sigma * v + 2.0 * sigma * a2 ** (sigma - 1) * np.real(np.conj(u) * v) * u
        return pack(from_grid(1j * d, K_x))

    return OscillatorProblem(
        dim=2 * K_x,
        rotation=rotation,
        drift=drift,
        drift_dir=drift_dir,
        epsilon=float(epsilon),
        invariant_matrix=np.eye(2 * K_x),
        name=f"nls-sigma{sigma}",
        growth=2 * sigma + 1,
        params={"K_x": K_x, "sigma": sigma, "dealias": bool(dealias), "mode_range": [-K_x // 2, K_x // 2 - 1]},
    )
