"""Random ingredients of the schemes.

* revolution times: law of the exit time ``T1`` of a standard Brownian motion
  from ``(-1, 1)``, its moments and Laplace transform, and a sampler;
* closed-form first and second moments of the path functionals
  ``alpha_k^N`` and ``beta_{p,k}^N``;
* the discrete surrogates ``alpha_hat`` built from the covariance of
  ``alpha`` and a Rademacher vector;
* a Brownian-path oracle returning sampled ``alpha``, ``beta`` (and the path).

Random streams are ``numpy`` generators over the counter-based Philox bit
generator, keyed by ``(seed, *key)`` through ``SeedSequence.spawn_key``.
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy.special import erfc

from . import _paths
from .errors import DomainError, InvalidParameter, NotACovariance

MGF_BOUND = math.pi**2 / 8
T1_MEAN = 1.0
T1_VAR = 2.0 / 3.0

# below this time the reflection series converges fastest, above it the
# eigenfunction series does
_SERIES_SWITCH = 0.45
_N_IMAGE = 6
_N_SPECTRAL = 8

EIG_CLAMP = 1e-12
EIG_REJECT = 1e-9


def stream(seed: int, *key: int) -> np.random.Generator:
    """Independent counter-based generator for ``(seed, key...)``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


# ---------------------------------------------------------------------------
# revolution times


@lru_cache(maxsize=None)
def _composition_sum(p: int) -> Fraction:
    # sum over j and compositions n_1 + ... + n_j = p (n_i >= 1) of
    # (-1)^j / prod (2 n_i)!, by recursion on the last part
    f = [Fraction(1)]
    for m in range(1, p + 1):
        f.append(-sum(f[m - n] / math.factorial(2 * n) for n in range(1, m + 1)))
    return f[p]


def t1_moment_exact(k: int) -> Fraction:
    """``E[T1^k]`` as an exact fraction.

    Uses the combinatorial formula obtained by expanding ``1/cos(sqrt(2x))``:
    ``(-2)^k k!/(2k)! * sum_j (-1)^j sum_{n_1+..+n_j=k} (2k)!/prod (2n_i)!``
    (the inner index of the sum coincides with ``k``).
    """
    if int(k) != k or k < 0:
        raise InvalidParameter(f"moment order must be a nonnegative integer, got {k}")
    k = int(k)
    if k == 0:
        return Fraction(1)
    inner = _composition_sum(k) * math.factorial(2 * k)
    return Fraction((-2) ** k * math.factorial(k), math.factorial(2 * k)) * inner


def t1_moment(k: int) -> float:
    """``E[T1^k]`` as a float; raises ``OverflowError`` past double range."""
    return float(t1_moment_exact(k))


def t1_mgf(z):
    """``E[exp(z T1)] = 1/cos(sqrt(2 z))`` for ``Re z < pi^2/8``.

    Real arguments give a real result; the function is even in the square
    root so the branch choice is immaterial.
    """
    zc = complex(z)
    if not zc.real < MGF_BOUND:
        raise DomainError(f"Re(z) = {zc.real} outside the domain Re(z) < pi^2/8")
    val = 1.0 / cmath.cos(cmath.sqrt(2.0 * zc))
    if isinstance(z, (int, float, np.floating, np.integer)):
        return float(val.real)
    return val


def exit_cdf(t):
    """``P(T1 <= t)``."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    small = (t > 0) & (t < _SERIES_SWITCH)
    large = t >= _SERIES_SWITCH
    out[small] = _cdf_image(t[small])
    out[large] = 1.0 - _sf_spectral(t[large])
    return out


def exit_sf(t):
    """``P(T1 > t)``."""
    t = np.asarray(t, dtype=float)
    out = np.ones_like(t)
    small = (t > 0) & (t < _SERIES_SWITCH)
    large = t >= _SERIES_SWITCH
    out[small] = 1.0 - _cdf_image(t[small])
    out[large] = _sf_spectral(t[large])
    return out


def exit_pdf(t):
    """Density of ``T1``."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    small = (t > 0) & (t < _SERIES_SWITCH)
    large = t >= _SERIES_SWITCH
    out[small] = _pdf_image(t[small])
    out[large] = _pdf_spectral(t[large])
    return out


def _cdf_image(t):
    k = np.arange(_N_IMAGE)[:, None]
    return 2.0 * np.sum((-1.0) ** k * erfc((2 * k + 1) / np.sqrt(2.0 * t)), axis=0)


def _pdf_image(t):
    k = np.arange(_N_IMAGE)[:, None]
    a = 2 * k + 1
    terms = (-1.0) ** k * a * np.exp(-(a**2) / (2.0 * t))
    return np.sqrt(2.0 / np.pi) * t ** (-1.5) * np.sum(terms, axis=0)


def _sf_spectral(t):
    n = np.arange(_N_SPECTRAL)[:, None]
    a = 2 * n + 1
    return (4.0 / np.pi) * np.sum((-1.0) ** n / a * np.exp(-(a**2) * np.pi**2 * t / 8), axis=0)


def _pdf_spectral(t):
    n = np.arange(_N_SPECTRAL)[:, None]
    a = 2 * n + 1
    return (np.pi / 2.0) * np.sum((-1.0) ** n * a * np.exp(-(a**2) * np.pi**2 * t / 8), axis=0)


@dataclass(frozen=True)
class ExitTimeSampler:
    """Sampler of the exit time ``T1``.

    ``method="series"`` inverts the distribution function: a tabulated
    log-time grid gives a starting point, refined by Newton steps on
    ``log F`` (lower half) or ``log(1 - F)`` (upper half) so that both tails
    keep full relative precision.  ``method="fine-path"`` simulates a
    Brownian path with step ``dt`` instead (slow, validation only).
    """

    method: str = "series"
    dt: float = 1e-4
    grid: np.ndarray = field(default=None, repr=False, compare=False)
    log_cdf: np.ndarray = field(default=None, repr=False, compare=False)
    log_sf: np.ndarray = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.method not in ("series", "fine-path"):
            raise InvalidParameter(f"unknown exit-time method {self.method!r}")
        if self.grid is None:
            x = np.linspace(np.log(5e-3), np.log(60.0), 2048)
            t = np.exp(x)
            object.__setattr__(self, "grid", x)
            with np.errstate(divide="ignore"):
                object.__setattr__(self, "log_cdf", np.log(np.maximum(exit_cdf(t), 1e-300)))
                object.__setattr__(self, "log_sf", np.log(np.maximum(exit_sf(t), 1e-300)))

    def sample(self, rng: np.random.Generator, size=None):
        if self.method == "fine-path":
            return self._sample_paths(rng, size)
        n = 1 if size is None else int(np.prod(size))
        # uniforms strictly inside (0, 1)
        u = (rng.integers(0, 2**53, size=n, dtype=np.int64) + 0.5) * 2.0**-53
        lower = u < 0.5
        out = np.empty(n)
        out[lower] = self._invert(np.log(u[lower]), lower_tail=True)
        out[~lower] = self._invert(np.log1p(-u[~lower]), lower_tail=False)
        if size is None:
            return float(out[0])
        return out.reshape(size)

    def _invert(self, target, lower_tail):
        if target.size == 0:
            return target
        if lower_tail:
            x = np.interp(target, self.log_cdf, self.grid)
        else:
            x = np.interp(-target, -self.log_sf, self.grid)
        for _ in range(6):
            t = np.exp(x)
            dens = exit_pdf(t)
            if lower_tail:
                val = exit_cdf(t)
                step = (np.log(val) - target) * val / (t * dens)
            else:
                val = exit_sf(t)
                step = -(np.log(val) - target) * val / (t * dens)
            x = x - np.clip(step, -0.5, 0.5)
        return np.exp(x)

    def _sample_paths(self, rng, size):
        n = 1 if size is None else int(np.prod(size))
        out = np.empty(n)
        a = np.zeros(2, complex)
        b = np.zeros((2, 2), complex)
        empty = np.zeros(0)
        for i in range(n):
            status, t, _ = _paths.full_path(rng, self.dt, 1, 2, True, 1e3, a, b, empty, empty)
            out[i] = t
        return float(out[0]) if size is None else out.reshape(size)


_DEFAULT_SAMPLER: Optional[ExitTimeSampler] = None


def _default_sampler() -> ExitTimeSampler:
    global _DEFAULT_SAMPLER
    if _DEFAULT_SAMPLER is None:
        _DEFAULT_SAMPLER = ExitTimeSampler()
    return _DEFAULT_SAMPLER


def sample_T1(rng: np.random.Generator, size=None):
    """Independent draws of the first exit time of ``W`` from ``(-1, 1)``."""
    return _default_sampler().sample(rng, size)


def sample_TN(rng: np.random.Generator, N: int, size=None):
    """Revolution time ``T_N``: the sum of ``N`` independent ``T1`` draws."""
    if int(N) != N or N < 1:
        raise InvalidParameter(f"N must be a positive integer, got {N}")
    n = 1 if size is None else int(np.prod(size))
    draws = sample_T1(rng, (n, int(N)))
    out = draws.sum(axis=1)
    return float(out[0]) if size is None else out.reshape(size)


# ---------------------------------------------------------------------------
# closed-form moments


@dataclass(frozen=True)
class MomentTables:
    """First and second moments of ``alpha^N``, ``beta^N`` and ``beta_tilde^N``.

    Accessors accept integers or integer arrays (broadcast).
    """

    N: int

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise InvalidParameter(f"N must be a positive integer, got {self.N}")

    def _b(self, k):
        # 1 / (2 pi^2 k^2 N), zero-safe
        k = np.asarray(k)
        kk = np.where(k == 0, 1, k).astype(float)
        return 1.0 / (2.0 * math.pi**2 * kk**2 * self.N)

    def alpha_mean(self, k):
        return np.where(np.asarray(k) == 0, 1.0, 0.0)

    def alpha_pair(self, p, k):
        """``E[alpha_p alpha_k]``."""
        p, k = np.broadcast_arrays(np.asarray(p), np.asarray(k))
        diag0 = 2.0 * (0.5 + 1.0 / (3.0 * self.N))
        anti = 2.0 * self._b(p)
        return np.where((p == 0) & (k == 0), diag0, np.where((p + k == 0) & (p != 0), anti, 0.0))

    def beta(self, p, k):
        """``E[beta_{p,k}]``."""
        p, k = np.broadcast_arrays(np.asarray(p), np.asarray(k))
        out = np.zeros(p.shape)
        out = np.where((p == 0) & (k == 0), 0.5 + 1.0 / (3.0 * self.N), out)
        out = np.where((p == 0) & (k != 0), self._b(k), out)
        out = np.where((p != 0) & (k == 0), -self._b(p), out)
        out = np.where((p != 0) & (k != 0) & (p + k == 0), self._b(p), out)
        return out

    def beta_tilde(self, p, k):
        """``E[beta_tilde_{p,k}]``: the p=0 row and k=0 column of ``beta`` only."""
        p, k = np.broadcast_arrays(np.asarray(p), np.asarray(k))
        out = np.zeros(p.shape)
        out = np.where((p == 0) & (k != 0), self._b(k), out)
        out = np.where((p != 0) & (k == 0), -self._b(p), out)
        return out

    def matrix(self, name: str, K_t: int) -> np.ndarray:
        """Table over modes ``-K_t/2 .. K_t/2-1`` (rows p, columns k)."""
        m = np.arange(-(K_t // 2), K_t // 2)
        p, k = np.meshgrid(m, m, indexing="ij")
        return {"beta": self.beta, "beta_tilde": self.beta_tilde, "alpha_pair": self.alpha_pair}[name](p, k)

    @property
    def t1_mean(self) -> float:
        return T1_MEAN

    @property
    def t1_var(self) -> float:
        return T1_VAR


@lru_cache(maxsize=64)
def moment_tables(N: int) -> MomentTables:
    return MomentTables(int(N))


# ---------------------------------------------------------------------------
# discrete surrogates


def build_covariance(N: int, K_t: int) -> np.ndarray:
    """Covariance of ``(Re alpha_0, Im alpha_0, Re alpha_1, Im alpha_1, ...)``.

    Rows ``2k`` and ``2k+1`` hold ``Re alpha_k`` and ``Im alpha_k`` for
    ``0 <= k < K_t/2``.  Entries are expanded from ``E[alpha_p alpha_k]``
    through ``Re a = (a + a_-)/2`` and ``Im a = (a - a_-)/(2i)`` where
    ``a_- = conj(a)`` is the mode ``-k``.
    """
    if int(K_t) != K_t or K_t < 2 or K_t % 2:
        raise InvalidParameter(f"K_t must be even and >= 2, got {K_t}")
    tab = moment_tables(N)
    half = K_t // 2
    ks = np.arange(half)
    P, Kk = np.meshgrid(ks, ks, indexing="ij")
    E = tab.alpha_pair
    pp, pm, mp, mm = E(P, Kk), E(P, -Kk), E(-P, Kk), E(-P, -Kk)
    re_re = 0.25 * (pp + pm + mp + mm)
    im_im = -0.25 * (pp - pm - mp + mm)
    re_im = (pp - pm + mp - mm) / 4j
    mean_re = tab.alpha_mean(ks).astype(float)
    C = np.zeros((K_t, K_t))
    C[0::2, 0::2] = np.real(re_re) - np.outer(mean_re, mean_re)
    C[1::2, 1::2] = np.real(im_im)
    C[0::2, 1::2] = np.real(re_im)
    C[1::2, 0::2] = np.real(re_im).T
    return C


def sqrt_covariance(C) -> np.ndarray:
    """Symmetric square root ``V diag(sqrt(lambda)) V^T`` of a covariance."""
    C = np.asarray(C, dtype=float)
    if C.ndim != 2 or C.shape[0] != C.shape[1] or not np.allclose(C, C.T, atol=1e-14):
        raise NotACovariance("covariance must be a symmetric square matrix")
    lam, V = np.linalg.eigh(C)
    if lam.min(initial=0.0) < -EIG_REJECT:
        raise NotACovariance(f"eigenvalue {lam.min():.3e} below -{EIG_REJECT:g}")
    lam = np.where(lam < EIG_CLAMP, np.maximum(lam, 0.0), lam)
    return (V * np.sqrt(lam)) @ V.T


@dataclass(frozen=True)
class NoiseDraw:
    """One macro-step worth of discrete noise.

    ``alpha_hat`` is indexed by modes ``-K_t/2 .. K_t/2-1`` on its last axis
    (a leading axis holds independent draws for a batch of trajectories).
    """

    alpha_hat: np.ndarray
    N: int
    K_t: int

    @property
    def tables(self) -> MomentTables:
        return moment_tables(self.N)

    @property
    def beta_hat(self) -> np.ndarray:
        return self.tables.matrix("beta", self.K_t)

    @property
    def beta_tilde_hat(self) -> np.ndarray:
        return self.tables.matrix("beta_tilde", self.K_t)


def rademacher(rng: np.random.Generator, shape) -> np.ndarray:
    return 2.0 * rng.integers(0, 2, size=shape, dtype=np.int8) - 1.0


def alpha_hat_from_signs(Gamma: np.ndarray, xi: np.ndarray, K_t: int) -> np.ndarray:
    """Surrogates for given Rademacher signs ``xi`` (last axis of length K_t).

    ``alpha_hat_k = delta_k + sum_l (Gamma_{2k,l} + i Gamma_{2k+1,l}) xi_l`` for
    ``k >= 0``, ``alpha_hat_{-k} = conj(alpha_hat_k)``, and the unpaired mode
    ``-K_t/2`` is set to zero, which matches its moments.
    """
    half = K_t // 2
    lin = xi @ Gamma.T  # (..., K_t): stacked (Re, Im) fluctuations
    pos = lin[..., 0::2] + 1j * lin[..., 1::2]
    pos[..., 0] += 1.0
    out = np.zeros(xi.shape[:-1] + (K_t,), dtype=complex)
    out[..., half:] = pos
    out[..., 1:half] = np.conj(pos[..., 1:][..., ::-1])
    return out


@lru_cache(maxsize=64)
def _gamma(N: int, K_t: int) -> np.ndarray:
    G = sqrt_covariance(build_covariance(N, K_t))
    G.setflags(write=False)
    return G


class AlphaSampler:
    """Caches ``Gamma^N`` for one ``(N, K_t)`` and draws ``NoiseDraw`` objects."""

    def __init__(self, N: int, K_t: int):
        self.N = int(N)
        self.K_t = int(K_t)
        self.Gamma = _gamma(self.N, self.K_t)

    def draw(self, rng: np.random.Generator, size=None) -> NoiseDraw:
        shape = (self.K_t,) if size is None else (int(size), self.K_t)
        xi = rademacher(rng, shape)
        return NoiseDraw(alpha_hat_from_signs(self.Gamma, xi, self.K_t), self.N, self.K_t)


def sample_alpha_hat(rng: np.random.Generator, Gamma, N: int, K_t: int, size=None) -> NoiseDraw:
    shape = (K_t,) if size is None else (int(size), K_t)
    xi = rademacher(rng, shape)
    return NoiseDraw(alpha_hat_from_signs(np.asarray(Gamma), xi, K_t), int(N), int(K_t))


def alpha_hat_bound(Gamma: np.ndarray, K_t: int) -> np.ndarray:
    """Deterministic bound on ``|alpha_hat_k|`` for ``0 <= k < K_t/2``."""
    half = K_t // 2
    absG = np.abs(Gamma)
    return 1.0 + absG[0::2].sum(axis=1)[:half] + absG[1::2].sum(axis=1)[:half]


# ---------------------------------------------------------------------------
# path oracle


@dataclass(frozen=True)
class OracleDraw:
    """Path-sampled ``alpha_k^N`` (K_t,) and ``beta_{p,k}^N`` (K_t, K_t).

    When recorded, ``knots_t`` and ``knots_w`` describe the piecewise-linear
    Brownian path on ``[0, T_N]`` that produced them.
    """

    alpha: np.ndarray
    beta: np.ndarray
    T_N: float
    N: int
    K_t: int
    dt: float
    knots_t: Optional[np.ndarray] = None
    knots_w: Optional[np.ndarray] = None
    resamples: int = 0


def _check_dt(dt):
    if not (0 < dt <= 1e-3):
        raise InvalidParameter(f"dt must lie in (0, 1e-3], got {dt}")


def oracle_alpha_beta(
    rng: np.random.Generator,
    N: int,
    K_t: int,
    dt: float,
    bridge: bool = False,
    record_path: bool = False,
) -> OracleDraw:
    """Sample ``alpha^N``, ``beta^N`` from one fine Brownian path.

    A path longer than ``100 N`` is discarded and redrawn from the same
    generator; the number of such redraws is reported.
    """
    _check_dt(dt)
    if int(K_t) != K_t or K_t < 2 or K_t % 2:
        raise InvalidParameter(f"K_t must be even and >= 2, got {K_t}")
    N = int(N)
    alpha, beta, T, kt, kw, resamples = _run_full_path(rng, N, int(K_t), dt, bridge, record_path)
    kwargs = {"knots_t": kt, "knots_w": kw} if record_path else {}
    return OracleDraw(alpha / N, beta / N**2, T, N, int(K_t), dt, resamples=resamples, **kwargs)


def _run_full_path(rng, N, K_t, dt, bridge, record_path):
    alpha = np.zeros(K_t, complex)
    beta = np.zeros((K_t, K_t), complex)
    cap = int(1.5 * N / dt) + 1024 if record_path else 0
    resamples = 0
    while True:
        kt = np.zeros(cap)
        kw = np.zeros(cap)
        state = rng.bit_generator.state
        status, T, nk = _paths.full_path(rng, dt, N, K_t, bool(bridge), 100.0 * N, alpha, beta, kt, kw)
        if status == _paths.KNOT_CAP:
            rng.bit_generator.state = state  # replay the same path with room
            cap *= 2
            continue
        if status == _paths.TIME_CAP:
            resamples += 1
            continue
        break
    if resamples:
        warnings.warn(f"{resamples} path(s) exceeded t = 100 N and were redrawn", RuntimeWarning)
    return alpha, beta, T, kt[:nk].copy(), kw[:nk].copy(), resamples


def sample_path_knots(rng: np.random.Generator, N: int, tau: float, bridge: bool = False):
    """Piecewise-linear Brownian path on ``[0, T_N]`` with step ``tau``.

    Returns knots ``(t, W)``; ``W(T_N)`` is an integer.
    """
    if not (0 < tau <= 1e-2):
        raise InvalidParameter(f"tau must lie in (0, 1e-2], got {tau}")
    _, _, _, kt, kw, _ = _run_full_path(rng, int(N), 2, tau, bridge, True)
    return kt, kw


# columns of the streaming moment statistics
_KM = _paths.MOMENT_KMAX
MOMENT_STAT_NAMES = (
    [f"alpha_{k}" for k in range(_KM + 1)]
    + [f"beta_0,{k}" for k in range(_KM + 1)]
    + [f"beta_{k},0" for k in range(1, _KM + 1)]
    + [f"beta_{k},-{k}" for k in range(1, _KM + 1)]
)


def path_moment_statistics(rng, record_at, dt, bridge=False):
    """Streaming statistics of one path at the revolution counts ``record_at``.

    Returns ``(stats, resamples)`` with ``stats`` of shape
    ``(len(record_at), 18)``; columns are named by ``MOMENT_STAT_NAMES``.
    """
    _check_dt(dt)
    rec = np.asarray(sorted(record_at), dtype=np.int64)
    out = np.zeros((rec.size, len(MOMENT_STAT_NAMES)), complex)
    resamples = 0
    while True:
        status = _paths.moment_path(rng, dt, int(rec[-1]), rec, bool(bridge), 100.0 * rec[-1], out)
        if status == _paths.OK:
            return out, resamples
        resamples += 1
