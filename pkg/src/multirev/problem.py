"""Problem definitions for oscillators driven by a scalar Stratonovich noise.

A problem is ``dX = eps^{-1/2} A X o dW + F(X) dt`` with ``e^A = Id``.  The
matrix ``A`` never appears explicitly; a problem only provides the action
``rotation(theta, y) = e^{A theta} y``.

All callbacks operate on batches: ``y`` has shape ``(..., d)`` and ``theta``
broadcasts against ``y.shape[:-1]``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import InvalidParameter, ModelViolation

Array = np.ndarray
RotationFn = Callable[[Array, Array], Array]
DriftFn = Callable[[Array], Array]
DriftDirFn = Callable[[Array, Array], Array]

_FD_SCALE = np.sqrt(np.finfo(float).eps)


@dataclass(frozen=True)
class OscillatorProblem:
    """Immutable description of one oscillatory SDE in rescaled form."""

    dim: int
    rotation: RotationFn
    drift: DriftFn
    drift_dir: DriftDirFn
    epsilon: float
    invariant_matrix: Optional[Array] = None
    name: str = "custom"
    # polynomial growth exponent of F, used to scale imaginary-residue checks
    growth: int = 1
    params: dict = field(default_factory=dict)

    def invariant(self, y):
        """Quadratic invariant Q(y) = y^T S y / 2 (batched)."""
        if self.invariant_matrix is None:
            raise ModelViolation(f"problem {self.name!r} declares no invariant")
        y = np.asarray(y, dtype=float)
        return 0.5 * np.einsum("...i,ij,...j->...", y, self.invariant_matrix, y)


@dataclass(frozen=True)
class SchemeConfig:
    """Numerical parameters of a multirevolution integrator."""

    N: int = 1
    K_t: int = 8
    fp_tol: float = 1e-13
    fp_max_iters: int = 50
    seed: int = 0

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise InvalidParameter(f"N must be a positive integer, got {self.N}")
        if int(self.K_t) != self.K_t or self.K_t < 2 or self.K_t % 2:
            raise InvalidParameter(f"K_t must be even and >= 2, got {self.K_t}")
        if not self.fp_tol > 0:
            raise InvalidParameter("fp_tol must be positive")
        if self.fp_max_iters < 1:
            raise InvalidParameter("fp_max_iters must be >= 1")

    def H(self, problem: OscillatorProblem) -> float:
        """Macro step ``N * epsilon``."""
        return self.N * problem.epsilon

    @property
    def modes(self) -> Array:
        return np.arange(-self.K_t // 2, self.K_t // 2)


def _check_epsilon(epsilon):
    if not (np.isfinite(epsilon) and epsilon > 0):
        raise InvalidParameter(f"epsilon must be > 0, got {epsilon}")


def _J(y):
    # multiplication by i in the (Re, Im) representation
    out = np.empty(y.shape)
    out[..., 0] = -y[..., 1]
    out[..., 1] = y[..., 0]
    return out


def planar_rotation(theta, y):
    """Rotation by angle ``2 pi theta`` acting on the last axis of ``y``."""
    y = np.asarray(y, dtype=float)
    ang = 2.0 * np.pi * np.asarray(theta, dtype=float)
    c, s = np.cos(ang), np.sin(ang)
    y0, y1 = y[..., 0], y[..., 1]
    out = np.empty(np.broadcast_shapes(ang.shape + (2,), y.shape))
    out[..., 0] = c * y0 - s * y1
    out[..., 1] = s * y0 + c * y1
    return out


def make_kubo(a: float, epsilon: float) -> OscillatorProblem:
    """Linear Kubo oscillator, ``F(y) = a J y`` (``F(y) = i a y`` in C)."""
    _check_epsilon(epsilon)
    a = float(a)

    def drift(y):
        return a * _J(np.asarray(y, dtype=float))

    def drift_dir(y, z):
        return a * _J(np.asarray(z, dtype=float))

    return OscillatorProblem(
        dim=2,
        rotation=planar_rotation,
        drift=drift,
        drift_dir=drift_dir,
        epsilon=float(epsilon),
        invariant_matrix=np.eye(2),
        name="kubo",
        growth=1,
        params={"a": a},
    )


def make_nonlinear_kubo(epsilon: float) -> OscillatorProblem:
    """Kubo oscillator with ``F(y) = (1 + y1^3 + y2^5) J y``."""
    _check_epsilon(epsilon)

    def drift(y):
        y = np.asarray(y, dtype=float)
        a, b = y[..., 0], y[..., 1]
        b2 = b * b
        s = 1.0 + a * a * a + b2 * b2 * b
        out = np.empty(y.shape)
        out[..., 0] = -s * b
        out[..., 1] = s * a
        return out

    def drift_dir(y, z):
        y = np.asarray(y, dtype=float)
        z = np.asarray(z, dtype=float)
        a, b = y[..., 0], y[..., 1]
        u, v = z[..., 0], z[..., 1]
        a2, b2 = a * a, b * b
        s = 1.0 + a2 * a + b2 * b2 * b
        ds = 3.0 * a2 * u + 5.0 * b2 * b2 * v
        out = np.empty(np.broadcast_shapes(y.shape, z.shape))
        out[..., 0] = -(ds * b + s * v)
        out[..., 1] = ds * a + s * u
        return out

    return OscillatorProblem(
        dim=2,
        rotation=planar_rotation,
        drift=drift,
        drift_dir=drift_dir,
        epsilon=float(epsilon),
        invariant_matrix=np.eye(2),
        name="nonlinear-kubo",
        growth=6,
    )


def finite_difference_dir(drift: DriftFn) -> DriftDirFn:
    """Central difference along the unit direction, step sqrt(eps)(1+|y|)."""

    def drift_dir(y, z):
        y = np.asarray(y, dtype=float)
        z = np.asarray(z, dtype=float)
        y, z = np.broadcast_arrays(y, z)
        zn = np.linalg.norm(z, axis=-1, keepdims=True)
        u = np.divide(z, zn, out=np.zeros_like(z), where=zn > 0)
        delta = _FD_SCALE * (1.0 + np.linalg.norm(y, axis=-1, keepdims=True))
        return zn * (drift(y + delta * u) - drift(y - delta * u)) / (2.0 * delta)

    return drift_dir


def _looped_rotation(fn):
    # lifts rotation(theta: float, y: (d,)) to the batched convention
    def batched(theta, y):
        theta = np.asarray(theta, dtype=float)
        y = np.asarray(y, dtype=float)
        shape = np.broadcast_shapes(theta.shape + (1,), y.shape)
        t = np.broadcast_to(theta[..., None], shape)[..., 0]
        v = np.broadcast_to(y, shape)
        out = np.empty(shape)
        for idx in np.ndindex(shape[:-1]):
            out[idx] = fn(float(t[idx]), v[idx])
        return out

    return batched


def _looped(fn):
    def batched(*args):
        arrs = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in args))
        out = np.empty(arrs[0].shape)
        for idx in np.ndindex(arrs[0].shape[:-1]):
            out[idx] = fn(*(a[idx] for a in arrs))
        return out

    return batched


def make_custom(
    dim: int,
    rotation: RotationFn,
    drift: DriftFn,
    drift_dir: Optional[DriftDirFn] = None,
    invariant_matrix=None,
    epsilon: float = 1.0,
    vectorized: bool = True,
    name: str = "custom",
    growth: int = 1,
    n_probes: int = 8,
) -> OscillatorProblem:
    """Wrap user callbacks into a problem after probing ``e^A = Id``.

    With ``vectorized=False`` the callbacks are written for a single state
    (and a scalar ``theta``) and get lifted to the batched convention.  A
    missing ``drift_dir`` is replaced by central finite differences.
    """
    _check_epsilon(epsilon)
    if int(dim) != dim or dim < 1:
        raise InvalidParameter(f"dim must be a positive integer, got {dim}")
    if not vectorized:
        rotation = _looped_rotation(rotation)
        drift = _looped(drift)
        if drift_dir is not None:
            drift_dir = _looped(drift_dir)
    if drift_dir is None:
        drift_dir = finite_difference_dir(drift)
    S = None
    if invariant_matrix is not None:
        S = np.asarray(invariant_matrix, dtype=float)
        if S.shape != (dim, dim) or not np.allclose(S, S.T, atol=1e-14):
            raise InvalidParameter("invariant_matrix must be a symmetric dim x dim matrix")

    rng = np.random.default_rng(20240917)
    for i in range(n_probes):
        y = rng.standard_normal(dim)
        for theta in (0.0, 1.0):
            r = np.asarray(rotation(np.float64(theta), y), dtype=float)
            err = np.max(np.abs(r - y))
            if not err <= 1e-12 * (1.0 + np.linalg.norm(y)):
                raise ModelViolation(
                    f"rotation({theta:g}, probe #{i}) differs from the identity by {err:.3e}; "
                    f"e^A = Id is required (probe y = {np.array2string(y, precision=4)})"
                )
    return OscillatorProblem(
        dim=int(dim),
        rotation=rotation,
        drift=drift,
        drift_dir=drift_dir,
        epsilon=float(epsilon),
        invariant_matrix=S,
        name=name,
        growth=growth,
    )
