"""Multirevolution steppers and reference solutions.

Every stepper maps ``Y_m`` to ``Y_{m+1}`` over ``N`` revolutions, that is a
macro step ``H = N * eps`` in the original time.  States are real arrays of
shape ``(d,)`` or ``(B, d)``; noise arguments carry a matching optional
leading batch axis.

The second-order term ``sum_{p,k} c1_p(y)(c0_k(y)) beta_{p,k}`` is evaluated
through the quadrature nodes: with ``v_p = sum_k beta_{p,k} c0_k`` it equals
``(1/M) sum_j g1_{theta_j}(y)(u_j)`` where ``u_j = sum_p e^{-2 i pi p theta_j}
v_p``, so one step costs ``M`` evaluations of ``drift`` for ``c0`` and ``M``
(real part) plus ``M`` (imaginary residue) evaluations of ``drift_dir``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import randomkernel as rk
from .errors import InvalidParameter, ModelViolation, ResourceError, StepRejected
from .fourier import averaged_field, coeffs_g0, mode_indices, quadrature_nodes, sample_g0, sample_g1
from .problem import OscillatorProblem, SchemeConfig

METHODS = ("euler-limit", "method-a", "method-b", "exact-rv")
RESIDUE_TOL = 1e-9
MAX_REFERENCE_KNOTS = 80_000_000


@dataclass(frozen=True)
class StepReport:
    new_state: np.ndarray
    fp_iterations: int = 0
    fp_residual: float = 0.0
    imag_residue: float = 0.0


# ---------------------------------------------------------------------------
# contractions with the beta tables


def contract_sparse(tables: rk.MomentTables, c: np.ndarray, tilde: bool, paired_only: bool = False):
    """``v_p = sum_k beta_{p,k} c_k`` for the deterministic tables.

    Only the support ``{p = 0} U {k = 0} U {p + k = 0}`` is visited.  With
    ``paired_only`` the unpaired mode ``-K/2`` is left out on both indices.
    """
    K = c.shape[0]
    half = K // 2
    modes = mode_indices(K)
    row0 = tables.beta_tilde(0, modes) if tilde else tables.beta(0, modes)
    if paired_only:
        row0 = row0.copy()
        row0[0] = 0.0
    bshape = (K,) + (1,) * (c.ndim - 1)
    v = np.zeros_like(c)
    v[half] = np.sum(row0.reshape(bshape) * c, axis=0)
    c0 = c[half]
    for p in modes:
        if p == 0 or (paired_only and p == -half):
            continue
        i = p + half
        v[i] = -tables._b(p) * c0
        if not tilde and -p < half:
            v[i] = v[i] + tables._b(p) * c[-p + half]
    return v


def contract_dense(beta: np.ndarray, c: np.ndarray, paired_only: bool = False):
    """``v_p = sum_k beta_{p,k} c_k`` with ``beta`` of shape (K, K) or (B, K, K)."""
    if paired_only:
        beta = beta.copy()
        beta[..., 0, :] = 0.0
        beta[..., :, 0] = 0.0
    if beta.ndim == 2:
        return np.einsum("pk,k...->p...", beta, c)
    return np.einsum("bpk,kbd->pbd", beta, c)


def _first_order(c: np.ndarray, alpha: np.ndarray):
    """Return ``(Re sum_k alpha_k c_k, |Im| of the paired part)``."""
    cK = np.moveaxis(c, 0, -1)  # (..., d, K)
    a = np.asarray(alpha)[..., None, :]
    terms = cK * a
    paired = terms[..., 1:].sum(axis=-1)
    total = paired.real + terms[..., 0].real
    return total, np.abs(paired.imag).max(initial=0.0)


def _second_order(problem, y, v, v_paired, K):
    theta = quadrature_nodes(K)
    modes = mode_indices(K)
    E = np.exp(-2j * np.pi * np.outer(theta, modes))  # (M, K)
    u = np.tensordot(E, v, axes=(1, 0))
    total = sample_g1(problem, y, u.real, theta).mean(axis=0)
    if v_paired is None:
        return total, 0.0
    up = np.tensordot(E, v_paired, axes=(1, 0))
    resid = sample_g1(problem, y, up.imag, theta).mean(axis=0)
    return total, np.abs(resid).max(initial=0.0)


def _increment(problem, y, K, H, alpha, beta_mode, beta, check_residue=True):
    """``H sum c0_k alpha_k + H^2 sum c1_p(c0_k) beta_{p,k}`` at ``y``.

    ``beta_mode`` is ``"sparse"`` (``beta`` is a ``(tables, tilde)`` pair) or
    ``"dense"`` (``beta`` is an array).
    """
    c = coeffs_g0(problem, y, K).coeffs
    first, r1 = _first_order(c, alpha)
    if beta_mode == "sparse":
        tables, tilde = beta
        v = contract_sparse(tables, c, tilde)
        vp = contract_sparse(tables, c, tilde, paired_only=True) if check_residue else None
    else:
        v = contract_dense(beta, c)
        vp = contract_dense(beta, c, paired_only=True) if check_residue else None
    second, r2 = _second_order(problem, y, v, vp, K)
    return H * first + H * H * second, H * r1 + H * H * r2


def _check_residue(problem, y, residue):
    scale = (1.0 + np.max(np.linalg.norm(np.atleast_2d(y), axis=-1))) ** problem.growth
    if residue > RESIDUE_TOL * scale:
        raise ModelViolation(
            f"imaginary residue {residue:.3e} exceeds {RESIDUE_TOL:g} * (1 + |y|)^{problem.growth}; "
            "the rotated field is not conjugate symmetric"
        )


def _check_draw(config: SchemeConfig, N, K_t):
    if N != config.N or K_t != config.K_t:
        raise InvalidParameter(f"noise built for (N={N}, K_t={K_t}) but config has (N={config.N}, K_t={config.K_t})")


# ---------------------------------------------------------------------------
# steppers


def step_method_a(problem: OscillatorProblem, y, config: SchemeConfig, draw: rk.NoiseDraw) -> StepReport:
    """Explicit weak order two step with the discrete surrogates."""
    _check_draw(config, draw.N, draw.K_t)
    y = np.asarray(y, dtype=float)
    inc, resid = _increment(
        problem, y, config.K_t, config.H(problem), draw.alpha_hat, "sparse", (draw.tables, False)
    )
    _check_residue(problem, y, resid)
    return StepReport(y + inc, 0, 0.0, resid)


def step_method_b(problem: OscillatorProblem, y, config: SchemeConfig, draw: rk.NoiseDraw) -> StepReport:
    """Implicit midpoint-type step preserving quadratic invariants.

    Solved by plain fixed-point iteration from ``Y' = y``; the iteration
    stops when two successive iterates differ by at most ``fp_tol`` (max norm
    over the whole batch).  The imaginary residue is measured at the first
    iterate only.
    """
    _check_draw(config, draw.N, draw.K_t)
    y = np.asarray(y, dtype=float)
    H = config.H(problem)
    beta = (draw.tables, True)
    Y = y.copy()
    diff = np.inf
    resid = 0.0
    for it in range(1, config.fp_max_iters + 1):
        # the symmetry residue is a property of the field near y: checked once
        inc, r = _increment(problem, 0.5 * (y + Y), config.K_t, H, draw.alpha_hat, "sparse", beta, it == 1)
        if it == 1:
            resid = r
        Y_new = y + inc
        diff = float(np.max(np.abs(Y_new - Y), initial=0.0))
        Y = Y_new
        if diff <= config.fp_tol:
            _check_residue(problem, Y, resid)
            return StepReport(Y, it, diff, resid)
        if not np.all(np.isfinite(Y)):
            break
    raise StepRejected(
        f"fixed-point iteration did not reach {config.fp_tol:g} in {config.fp_max_iters} "
        f"iterations (last update {diff:.3e}); use a smaller macro step H = N eps"
    )


def step_euler_limit(problem: OscillatorProblem, y, config: SchemeConfig) -> StepReport:
    """Deterministic weak order one step ``y + H <g0>(y)``."""
    y = np.asarray(y, dtype=float)
    c = coeffs_g0(problem, y, config.K_t)
    return StepReport(y + config.H(problem) * c.mode(0).real, 0, 0.0, float(np.abs(c.mode(0).imag).max()))


def step_exact_rv(problem: OscillatorProblem, y, config: SchemeConfig, oracle_draw: rk.OracleDraw) -> StepReport:
    """Second-order expansion evaluated with path-sampled ``alpha``, ``beta``."""
    _check_draw(config, oracle_draw.N, oracle_draw.K_t)
    y = np.asarray(y, dtype=float)
    inc, resid = _increment(
        problem, y, config.K_t, config.H(problem), oracle_draw.alpha, "dense", oracle_draw.beta
    )
    _check_residue(problem, y, resid)
    return StepReport(y + inc, 0, 0.0, resid)


# ---------------------------------------------------------------------------
# averaged model


def solve_averaged_ode(problem: OscillatorProblem, y0, T: float, steps: int, K_t: int = 16) -> np.ndarray:
    """Classical RK4 for ``dy/dt = <g0>(y)`` on ``[0, T]``."""
    if int(steps) != steps or steps < 1:
        raise InvalidParameter(f"steps must be a positive integer, got {steps}")
    h = T / steps
    y = np.asarray(y0, dtype=float).copy()

    def f(v):
        return averaged_field(problem, v, K_t).real

    for _ in range(int(steps)):
        k1 = f(y)
        k2 = f(y + 0.5 * h * k1)
        k3 = f(y + 0.5 * h * k2)
        k4 = f(y + h * k3)
        y = y + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    return y


# ---------------------------------------------------------------------------
# trajectories


def integrate(
    problem: OscillatorProblem,
    y0,
    config: SchemeConfig,
    method: str,
    m_steps: int,
    rng: np.random.Generator,
    oracle_dt: float = 1e-4,
    oracle_bridge: bool = False,
) -> np.ndarray:
    """Apply ``m_steps`` macro steps; returns all states, shape ``(m+1,) + y0.shape``.

    A fresh noise draw is used at every step (one per trajectory for a
    batched ``y0``).  The sequence of draws is a function of ``rng`` only.
    For ``exact-rv``, ``oracle_bridge`` turns on bridge crossing detection in
    the fine path; without it each revolution time is biased upward by about
    ``0.58 sqrt(dt)``, which accumulates over ``N m`` revolutions.
    """
    if method not in METHODS:
        raise InvalidParameter(f"unknown method {method!r}; expected one of {METHODS}")
    if int(m_steps) != m_steps or m_steps < 0:
        raise InvalidParameter("m_steps must be a nonnegative integer")
    y = np.asarray(y0, dtype=float)
    batch = None if y.ndim == 1 else y.shape[0]
    if method == "exact-rv" and batch is not None:
        raise InvalidParameter("exact-rv integrates a single trajectory")
    sampler = rk.AlphaSampler(config.N, config.K_t) if method in ("method-a", "method-b") else None
    out = [y]
    for m in range(int(m_steps)):
        try:
            if method == "euler-limit":
                rep = step_euler_limit(problem, y, config)
            elif method == "exact-rv":
                d = rk.oracle_alpha_beta(rng, config.N, config.K_t, oracle_dt, bridge=oracle_bridge)
                rep = step_exact_rv(problem, y, config, d)
            else:
                draw = sampler.draw(rng, batch)
                step = step_method_a if method == "method-a" else step_method_b
                rep = step(problem, y, config, draw)
        except StepRejected as exc:
            raise StepRejected(f"step {m}: {exc}", step_index=m) from exc
        except ModelViolation as exc:
            raise ModelViolation(f"step {m}: {exc}") from exc
        y = rep.new_state
        out.append(y)
    return np.stack(out)


# ---------------------------------------------------------------------------
# strong reference on a piecewise-linear path


def _path_knots(problem, N, tau, rng_or_path):
    if isinstance(rng_or_path, rk.OracleDraw):
        if rng_or_path.knots_t is None:
            raise InvalidParameter("oracle draw was sampled without record_path=True")
        return rng_or_path.knots_t, rng_or_path.knots_w
    if isinstance(rng_or_path, tuple):
        return rng_or_path
    return rk.sample_path_knots(rng_or_path, N, tau)


def reference_strong_path(
    problem: OscillatorProblem,
    y,
    N: int,
    tau: float,
    rng_or_path,
    kind: str = "flow",
    substeps: int = 1,
) -> np.ndarray:
    """Value at ``T_N`` of the rescaled solution along a piecewise-linear path.

    ``rng_or_path`` is a generator (a path with step ``tau`` is drawn), an
    ``OracleDraw`` recorded with its path, or a ``(knots_t, knots_w)`` pair.

    ``kind="flow"`` integrates ``dZ/ds = eps g0_{W(s)}(Z)`` by RK4 on each
    linear piece, which is the exact solution for that path up to ``O(tau^4)``.
    ``kind="psi2"`` evaluates the second-order expansion in ``eps`` by
    cumulative trapezoidal quadrature of its nested integrals.
    """
    if not 0 < tau <= 1e-2:
        raise InvalidParameter(f"tau must lie in (0, 1e-2], got {tau}")
    t, w = _path_knots(problem, N, tau, rng_or_path)
    return reference_strong_paths(problem, y, [(t, w)], kind=kind, substeps=substeps)[0]


def reference_strong_paths(
    problem: OscillatorProblem, y, paths: Sequence, kind: str = "flow", substeps: int = 1
) -> np.ndarray:
    """Vectorized :func:`reference_strong_path` over many ``(knots_t, knots_w)`` paths.

    ``substeps`` RK4 steps are taken on each linear piece of the path.
    """
    if kind not in ("flow", "psi2"):
        raise InvalidParameter(f"unknown reference kind {kind!r}")
    B = len(paths)
    L = max(len(p[0]) for p in paths)
    if B * L > MAX_REFERENCE_KNOTS:
        raise ResourceError(f"{B * L} path knots exceed the cap {MAX_REFERENCE_KNOTS}")
    T = np.empty((B, L))
    W = np.empty((B, L))
    for i, (t, w) in enumerate(paths):
        n = len(t)
        T[i, :n], W[i, :n] = t, w
        T[i, n:], W[i, n:] = t[-1], w[-1]  # padding: zero-length pieces
    y = np.asarray(y, dtype=float)
    Y = np.broadcast_to(y, (B, y.shape[-1])).copy()
    eps = problem.epsilon
    if kind == "flow":
        return _flow_rk4(problem, Y, T, W, eps, int(substeps))
    return _psi2(problem, Y, T, W, eps)


def _g0(problem, theta, z):
    r = problem.rotation(theta, z)
    return problem.rotation(-theta, problem.drift(r))


def _flow_rk4(problem, Z, T, W, eps, substeps=1):
    for j in range(T.shape[1] - 1):
        h = (T[:, j + 1] - T[:, j])[:, None] / substeps
        dw = (W[:, j + 1] - W[:, j]) / substeps
        for i in range(substeps):
            wa = W[:, j] + i * dw
            wm, wb = wa + 0.5 * dw, wa + dw
            k1 = _g0(problem, wa, Z)
            k2 = _g0(problem, wm, Z + 0.5 * eps * h * k1)
            k3 = _g0(problem, wm, Z + 0.5 * eps * h * k2)
            k4 = _g0(problem, wb, Z + eps * h * k3)
            Z = Z + eps * h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    return Z


def _psi2(problem, y, T, W, eps):
    h = np.diff(T, axis=1)[..., None]  # (B, L-1, 1)
    yb = np.broadcast_to(y[:, None, :], W.shape + (y.shape[-1],))
    g = _g0(problem, W, yb)  # (B, L, d)
    inner = np.concatenate(
        [np.zeros_like(g[:, :1]), np.cumsum(0.5 * h * (g[:, 1:] + g[:, :-1]), axis=1)], axis=1
    )
    first = inner[:, -1]
    rw = problem.rotation(W, yb)
    g1 = problem.rotation(-W, problem.drift_dir(rw, problem.rotation(W, inner)))
    second = np.sum(0.5 * h * (g1[:, 1:] + g1[:, :-1]), axis=1)
    return y + eps * first + eps**2 * second
