"""Compiled Brownian-path kernels for the path-sampled oracle.

A path is advanced by Euler increments ``sqrt(dt) * xi``.  Within each
revolution only ``w = W - W(T_n)`` is tracked; since ``W(T_n)`` is an integer
the phases ``e_k = exp(2 i pi k W)`` only depend on ``w``.  Crossings of
``w = +-1`` are located by linear interpolation inside the step (optionally
also by a Brownian-bridge test between grid points), and the path is treated
as piecewise linear between the resulting knots.

The time integrals of ``e_k`` over each linear segment are exact; the
iterated integrals use the trapezoidal rule on top of them.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

# status codes returned by the kernels
OK = 0
TIME_CAP = 1
KNOT_CAP = 2


@njit(cache=True, inline="always")
def _sinc_ratio(s, x):
    # sin(x)/x given s = sin(x), stable for tiny x
    if abs(x) < 1e-4:
        return 1.0 - x * x / 6.0
    return s / x


@njit(cache=True, inline="always")
def _bridge_hit(w0, w1, dt, u):
    """Crossing side (+1/-1) if a Brownian bridge from w0 to w1 leaves (-1, 1)."""
    du = 1.0 - w0
    dl = 1.0 + w0
    if du < dl:
        if du > 8.0 * math.sqrt(dt):
            return 0
        p = math.exp(-2.0 * du * (1.0 - w1) / dt)
        return 1 if u < p else 0
    if dl > 8.0 * math.sqrt(dt):
        return 0
    p = math.exp(-2.0 * dl * (1.0 + w1) / dt)
    return -1 if u < p else 0


MOMENT_KMAX = 4
MOMENT_COLUMNS = 4 * MOMENT_KMAX + 2

# normals (and bridge uniforms) are drawn in blocks of this size; a call into
# the generator per step costs more than the step itself
DRAW_BLOCK = 512


@njit(cache=True)
def _refill(gen, bridge):
    normals = gen.standard_normal(DRAW_BLOCK)
    uniforms = gen.random(DRAW_BLOCK) if bridge else np.zeros(1)
    return normals, uniforms


@njit(cache=True, inline="always")
def _cis_small(x):
    # cos and sin for |x| <~ 0.3 by Taylor polynomials (error < 1e-16 at 0.2)
    x2 = x * x
    c = 1.0 + x2 * (-0.5 + x2 * (1.0 / 24 + x2 * (-1.0 / 720 + x2 * (1.0 / 40320 + x2 * (-1.0 / 3628800 + x2 / 479001600)))))
    s = x * (1.0 + x2 * (-1.0 / 6 + x2 * (1.0 / 120 + x2 * (-1.0 / 5040 + x2 * (1.0 / 362880 + x2 * (-1.0 / 39916800 + x2 / 6227020800))))))
    return complex(c, s)


@njit(cache=True, inline="always")
def _cis(x):
    if abs(x) < 0.3:
        return _cis_small(x)
    return complex(math.cos(x), math.sin(x))


@njit(cache=True, inline="always")
def _mode_step(A, b0, bk0, bkk, fk0, fkk, ez, e1, sinc_h, hh, s1):
    # advance the accumulators of one mode k >= 1 over a linear segment, given
    # the phases at the segment midpoint (ez) and end (e1)
    A1 = A + sinc_h * ez
    g0 = e1 * s1
    g1 = e1 * A1.conjugate()
    return (A1, b0 + hh * (A + A1), bk0 + hh * (fk0 + g0), bkk + hh * (fkk + g1), g0, g1)


@njit(cache=True, inline="always")
def _moment_segment(e, st, s, h, dw):
    # e is the mode-1 phase at the segment start; the mode-k phases are its
    # powers.  st holds (A, beta_0k, beta_k0, beta_k-k, f_k0, f_kk) for k = 1..4
    x = math.pi * dw
    z = _cis(x)
    hh = 0.5 * h
    s1 = s + h
    ez1 = e * z
    e11 = ez1 * z
    ez2 = ez1 * ez1
    e12 = e11 * e11
    ez3 = ez2 * ez1
    e13 = e12 * e11
    ez4 = ez2 * ez2
    e14 = e12 * e12
    if abs(x) < 1e-4:
        x2 = x * x / 6.0
        sh1 = h * (1.0 - x2)
        sh2 = h * (1.0 - 4.0 * x2)
        sh3 = h * (1.0 - 9.0 * x2)
        sh4 = h * (1.0 - 16.0 * x2)
    else:
        z2 = z * z
        hx = h / x
        sh1 = hx * z.imag
        sh2 = 0.5 * hx * z2.imag
        sh3 = (1.0 / 3.0) * hx * (z2 * z).imag
        sh4 = 0.25 * hx * (z2 * z2).imag
    m1 = _mode_step(st[0], st[1], st[2], st[3], st[4], st[5], ez1, e11, sh1, hh, s1)
    m2 = _mode_step(st[6], st[7], st[8], st[9], st[10], st[11], ez2, e12, sh2, hh, s1)
    m3 = _mode_step(st[12], st[13], st[14], st[15], st[16], st[17], ez3, e13, sh3, hh, s1)
    m4 = _mode_step(st[18], st[19], st[20], st[21], st[22], st[23], ez4, e14, sh4, hh, s1)
    return e11, m1 + m2 + m3 + m4


@njit(cache=True, nogil=True, fastmath=True)
def moment_path(gen, dt, n_rev, record_at, bridge, t_cap, out):
    """Streaming statistics of one path for modes ``0..MOMENT_KMAX``.

    ``out[r]`` receives, at revolution ``record_at[r]`` (increasing), the row
    ``[alpha_k (k=0..K), beta_{0,k} (k=0..K), beta_{k,0} (k=1..K),
    beta_{k,-k} (k=1..K)]`` normalized by ``n`` and ``n**2``, with
    ``K = MOMENT_KMAX = 4``.  The four modes are unrolled by hand, which
    roughly halves the cost per step.  Returns the status code.
    """
    sq = math.sqrt(dt)
    c0 = 0.0j
    one = 1.0 + c0
    e = one
    st = (
        c0, c0, c0, c0, c0, c0, c0, c0, c0, c0, c0, c0,
        c0, c0, c0, c0, c0, c0, c0, c0, c0, c0, c0, c0,
    )
    normals, uniforms = _refill(gen, bridge)
    nd = 0
    b00 = 0.0
    w = 0.0
    s = 0.0
    n = 0
    rec = 0
    while True:
        if nd == DRAW_BLOCK:
            normals, uniforms = _refill(gen, bridge)
            nd = 0
        w1 = w + sq * normals[nd]
        u = uniforms[nd] if bridge else 0.0
        nd += 1
        side = 0
        frac = 0.5
        if w1 >= 1.0:
            side = 1
            frac = (1.0 - w) / (w1 - w)
        elif w1 <= -1.0:
            side = -1
            frac = (-1.0 - w) / (w1 - w)
        elif bridge:
            side = _bridge_hit(w, w1, dt, u)
        if side == 0:
            e, st = _moment_segment(e, st, s, dt, w1 - w)
            b00 += 0.5 * dt * (2.0 * s + dt)
            s += dt
            w = w1
        else:
            h = frac * dt
            e, st = _moment_segment(e, st, s, h, side - w)
            b00 += 0.5 * h * (2.0 * s + h)
            s += h
            n += 1
            # W is an integer at the barrier: reset the phases exactly and
            # restart the trapezoid integrands from the reset values
            sc = s + c0
            e = one
            st = (
                st[0], st[1], st[2], st[3], sc, st[0].conjugate(),
                st[6], st[7], st[8], st[9], sc, st[6].conjugate(),
                st[12], st[13], st[14], st[15], sc, st[12].conjugate(),
                st[18], st[19], st[20], st[21], sc, st[18].conjugate(),
            )
            if rec < record_at.shape[0] and record_at[rec] == n:
                inv = 1.0 / n
                inv2 = inv * inv
                row = out[rec]
                row[0] = s * inv
                row[5] = b00 * inv2
                for k in range(4):
                    row[1 + k] = st[6 * k] * inv
                    row[6 + k] = st[6 * k + 1] * inv2
                    row[10 + k] = st[6 * k + 2] * inv2
                    row[14 + k] = st[6 * k + 3] * inv2
                rec += 1
            if n >= n_rev:
                return OK
            h = (1.0 - frac) * dt
            e, st = _moment_segment(e, st, s, h, w1 - side)
            b00 += 0.5 * h * (2.0 * s + h)
            s += h
            w = w1 - side
        if s > t_cap:
            return TIME_CAP


@njit(cache=True, nogil=True, fastmath=True)
def full_path(gen, dt, n_rev, K, bridge, t_cap, alpha, beta, knots_t, knots_w):
    """Full ``alpha_k`` and ``beta_{p,k}`` for modes ``-K/2..K/2-1`` of one path.

    Unnormalized integrals are written into ``alpha`` (K,) and ``beta`` (K, K).
    When ``knots_t`` is non-empty the piecewise-linear path is recorded as
    knots ``(t, W)`` with ``W`` the unwrapped value.  Returns
    ``(status, T_N, number_of_knots)``.
    """
    half = K // 2
    sq = math.sqrt(dt)
    record = knots_t.shape[0] > 0
    cap = knots_t.shape[0]
    # phases for k = 0..half (k = half is needed for the mode -half)
    e = np.ones(half + 1, dtype=np.complex128)
    en = np.ones(half + 1, dtype=np.complex128)
    ef = np.empty(K, dtype=np.complex128)  # e at start of segment, mode order
    efn = np.empty(K, dtype=np.complex128)
    A = np.zeros(K, dtype=np.complex128)
    An = np.zeros(K, dtype=np.complex128)
    seg = np.empty(K, dtype=np.complex128)
    zpow = np.empty(half + 1, dtype=np.complex128)
    for j in range(K):
        alpha[j] = 0.0
        for i in range(K):
            beta[j, i] = 0.0
    w = 0.0
    base = 0.0  # integer W(T_n)
    s = 0.0
    n = 0
    nknots = 0
    if record:
        knots_t[0] = 0.0
        knots_w[0] = 0.0
        nknots = 1
    normals, uniforms = _refill(gen, bridge)
    nd = 0
    while True:
        if nd == DRAW_BLOCK:
            normals, uniforms = _refill(gen, bridge)
            nd = 0
        w1 = w + sq * normals[nd]
        u = uniforms[nd] if bridge else 0.0
        nd += 1
        side = 0
        frac = 1.0
        if w1 >= 1.0:
            side = 1
            frac = (1.0 - w) / (w1 - w)
        elif w1 <= -1.0:
            side = -1
            frac = (-1.0 - w) / (w1 - w)
        elif bridge:
            side = _bridge_hit(w, w1, dt, u)
            frac = 0.5
        for piece in range(2 if side != 0 else 1):
            if side == 0:
                h = dt
                dw = w1 - w
            elif piece == 0:
                h = frac * dt
                dw = side - w
            else:
                h = (1.0 - frac) * dt
                dw = w1 - side
            x = math.pi * dw
            z = _cis(x)
            zpow[0] = 1.0
            for k in range(1, half + 1):
                zpow[k] = zpow[k - 1] * z
                en[k] = e[k] * zpow[k] * zpow[k]
            for j in range(K):
                k = j - half
                if k >= 0:
                    ef[j] = e[k]
                    efn[j] = en[k]
                    zk = zpow[k]
                else:
                    ef[j] = e[-k].conjugate()
                    efn[j] = en[-k].conjugate()
                    zk = zpow[-k].conjugate()
                seg[j] = h * ef[j] * zk * _sinc_ratio(zk.imag, k * x)
                An[j] = A[j] + seg[j]
            hh = 0.5 * h
            for jp in range(K):
                a0 = hh * ef[jp]
                a1 = hh * efn[jp]
                for jk in range(K):
                    beta[jp, jk] += a0 * A[jk] + a1 * An[jk]
            for j in range(K):
                alpha[j] += seg[j]
                A[j] = An[j]
            for k in range(half + 1):
                e[k] = en[k]
            s += h
            if record:
                if nknots >= cap:
                    return KNOT_CAP, s, nknots
                knots_t[nknots] = s
                if side == 0:
                    knots_w[nknots] = base + w1
                elif piece == 0:
                    knots_w[nknots] = base + side
                else:
                    # base was already moved to the new revolution
                    knots_w[nknots] = base + w1 - side
                nknots += 1
            if side != 0 and piece == 0:
                n += 1
                base += side
                for k in range(half + 1):
                    e[k] = 1.0
                if n >= n_rev:
                    return OK, s, nknots
        if side != 0:
            w = w1 - side
        else:
            w = w1
        if s > t_cap:
            return TIME_CAP, s, nknots
