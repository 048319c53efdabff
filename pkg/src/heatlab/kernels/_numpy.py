"""Pure-numpy reference implementations of the hot kernels.

Every function here has a loop-level twin in ``_numba``; the two must agree
to rounding.  These versions vectorize over the innermost dimension instead
of looping element by element.
"""
import math

import numpy as np

# Rescale threshold for the diagonal recurrence; keeps magnitudes in range
# when the starting value underflows (large displacements).
_BIG = 1e200
_LOG_BIG = math.log(_BIG)


def displacement_table(n_max, x):
    """Table of D_nm(x) for 0 <= n, m <= n_max (symmetric)."""
    size = n_max + 1
    out = np.zeros((size, size))
    ax = abs(x)
    if ax == 0.0:
        idx = np.arange(size)
        out[idx, idx] = np.where(idx % 2 == 0, 1.0, -1.0)
        return out
    y = ax * ax
    k = np.arange(size, dtype=np.float64)
    # log of the starting value x^k e^{-x^2/2} / sqrt(k!) on each diagonal
    logf0 = k * math.log(ax) - 0.5 * y - 0.5 * np.array([math.lgamma(v + 1.0) for v in k])
    scale = np.where(logf0 < -600.0, logf0, 0.0)
    f = np.exp(logf0 - scale)
    fm1 = np.zeros(size)
    for j in range(size):
        active = size - j  # diagonals k with j + k <= n_max
        kk = k[:active]
        val = f[:active] * np.exp(scale[:active])
        sign = -1.0 if j % 2 else 1.0
        rows = np.full(active, j)
        cols = j + np.arange(active)
        out[rows, cols] = sign * val
        out[cols, rows] = sign * val
        nxt = ((2 * j + 1 + kk - y) * f[:active] - np.sqrt(j * (j + kk)) * fm1[:active]) / np.sqrt(
            (j + 1) * (j + 1 + kk)
        )
        fm1[:active] = f[:active]
        f[:active] = nxt
        big = np.abs(f[:active]) > _BIG
        if big.any():
            f[:active][big] /= _BIG
            fm1[:active][big] /= _BIG
            scale[:active][big] += _LOG_BIG
    if x < 0:
        parity = np.add.outer(np.arange(size), np.arange(size)) % 2
        out[parity == 1] *= -1.0
    return out


def bose(omega, temperature):
    """Bose-Einstein occupation on positive frequencies (array-valued)."""
    omega = np.asarray(omega, dtype=np.float64)
    if temperature <= 0.0:
        return np.zeros_like(omega)
    r = omega / temperature
    with np.errstate(over="ignore"):
        return np.where(r > 700.0, 0.0, 1.0 / np.expm1(np.minimum(r, 700.0)))


def assemble_rates(gaps, coupling2, alpha, omega_c, temperature, tol):
    """Rate matrix W[j, i] (rate i -> j) from gaps[j, i] = E_j - E_i."""
    d = np.abs(gaps)
    live = (coupling2 > 0.0) & (d > tol)
    dd = np.where(live, d, 1.0)
    gamma = alpha * dd * np.exp(-dd / omega_c)
    occ = bose(dd, temperature)
    up = gamma * occ * coupling2
    down = gamma * (1.0 + occ) * coupling2
    w = np.where(live, np.where(gaps > 0.0, up, down), 0.0)
    np.fill_diagonal(w, 0.0)
    w[np.diag_indices_from(w)] = -w.sum(axis=0)
    return w


def gth_stationary(q):
    """Grassmann-Taksar-Heyman state reduction.

    ``q[i, j]`` is the rate i -> j of an irreducible chain; the diagonal is
    ignored.  Returns the normalized stationary vector, or an all-NaN vector
    if a pivot vanishes.
    """
    a = np.array(q, dtype=np.float64, copy=True)
    n = a.shape[0]
    np.fill_diagonal(a, 0.0)
    for k in range(n - 1, 0, -1):
        s = a[k, :k].sum()
        if not s > 0.0:
            return np.full(n, np.nan)
        a[:k, k] /= s
        a[:k, :k] += np.outer(a[:k, k], a[k, :k])
    pi = np.zeros(n)
    pi[0] = 1.0
    for k in range(1, n):
        pi[k] = pi[:k] @ a[:k, k]
    return pi / pi.sum()


def rk4_steps(w, p, dt, n_steps):
    """Advance dp/dt = W p by ``n_steps`` classical RK4 steps."""
    p = np.array(p, dtype=np.float64, copy=True)
    half = 0.5 * dt
    for _ in range(n_steps):
        k1 = w @ p
        k2 = w @ (p + half * k1)
        k3 = w @ (p + half * k2)
        k4 = w @ (p + dt * k3)
        p += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return p
