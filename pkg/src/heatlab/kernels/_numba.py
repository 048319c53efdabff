"""Numba-compiled kernels, loop-for-loop twins of ``_numpy``."""
import math

import numpy as np
from numba import njit

_BIG = 1e200
_LOG_BIG = math.log(_BIG)


@njit(cache=True)
def displacement_table(n_max, x):
    size = n_max + 1
    out = np.zeros((size, size))
    ax = abs(x)
    if ax == 0.0:
        for j in range(size):
            out[j, j] = -1.0 if j % 2 else 1.0
        return out
    y = ax * ax
    lx = math.log(ax)
    for k in range(size):
        logf0 = k * lx - 0.5 * y - 0.5 * math.lgamma(k + 1.0)
        scale = 0.0
        if logf0 < -600.0:
            scale = logf0
        f = math.exp(logf0 - scale)
        fm1 = 0.0
        for j in range(size - k):
            val = f * math.exp(scale)
            if j % 2:
                val = -val
            if x < 0.0 and k % 2:
                val = -val
            out[j, j + k] = val
            out[j + k, j] = val
            nxt = ((2 * j + 1 + k - y) * f - math.sqrt(j * (j + k)) * fm1) / math.sqrt(
                (j + 1.0) * (j + 1.0 + k)
            )
            fm1 = f
            f = nxt
            if abs(f) > _BIG:
                f /= _BIG
                fm1 /= _BIG
                scale += _LOG_BIG
    return out


@njit(cache=True)
def _bose(omega, temperature):
    if temperature <= 0.0:
        return 0.0
    r = omega / temperature
    if r > 700.0:
        return 0.0
    return 1.0 / math.expm1(r)


@njit(cache=True)
def assemble_rates(gaps, coupling2, alpha, omega_c, temperature, tol):
    n = gaps.shape[0]
    w = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            c = coupling2[j, i]
            g = gaps[j, i]
            d = abs(g)
            if c <= 0.0 or d <= tol:
                continue
            gamma = alpha * d * math.exp(-d / omega_c)
            occ = _bose(d, temperature)
            if g > 0.0:
                w[j, i] = gamma * occ * c
            else:
                w[j, i] = gamma * (1.0 + occ) * c
    for i in range(n):
        s = 0.0
        for j in range(n):
            if j != i:
                s += w[j, i]
        w[i, i] = -s
    return w


@njit(cache=True)
def gth_stationary(q):
    n = q.shape[0]
    a = q.copy()
    for i in range(n):
        a[i, i] = 0.0
    for k in range(n - 1, 0, -1):
        s = 0.0
        for j in range(k):
            s += a[k, j]
        if not s > 0.0:
            return np.full(n, np.nan)
        for i in range(k):
            a[i, k] /= s
        for i in range(k):
            aik = a[i, k]
            if aik == 0.0:
                continue
            for j in range(k):
                a[i, j] += aik * a[k, j]
    pi = np.zeros(n)
    pi[0] = 1.0
    for k in range(1, n):
        s = 0.0
        for i in range(k):
            s += pi[i] * a[i, k]
        pi[k] = s
    total = pi.sum()
    for k in range(n):
        pi[k] /= total
    return pi


@njit(cache=True)
def rk4_steps(w, p, dt, n_steps):
    p = p.copy()
    half = 0.5 * dt
    for _ in range(n_steps):
        k1 = w @ p
        k2 = w @ (p + half * k1)
        k3 = w @ (p + half * k2)
        k4 = w @ (p + dt * k3)
        p += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return p
