"""Compiled inner loops for the recursions.

All filters use the pre-sample observation ``x_0 = 0``: the first filtered
state is ``alpha + beta * g_init``.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

# |g| above this is flagged divergent; keeps exp(+-g/2) finite in double precision
G_LIMIT = 700.0


@njit(cache=True, nogil=True)
def egarch_filter(alpha, beta, gamma, delta, x, g_init):
    n = x.shape[0]
    g = np.empty(n)
    prev = g_init
    divergent = abs(prev) > G_LIMIT
    if divergent:
        prev = max(-G_LIMIT, min(G_LIMIT, prev))
    xp = 0.0
    for t in range(n):
        cur = alpha + beta * prev + (gamma * xp + delta * abs(xp)) * math.exp(-0.5 * prev)
        if not (abs(cur) <= G_LIMIT):
            divergent = True
            cur = G_LIMIT if not (cur < 0.0) else -G_LIMIT
        g[t] = cur
        prev = cur
        xp = x[t]
    return g, divergent


@njit(cache=True, nogil=True)
def garch_filter(alpha, beta, gamma, x, g_init):
    n = x.shape[0]
    g = np.empty(n)
    prev = g_init
    xp = 0.0
    for t in range(n):
        cur = alpha + beta * prev + gamma * xp * xp
        g[t] = cur
        prev = cur
        xp = x[t]
    return g


@njit(cache=True, nogil=True)
def egarch_qlik(alpha, beta, gamma, delta, x, g_init, burn):
    """Mean of (x_t**2 exp(-g_t) + g_t)/2 over t >= burn; inf if divergent."""
    n = x.shape[0]
    prev = g_init
    if abs(prev) > G_LIMIT:
        return np.inf
    xp = 0.0
    total = 0.0
    for t in range(n):
        e = math.exp(-0.5 * prev)
        cur = alpha + beta * prev + (gamma * xp + delta * abs(xp)) * e
        if not (abs(cur) <= G_LIMIT):
            return np.inf
        xt = x[t]
        if t >= burn:
            total += xt * xt * math.exp(-cur) + cur
        prev = cur
        xp = xt
    return 0.5 * total / (n - burn)


@njit(cache=True, nogil=True)
def garch_qlik(alpha, beta, gamma, x, g_init, burn):
    n = x.shape[0]
    prev = g_init
    xp = 0.0
    total = 0.0
    for t in range(n):
        cur = alpha + beta * prev + gamma * xp * xp
        if not (cur > 0.0) or not math.isfinite(cur):
            return np.inf
        xt = x[t]
        if t >= burn:
            total += xt * xt / cur + math.log(cur)
        prev = cur
        xp = xt
    return 0.5 * total / (n - burn)


@njit(cache=True, nogil=True)
def egarch_log_lipschitz_mean(alpha, beta, gamma, delta, x):
    """Mean over x of log max(beta, (gamma x + delta|x|) exp(-alpha/(2(1-beta)))/2 - beta)."""
    n = x.shape[0]
    half_floor = 0.5 * alpha / (1.0 - beta)
    log_2b = math.log(2.0 * beta) if beta > 0.0 else -np.inf
    log_b = math.log(beta) if beta > 0.0 else -np.inf
    total = 0.0
    for t in range(n):
        w = gamma * x[t] + delta * abs(x[t])
        if w > 0.0:
            u = math.log(0.5 * w) - half_floor
            if u > log_2b:
                total += u + math.log1p(-min(beta * math.exp(-u), 0.5))
            else:
                total += log_b
        else:
            if beta > 0.0:
                total += log_b
            else:
                return -np.inf
    return total / n


@njit(cache=True)
def egarch_simulate(alpha, beta, gamma, delta, z, h0):
    """log sigma^2 path: h[0] = h0, h[t] = alpha + beta h[t-1] + gamma z[t-1] + delta |z[t-1]|."""
    n = z.shape[0]
    h = np.empty(n)
    h[0] = h0
    for t in range(1, n):
        zp = z[t - 1]
        h[t] = alpha + beta * h[t - 1] + gamma * zp + delta * abs(zp)
    return h


@njit(cache=True)
def garch_simulate(alpha, beta, gamma, z, s0):
    n = z.shape[0]
    s = np.empty(n)
    s[0] = s0
    for t in range(1, n):
        zp = z[t - 1]
        s[t] = alpha + (beta + gamma * zp * zp) * s[t - 1]
    return s
