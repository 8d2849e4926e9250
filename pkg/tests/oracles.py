"""Slow, independent reference computations used only by the tests."""

from __future__ import annotations

import itertools

import numpy as np


def det_cofactor(m) -> float:
    """Laplace expansion along the first row."""
    m = np.asarray(m, dtype=float)
    n = m.shape[0]
    if n == 1:
        return float(m[0, 0])
    total = 0.0
    for j in range(n):
        minor = np.delete(np.delete(m, 0, axis=0), j, axis=1)
        total += (-1) ** j * m[0, j] * det_cofactor(minor)
    return total


def project_box_hyperplane(y, lo, hi, a, b, iters=200) -> np.ndarray:
    """Euclidean projection onto ``{lo <= x <= hi, a'x = b}`` with ``a > 0``.

    ``x(t) = clip(y - t a, lo, hi)`` is monotone in ``t``; bisect on ``t``.
    """
    def g(t):
        return a @ np.clip(y - t * a, lo, hi) - b

    t_lo, t_hi = -1.0, 1.0
    while g(t_lo) < 0:
        t_lo *= 2
    while g(t_hi) > 0:
        t_hi *= 2
    for _ in range(iters):
        mid = 0.5 * (t_lo + t_hi)
        if g(mid) > 0:
            t_lo = mid
        else:
            t_hi = mid
    return np.clip(y - 0.5 * (t_lo + t_hi) * a, lo, hi)


def project_simplex_cap(y) -> np.ndarray:
    """Projection of one row onto ``{x >= 0, sum(x) <= 1}``."""
    x = np.clip(y, 0.0, None)
    if x.sum() <= 1.0:
        return x
    n = y.size
    return project_box_hyperplane(y, np.zeros(n), np.full(n, np.inf), np.ones(n), 1.0)


def projected_gradient(grad, project, x0, lipschitz, max_iters=1_000_000, tol=1e-14):
    """Accelerated projected gradient; stops at a numerical fixed point."""
    x = project(x0)
    z = x.copy()
    t = 1.0
    step = 1.0 / lipschitz
    for _ in range(max_iters):
        x_new = project(z - step * grad(z))
        if np.max(np.abs(x_new - x)) <= tol:
            return x_new
        t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        z = x_new + (t - 1.0) / t_new * (x_new - x)
        x, t = x_new, t_new
    return x


def grid_min_simplex(f, step=1e-3):
    """Brute-force minimum of ``f`` over ``{x >= 0, x1 + x2 <= 1}``."""
    k = int(round(1.0 / step))
    best, arg = np.inf, None
    for i, j in itertools.product(range(k + 1), repeat=2):
        if i + j > k:
            continue
        x = np.array([i * step, j * step])
        v = f(x)
        if v < best:
            best, arg = v, x
    return best, arg


def finite_difference(f, x, h=1e-6) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    g = np.zeros_like(x)
    for idx in np.ndindex(x.shape):
        e = np.zeros_like(x)
        e[idx] = h
        g[idx] = (f(x + e) - f(x - e)) / (2 * h)
    return g


def random_substochastic(n, rng) -> np.ndarray:
    A = rng.random((n, n))
    return A / A.sum(axis=1, keepdims=True) * rng.uniform(0.05, 1.0, size=(n, 1))


def random_data(n, rng):
    """Valid (lam, beta) drawn independently of the package's generator."""
    from sstiep.subproblems import ProblemData

    while True:
        lam = np.sort(rng.uniform(-0.9, 0.9, n))[::-1]
        if lam[0] > np.max(np.abs(lam[1:])) + 1e-3 and np.min(-np.diff(lam)) > 1e-2:
            break
    while True:
        beta = rng.uniform(-1, 1, n)
        beta = beta / beta.sum()
        beta[-1] = 1.0 - beta[:-1].sum()
        if np.min(np.abs(beta)) > 1e-2 and np.max(np.abs(beta)) < 20:
            break
    return ProblemData(lam, beta)
