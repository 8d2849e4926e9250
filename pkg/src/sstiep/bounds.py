"""Explicit bounds behind the convergence argument.

* ``build_delta`` -- an always-feasible point of the P-subproblem.
* ``rho_bar`` -- upper bound on the P-subproblem optimum, from ``L(A, Delta)``.
* ``gamma_table`` / ``prop1_lower_bound`` -- lower bound on ``det(B B')`` for
  the stacked constraint matrix ``B'`` (``build_B``).  The weighted spread
  ``sum_i g_i x_i^2 - (sum_i g_i x_i)^2 / sum_i g_i`` that closes the
  argument equals the sum over unordered pairs ``i < j``; summing over
  ordered pairs ``i != j`` counts each pair twice and overstates the bound
  by ``2^n`` (at n = 2, A = 0, beta = (1/2, 1/2), lam = (1/2, -2/5) it would
  give 0.0410 against ``det(B B') = 0.0203``).
* ``rho`` -- resulting bound on ``||P||`` (max-abs norm) for every optimum
  of the P-subproblem.  It is astronomically loose, so it is carried in log
  space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidBeta, ShapeMismatch
from .linalg import as_square, as_vector, determinant, log_abs_determinant
from .subproblems import ProblemData, check_beta

LINEAR_LIMIT = 1e300


def build_delta(beta) -> np.ndarray:
    """Upper-bidiagonal ``Delta`` with ``Delta 1' = 1'`` and ``beta Delta = e_1``."""
    beta = as_vector(beta, "beta")
    check_beta(beta)
    n = beta.size
    tails = np.cumsum(beta[::-1])[::-1]  # tails[i] = sum_{l >= i} beta_l
    D = np.zeros((n, n))
    for i in range(n):
        D[i, i] = tails[i] / beta[i]
        if i + 1 < n:
            D[i, i + 1] = -tails[i + 1] / beta[i]
    D[n - 1, n - 1] = 1.0
    return D


def eta(beta) -> float:
    """``max{|beta_l| / |beta_i| : l >= i}``."""
    b = np.abs(as_vector(beta, "beta"))
    if np.any(b == 0):
        raise InvalidBeta("every beta component must be nonzero")
    return float(max(np.max(b[i:]) / b[i] for i in range(b.size)))


def rho_bar(data: ProblemData) -> float:
    n = data.n
    e = eta(data.beta)
    return float((n + data.lam[0]) ** 2 * ((n - 1) * n * (2 * n - 1) / 3 * e**2 + n * (n - 1) * e + n))


def cyclic_index(l: int, n: int) -> int:
    """``[l]_n``: ``l mod n`` mapped into ``1..n`` (1-based)."""
    r = l % n
    return n if r == 0 else r


@dataclass(frozen=True)
class GammaTable:
    """``values[k-1, i-1] = gamma_i^(k)`` for ``1 <= k <= n-1``."""

    n: int
    values: np.ndarray

    def __call__(self, i: int, k: int) -> float:
        return float(self.values[k - 1, i - 1])

    def last(self) -> np.ndarray:
        return self.values[-1]


def gamma_table(data: ProblemData) -> GammaTable:
    n, lam = data.n, data.lam
    g = np.empty((n - 1, n))
    g[0] = data.beta**2
    for k in range(1, n - 1):
        prev = g[k - 1]
        for i in range(1, n + 1):
            a = prev[i - 1]
            b = prev[cyclic_index(i + 1, n) - 1]
            gap = lam[i - 1] - lam[cyclic_index(i + k, n) - 1]
            g[k, i - 1] = a * b * gap**2 / (a + b)
    return GammaTable(n, g)


def _prop1_ratio(data: ProblemData) -> float:
    """``sum_{i < j} g_i g_j (lam_[n+i-1] - lam_[n+j-1])^2 / sum_i g_i`` with g = gamma^(n-1)."""
    n, lam = data.n, data.lam
    g = gamma_table(data).last()
    shifted = np.array([lam[cyclic_index(n + i - 1, n) - 1] for i in range(1, n + 1)])
    diff = shifted[:, None] - shifted[None, :]
    num = 0.5 * float(np.sum(np.outer(g, g) * diff**2))  # each unordered pair once
    return num / float(np.sum(g))


def log_prop1_lower_bound(data: ProblemData) -> float:
    n = data.n
    return -n * (n - 2) * math.log(2.0) + n * math.log(_prop1_ratio(data))


def prop1_lower_bound(data: ProblemData) -> float:
    """Lower bound on ``det(B B')`` valid for every substochastic ``A``."""
    return math.exp(log_prop1_lower_bound(data))


def build_B(data: ProblemData, A) -> np.ndarray:
    """``B`` of shape ``(n^2, n^2 + n)``; its transpose stacks ``A' - lam_i I``
    block-diagonally over the row ``[beta_1 I, ..., beta_n I]``."""
    A = as_square(A, "A")
    n = data.n
    if A.shape != (n, n):
        raise ShapeMismatch(f"A must be {n}x{n}")
    Bt = np.zeros((n * n + n, n * n))
    eye = np.eye(n)
    for i, lam in enumerate(data.lam):
        Bt[i * n : (i + 1) * n, i * n : (i + 1) * n] = A.T - lam * eye
        Bt[n * n :, i * n : (i + 1) * n] = data.beta[i] * eye
    return Bt.T


def gram_det(data: ProblemData, A) -> float:
    B = build_B(data, A)
    return determinant(B @ B.T)


def log_gram_det(data: ProblemData, A) -> float:
    B = build_B(data, A)
    sign, logdet = log_abs_determinant(B @ B.T)
    return logdet if sign > 0 else -math.inf


@dataclass(frozen=True)
class BoundValue:
    """A positive bound carried as its natural log; ``value`` is None when
    it exceeds ``1e300``."""

    log: float

    @property
    def value(self) -> float | None:
        return math.exp(self.log) if self.log < math.log(LINEAR_LIMIT) else None

    def exceeds(self, x: float) -> bool:
        return x <= 0 or math.log(x) <= self.log


def rho(data: ProblemData) -> BoundValue:
    n = data.n
    bnorm = float(np.max(np.abs(data.beta)))
    log_rho = (
        n * (n - 2) * math.log(2.0)
        - n * math.log(_prop1_ratio(data))
        + (n * n - 1) * math.log(bnorm**2 + 4.0)
        + math.lgamma(n * n)  # log (n^2 - 1)!
        + math.log(n + data.lam[0] + bnorm)
        + math.log(max(math.sqrt(rho_bar(data)), 1.0))
    )
    return BoundValue(log_rho)


@dataclass(frozen=True)
class BoundReport:
    rho_bar: float
    rho: BoundValue
    prop1_lower_bound: float
    log_prop1_lower_bound: float
    det_BBt: float | None = None

    @property
    def prop1_holds(self) -> bool | None:
        if self.det_BBt is None:
            return None
        return self.det_BBt >= self.prop1_lower_bound - 1e-9 * max(1.0, self.det_BBt)


def bound_report(data: ProblemData, A=None) -> BoundReport:
    return BoundReport(
        rho_bar=rho_bar(data),
        rho=rho(data),
        prop1_lower_bound=prop1_lower_bound(data),
        log_prop1_lower_bound=log_prop1_lower_bound(data),
        det_BBt=None if A is None else gram_det(data, A),
    )
