"""First-order optimality checks for the joint (nonconvex) problem.

For a candidate ``(A, P)`` the multipliers of both constraint blocks are
recovered by bounded least squares on the stationarity equations::

    grad_P[i, j] + alpha_i - alpha_tilde_j * beta_i = 0,   alpha_tilde >= 0
    grad_A[i, j] + pi_i    - pi_tilde[i, j]        = 0,   pi, pi_tilde >= 0

Complementarity is imposed structurally: the multiplier of a constraint
that is inactive by more than ``tol_active`` is pinned to zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import lsq_linear

from .errors import InfeasiblePoint, ShapeMismatch
from .linalg import as_square
from .subproblems import MatrixPair, ProblemData, objective_direct, residual_matrix

KKT_TOL = 1e-4
FEASIBILITY_TOL = 1e-6


def gradients(data: ProblemData, A, P) -> tuple[np.ndarray, np.ndarray]:
    """Analytic ``(dL/dP, dL/dA)``."""
    A = as_square(A, "A")
    P = as_square(P, "P")
    if A.shape != (data.n, data.n) or P.shape != (data.n, data.n):
        raise ShapeMismatch(f"A and P must be {data.n}x{data.n}")
    R = residual_matrix(data, A, P)
    grad_P = 2.0 * R @ A.T - 2.0 * data.lam[:, None] * R
    grad_A = 2.0 * P.T @ R
    return grad_P, grad_A


@dataclass
class KktReport:
    grad_P: np.ndarray
    grad_A: np.ndarray
    alpha: np.ndarray
    alpha_tilde: np.ndarray
    pi: np.ndarray
    pi_tilde: np.ndarray
    stationarity_P: float
    stationarity_A: float
    complementarity: float
    feasibility: float

    @property
    def max_residual(self) -> float:
        return max(self.stationarity_P, self.stationarity_A, self.complementarity, self.feasibility)

    def passes(self, tol: float = KKT_TOL) -> bool:
        return self.max_residual <= tol


def _bounded_lstsq(M: np.ndarray, rhs: np.ndarray, lower: np.ndarray, upper: np.ndarray) -> np.ndarray:
    if M.shape[1] == 0:
        return np.zeros(0)
    free = upper > lower
    x = np.zeros(M.shape[1])
    if np.any(free):
        Mf = M[:, free]
        if np.all(np.isinf(lower[free])):
            x[free] = np.linalg.lstsq(Mf, rhs, rcond=None)[0]
        else:
            res = lsq_linear(Mf, rhs, bounds=(lower[free], upper[free]), method="bvls", tol=1e-14)
            x[free] = res.x
    return x


def kkt_report(data: ProblemData, A, P, tol_active: float = 1e-7) -> KktReport:
    A = as_square(A, "A")
    P = as_square(P, "P")
    n = data.n
    viol = MatrixPair(A, P, objective_direct(data, A, P)).violations(data)
    feasibility = max(viol.values())
    if feasibility > FEASIBILITY_TOL:
        worst = max(viol, key=viol.get)
        raise InfeasiblePoint(f"candidate violates {worst} by {viol[worst]:.3e}")
    grad_P, grad_A = gradients(data, A, P)
    beta = data.beta

    # P block: unknowns (alpha, alpha_tilde); equation (i, j) row-major.
    bp = beta @ P
    M = np.zeros((n * n, 2 * n))
    for i in range(n):
        for j in range(n):
            M[i * n + j, i] = 1.0
            M[i * n + j, n + j] = -beta[i]
    lower = np.concatenate([np.full(n, -np.inf), np.zeros(n)])
    upper = np.full(2 * n, np.inf)
    upper[n:][bp > tol_active] = 0.0
    sol = _bounded_lstsq(M, -grad_P.reshape(-1), lower, upper)
    alpha, alpha_tilde = sol[:n], sol[n:]
    stat_P = grad_P + alpha[:, None] - beta[:, None] * alpha_tilde[None, :]

    # A block decouples by row i: unknowns (pi_i, pi_tilde[i, :]).
    slack = 1.0 - A.sum(axis=1)
    pi = np.zeros(n)
    pi_tilde = np.zeros((n, n))
    Mrow = np.hstack([np.ones((n, 1)), -np.eye(n)])
    for i in range(n):
        up = np.full(n + 1, np.inf)
        if slack[i] > tol_active:
            up[0] = 0.0
        up[1:][A[i] > tol_active] = 0.0
        x = _bounded_lstsq(Mrow, -grad_A[i], np.zeros(n + 1), up)
        pi[i], pi_tilde[i] = x[0], x[1:]
    stat_A = grad_A + pi[:, None] - pi_tilde

    comp = max(
        float(np.max(np.abs(alpha_tilde * bp))),
        float(np.max(np.abs(pi * slack))),
        float(np.max(np.abs(pi_tilde * A))),
    )
    return KktReport(
        grad_P=grad_P,
        grad_A=grad_A,
        alpha=alpha,
        alpha_tilde=alpha_tilde,
        pi=pi,
        pi_tilde=pi_tilde,
        stationarity_P=float(np.max(np.abs(stat_P))),
        stationarity_A=float(np.max(np.abs(stat_A))),
        complementarity=comp,
        feasibility=feasibility,
    )


# --- not-a-local-maximum probe ------------------------------------------------

GLOBAL_MIN = "global-min candidate"
DESCENT = "descent"
FLAT = "flat"
NO_WITNESS = "no witness"


@dataclass
class Witness:
    """Outcome of the probe.

    ``direction`` is a feasible perturbation ``(D_A, D_P)`` of the pair
    (zeros if none was found) and ``change`` is
    ``L(A + step D_A, P + step D_P) - L(A, P)``.  ``ascent`` additionally
    records a direction of strict increase when one exists, which is what
    rules out a local maximum in the strict sense.
    """

    direction: tuple[np.ndarray, np.ndarray]
    change: float
    flag: str
    ascent: tuple[np.ndarray, np.ndarray] | None = None

    @property
    def non_increasing(self) -> bool:
        return self.flag in (DESCENT, FLAT)


def _feasible(data: ProblemData, A: np.ndarray, P: np.ndarray) -> bool:
    return bool(
        np.min(A) >= 0.0
        and np.max(A.sum(axis=1)) <= 1.0
        and np.min(data.beta @ P) >= -1e-12
    )


def _unit(D: np.ndarray) -> np.ndarray:
    m = np.max(np.abs(D))
    return D / m if m > 0 else D


def _probe_directions(n: int, grad_A: np.ndarray, grad_P: np.ndarray):
    zero = np.zeros((n, n))
    # steepest descent in each block; the P block is projected onto
    # zero row sums so that P 1' = 1' is kept
    yield _unit(-grad_A), zero
    yield zero, _unit(-(grad_P - grad_P.mean(axis=1, keepdims=True)))
    for i in range(n):
        for j in range(n):
            for sgn in (1.0, -1.0):
                E = np.zeros((n, n))
                E[i, j] = sgn
                yield E, zero
    for i in range(n):
        for j in range(n):
            for k in range(n):
                if j != k:
                    E = np.zeros((n, n))
                    E[i, j], E[i, k] = 1.0, -1.0
                    yield zero, E


def verify_not_local_max(
    data: ProblemData, A, P, step: float = 1e-4, flat_tol: float = 1e-14
) -> Witness:
    """Probe feasible perturbations of ``(A, P)`` at step ``step``.

    A pair with zero objective is reported as a global-minimum candidate.
    Otherwise the most decreasing probe is returned; ``NO_WITNESS`` means
    every feasible probe increased the objective.
    """
    A = as_square(A, "A")
    P = as_square(P, "P")
    if np.max(np.abs(P.sum(axis=1) - 1.0)) > 1e-8:
        raise InfeasiblePoint("P rows must sum to 1")
    n = data.n
    base = objective_direct(data, A, P)
    grad_P, grad_A = gradients(data, A, P)
    best, best_change = None, np.inf
    ascent = None
    for DA, DP in _probe_directions(n, grad_A, grad_P):
        A_t, P_t = A + step * DA, P + step * DP
        if not _feasible(data, A_t, P_t):
            continue
        change = objective_direct(data, A_t, P_t) - base
        if change > flat_tol and ascent is None:
            ascent = (DA, DP)
        if change < best_change:
            best, best_change = (DA, DP), change
    zeros = (np.zeros((n, n)), np.zeros((n, n)))
    if base <= flat_tol and (best is None or best_change >= -flat_tol):
        return Witness(zeros, 0.0, GLOBAL_MIN, ascent)
    if best is None or best_change > flat_tol:
        return Witness(zeros, 0.0, NO_WITNESS, ascent)
    flag = DESCENT if best_change < -flat_tol else FLAT
    return Witness(best, float(best_change), flag, ascent)
