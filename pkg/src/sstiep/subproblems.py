"""Problem data, the objective and the two convex subproblems.

The objective of the joint problem is ``L(A, P) = ||P A - diag(lam) P||_F^2``
over ``P 1' = 1'``, ``beta P >= 0``, ``A >= 0``, ``A 1' <= 1'``.  For fixed
``A`` it is a convex quadratic in the rows of ``P``; for fixed ``P`` a convex
quadratic in the columns of ``A``.  Both are assembled as dense QPs here.

Variable layouts:

* P-subproblem (A fixed): ``x[i*n + j] = p_ij``  (row blocks ``P_(i)``).
* A-subproblem (P fixed): ``x[j*n + i] = a_ij``  (column blocks ``A^(j)``).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InfeasibleInput, InvalidBeta, InvalidData, ShapeMismatch
from .linalg import as_square, as_vector
from .qp import QpProblem

BETA_SUM_TOL = 1e-12
BETA_MIN_ABS = 1e-12


@dataclass(frozen=True)
class ProblemData:
    """Spectrum ``lam`` and weight vector ``beta``.

    Validation enforces ``1 > lam_1 > lam_2 > ... > lam_n``,
    ``lam_1 > max_{l>=2} |lam_l|``, ``sum(beta) = 1`` and no zero weight.
    ``check=False`` skips the spectrum ordering conditions only (some worked
    examples use an unordered spectrum); the weight conditions always hold.
    """

    lam: np.ndarray
    beta: np.ndarray
    check: bool = True

    def __post_init__(self):
        lam = as_vector(self.lam, "lambda").copy()
        beta = as_vector(self.beta, "beta").copy()
        lam.flags.writeable = False
        beta.flags.writeable = False
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "beta", beta)
        if lam.size != beta.size:
            raise ShapeMismatch(f"lambda has {lam.size} entries, beta has {beta.size}")
        if lam.size < 2:
            raise InvalidData("dimension must be at least 2")
        check_beta(beta)
        if self.check:
            check_spectrum(lam)

    @property
    def n(self) -> int:
        return self.lam.size


def check_spectrum(lam: np.ndarray) -> None:
    if not lam[0] < 1.0:
        raise InvalidData(f"lambda_1 = {lam[0]!r} must be < 1")
    if np.any(np.diff(lam) >= 0):
        raise InvalidData("lambda must be strictly decreasing")
    if not lam[0] > np.max(np.abs(lam[1:])):
        raise InvalidData("lambda_1 must exceed |lambda_l| for every l >= 2")


def check_beta(beta: np.ndarray) -> None:
    if abs(float(np.sum(beta)) - 1.0) > BETA_SUM_TOL:
        raise InvalidBeta(f"beta sums to {float(np.sum(beta))!r}, not 1")
    if np.any(np.abs(beta) <= BETA_MIN_ABS):
        raise InvalidBeta("every beta component must be nonzero")


def _pair(data: ProblemData, A, P) -> tuple[np.ndarray, np.ndarray]:
    A = as_square(A, "A")
    P = as_square(P, "P")
    if A.shape != (data.n, data.n) or P.shape != (data.n, data.n):
        raise ShapeMismatch(f"A and P must be {data.n}x{data.n}")
    return A, P


def residual_matrix(data: ProblemData, A, P) -> np.ndarray:
    """``P A - diag(lam) P``; row i is ``P_(i) (A - lam_i I)``."""
    A, P = _pair(data, A, P)
    return P @ A - data.lam[:, None] * P


def objective_direct(data: ProblemData, A, P) -> float:
    R = residual_matrix(data, A, P)
    return float(np.sum(R * R))


def shifted_gram(A: np.ndarray, x: float) -> np.ndarray:
    """``(A - xI)(A - xI)'``, positive semidefinite for every real x."""
    S = A - x * np.eye(A.shape[0])
    return S @ S.T


def objective_quadform_P(data: ProblemData, A, P) -> float:
    A, P = _pair(data, A, P)
    return float(sum(P[i] @ shifted_gram(A, lam) @ P[i] for i, lam in enumerate(data.lam)))


def objective_quadform_A(data: ProblemData, A, P) -> float:
    A, P = _pair(data, A, P)
    total = 0.0
    for i, lam in enumerate(data.lam):
        outer = np.outer(P[i], P[i])
        for j in range(data.n):
            col = A[:, j]
            total += col @ outer @ col - 2.0 * lam * P[i, j] * (P[i] @ col) + lam**2 * P[i, j] ** 2
    return float(total)


def dropped_constant(data: ProblemData, P) -> float:
    """Constant term ``sum_ij lam_i^2 p_ij^2`` left out of the A-subproblem QP."""
    P = np.asarray(P, dtype=float)
    return float(np.sum((data.lam[:, None] * P) ** 2))


# --- P-subproblem -----------------------------------------------------------


def build_op_a(data: ProblemData, A, tol: float = 1e-8) -> QpProblem:
    """QP in the entries of ``P`` for fixed substochastic ``A``."""
    A = as_square(A, "A")
    n = data.n
    if A.shape != (n, n):
        raise ShapeMismatch(f"A must be {n}x{n}")
    if np.min(A) < -tol or np.max(A.sum(axis=1)) > 1.0 + tol:
        raise InfeasibleInput("A must be nonnegative with row sums at most 1")
    Q = np.zeros((n * n, n * n))
    for i, lam in enumerate(data.lam):
        Q[i * n : (i + 1) * n, i * n : (i + 1) * n] = 2.0 * shifted_gram(A, lam)
    E = np.kron(np.eye(n), np.ones((1, n)))
    d = np.ones(n)
    # -(beta P)_j <= 0: column j of P weighted by beta
    G = -np.kron(data.beta[None, :], np.eye(n))
    h = np.zeros(n)
    return QpProblem(Q, np.zeros(n * n), E, d, G, h)


def unpack_p(x: np.ndarray, n: int) -> np.ndarray:
    return np.asarray(x, dtype=float).reshape(n, n)


def pack_p(P: np.ndarray) -> np.ndarray:
    return np.asarray(P, dtype=float).reshape(-1)


# --- A-subproblem -----------------------------------------------------------


def build_op_p(data: ProblemData, P) -> QpProblem:
    """QP in the entries of ``A`` for fixed ``P``.

    The QP objective equals ``L(A, P) - dropped_constant(data, P)``.
    """
    P = as_square(P, "P")
    n = data.n
    if P.shape != (n, n):
        raise ShapeMismatch(f"P must be {n}x{n}")
    gram = P.T @ P
    Q = np.kron(np.eye(n), 2.0 * gram)
    target = P.T @ (data.lam[:, None] * P)
    c = -2.0 * target.reshape(-1, order="F")
    row_sums = np.kron(np.ones((1, n)), np.eye(n))
    G = np.vstack([-np.eye(n * n), row_sums])
    h = np.concatenate([np.zeros(n * n), np.ones(n)])
    return QpProblem(Q, c, None, None, G, h)


def unpack_a(x: np.ndarray, n: int) -> np.ndarray:
    return np.asarray(x, dtype=float).reshape(n, n, order="F")


def pack_a(A: np.ndarray) -> np.ndarray:
    return np.asarray(A, dtype=float).reshape(-1, order="F")


# --- candidate pairs ----------------------------------------------------------


@dataclass
class MatrixPair:
    A: np.ndarray
    P: np.ndarray
    objective: float

    @classmethod
    def of(cls, data: ProblemData, A, P) -> "MatrixPair":
        A, P = _pair(data, A, P)
        return cls(A.copy(), P.copy(), objective_direct(data, A, P))

    def violations(self, data: ProblemData) -> dict[str, float]:
        """Constraint violations (positive means violated) keyed by check name."""
        A, P = self.A, self.P
        return {
            "A_nonnegative": float(max(0.0, -np.min(A))),
            "A_row_sums": float(max(0.0, np.max(A.sum(axis=1)) - 1.0)),
            "P_row_sums": float(np.max(np.abs(P.sum(axis=1) - 1.0))),
            "betaP_nonnegative": float(max(0.0, -np.min(data.beta @ P))),
        }

    def is_feasible(self, data: ProblemData, tol_a: float = 1e-10, tol_p: float = 1e-8) -> bool:
        v = self.violations(data)
        return (
            v["A_nonnegative"] <= tol_a
            and v["A_row_sums"] <= tol_a
            and v["P_row_sums"] <= tol_p
            and v["betaP_nonnegative"] <= tol_p
        )
