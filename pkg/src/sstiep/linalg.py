"""Dense real matrix kernel.

Matrices and vectors are plain ``numpy`` float64 arrays.  The LU routines
wrap LAPACK's partial-pivoting factorization (``getrf``) and add the pivot
tolerance check used throughout the package.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import ShapeMismatch, SingularMatrix

PIVOT_RTOL = 1e-14


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Return ``a`` as a finite 2-D float array (copy-free when possible)."""
    m = np.asarray(a, dtype=float)
    if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
        raise ShapeMismatch(f"{name} must be a non-empty 2-D array, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} has non-finite entries")
    return m


def as_vector(v, name: str = "vector") -> np.ndarray:
    x = np.asarray(v, dtype=float)
    if x.ndim != 1 or x.size < 1:
        raise ShapeMismatch(f"{name} must be a non-empty 1-D array, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError(f"{name} has non-finite entries")
    return x


def as_square(a, name: str = "matrix") -> np.ndarray:
    m = as_matrix(a, name)
    if m.shape[0] != m.shape[1]:
        raise ShapeMismatch(f"{name} must be square, got shape {m.shape}")
    return m


def matmul(a, b) -> np.ndarray:
    a = as_matrix(a, "left operand")
    b = as_matrix(b, "right operand")
    if a.shape[1] != b.shape[0]:
        raise ShapeMismatch(f"cannot multiply {a.shape} by {b.shape}")
    return a @ b


def norm_maxabs(m) -> float:
    """max_ij |m_ij|; this is the norm written ||.|| everywhere in the package."""
    return float(np.max(np.abs(np.asarray(m, dtype=float))))


def norm_frobenius(m) -> float:
    # fsum over the row-major ravel keeps the result independent of BLAS/threading.
    flat = np.asarray(m, dtype=float).ravel(order="C")
    return math.sqrt(math.fsum((flat * flat).tolist()))


@dataclass(frozen=True)
class LU:
    """Packed partial-pivoting factorization ``M[perm] = L U``."""

    lu: np.ndarray
    piv: np.ndarray

    @property
    def n(self) -> int:
        return self.lu.shape[0]

    def pivots(self) -> np.ndarray:
        return np.diag(self.lu).copy()

    def sign(self) -> float:
        swaps = np.count_nonzero(self.piv != np.arange(self.n))
        return -1.0 if swaps % 2 else 1.0

    def solve(self, rhs, trans: int = 0) -> np.ndarray:
        return sla.lu_solve((self.lu, self.piv), rhs, trans=trans, check_finite=False)


def lu_factor(m, check: bool = True) -> LU:
    """Factor a square matrix.

    With ``check`` the factorization raises :class:`SingularMatrix` when a
    pivot falls below ``1e-14 * ||M||`` (max-abs norm).
    """
    m = as_square(m)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", sla.LinAlgWarning)
        lu, piv = sla.lu_factor(m, check_finite=False)
    fact = LU(lu, piv)
    if check:
        scale = norm_maxabs(m)
        smallest = float(np.min(np.abs(np.diag(lu))))
        if scale == 0.0 or smallest < PIVOT_RTOL * scale:
            raise SingularMatrix(
                f"pivot {smallest:.3e} below tolerance {PIVOT_RTOL * scale:.3e}"
            )
    return fact


def lu_solve(m, rhs) -> np.ndarray:
    """Solve ``M X = rhs``; ``rhs`` may be a vector or a matrix."""
    m = as_square(m)
    b = np.asarray(rhs, dtype=float)
    if b.ndim not in (1, 2) or b.shape[0] != m.shape[0]:
        raise ShapeMismatch(f"rhs with shape {b.shape} does not match {m.shape}")
    return lu_factor(m).solve(b)


def inverse(m) -> np.ndarray:
    m = as_square(m)
    return lu_factor(m).solve(np.eye(m.shape[0]))


def determinant(m) -> float:
    """Signed product of the LU pivots (no singularity check)."""
    fact = lu_factor(m, check=False)
    return fact.sign() * float(np.prod(fact.pivots()))


def log_abs_determinant(m) -> tuple[float, float]:
    """Return ``(sign, log|det M|)``; sign is 0.0 for an exactly zero pivot."""
    fact = lu_factor(m, check=False)
    piv = fact.pivots()
    if np.any(piv == 0.0):
        return 0.0, -math.inf
    sign = fact.sign() * float(np.prod(np.sign(piv)))
    return sign, float(np.sum(np.log(np.abs(piv))))
