"""Minimal phase-type representations from a partial-fraction mgf.

Given ``f(z) = z * sum_l r_l / (1 - lam_l z)`` with distinct poles, a
representation ``(alpha, A)`` with ``n`` transient states satisfies
``f(z) = z alpha (I - zA)^-1 (I - A) 1'``.  Setting ``beta_l = r_l / (1 - lam_l)``
turns the search into the constrained eigenproblem solved by ``am``; the
initial distribution is then ``alpha = beta P``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .am import ZERO_THRESHOLD, InitStrategy, Outcome, SolveTrace, am_solve, classify_outcome
from .errors import InvalidData, NotNormalized, ShapeMismatch, UnsupportedDimension
from .linalg import as_square, as_vector, lu_solve
from .subproblems import ProblemData

NORMALIZATION_TOL = 1e-6
SCREEN_TOL = 1e-12


@dataclass(frozen=True)
class PhaseTypeSpec:
    """Poles ``lam`` and nonzero residues ``r`` of the mgf, stored with the
    poles in decreasing order."""

    lam: np.ndarray
    residues: np.ndarray

    def __post_init__(self):
        lam = as_vector(self.lam, "lambda").copy()
        r = as_vector(self.residues, "residues").copy()
        if lam.size != r.size:
            raise ShapeMismatch(f"lambda has {lam.size} entries, residues has {r.size}")
        if np.any(r == 0):
            raise InvalidData("every residue must be nonzero")
        if np.any(lam >= 1.0):
            raise InvalidData("poles must satisfy lam < 1")
        if np.unique(lam).size != lam.size:
            raise InvalidData("poles must be distinct")
        # partial fractions are order-free; keep poles in decreasing order
        order = np.argsort(-lam, kind="stable")
        object.__setattr__(self, "lam", lam[order])
        object.__setattr__(self, "residues", r[order])

    @property
    def n(self) -> int:
        return self.lam.size

    def f(self, z: float) -> float:
        """Partial-fraction value ``z sum r_l / (1 - lam_l z)``."""
        return float(z * np.sum(self.residues / (1.0 - self.lam * z)))

    @classmethod
    def from_beta(cls, lam, beta) -> "PhaseTypeSpec":
        lam = as_vector(lam, "lambda")
        return cls(lam, (1.0 - lam) * as_vector(beta, "beta"))


def beta_from_residues(spec: PhaseTypeSpec, renormalize: bool = False) -> np.ndarray:
    """``beta_l = r_l / (1 - lam_l)``.

    ``f(1) = sum(beta)`` must equal 1 within ``1e-6``.  With ``renormalize``
    any deviation is divided out instead, which is how rounded published
    residues are brought back to a proper distribution.
    """
    beta = spec.residues / (1.0 - spec.lam)
    total = float(np.sum(beta))
    if renormalize:
        return beta / total
    if abs(total - 1.0) > NORMALIZATION_TOL:
        raise NotNormalized(f"f(1) = {total!r}, expected 1")
    return beta


@dataclass
class Representation:
    alpha: np.ndarray
    A: np.ndarray

    def violations(self) -> dict[str, float]:
        A = self.A
        return {
            "alpha_nonnegative": float(max(0.0, -np.min(self.alpha))),
            "alpha_sum": abs(float(np.sum(self.alpha)) - 1.0),
            "A_nonnegative": float(max(0.0, -np.min(A))),
            "A_row_sums": float(max(0.0, np.max(A.sum(axis=1)) - 1.0)),
        }

    def is_valid(self) -> bool:
        v = self.violations()
        return (
            v["alpha_nonnegative"] <= 1e-8
            and v["alpha_sum"] <= 1e-6
            and v["A_nonnegative"] <= 1e-10
            and v["A_row_sums"] <= 1e-10
        )


def mgf_eval(rep: Representation, z: float) -> float:
    """``z alpha (I - zA)^-1 (I - A) 1'`` by a linear solve."""
    A = as_square(rep.A, "A")
    n = A.shape[0]
    exit_rates = (np.eye(n) - A) @ np.ones(n)
    x = lu_solve(np.eye(n) - z * A, exit_rates)
    return float(z * (as_vector(rep.alpha, "alpha") @ x))


@dataclass
class PhaseTypeResult:
    outcome: Outcome
    beta: np.ndarray
    trace: SolveTrace
    representation: Representation | None

    @property
    def found(self) -> bool:
        return self.outcome is Outcome.SOLUTION_FOUND


def solve_phasetype(
    spec: PhaseTypeSpec,
    strategy: InitStrategy | None = None,
    *,
    renormalize: bool = False,
    zero_threshold: float = ZERO_THRESHOLD,
    **am_kwargs,
) -> PhaseTypeResult:
    beta = beta_from_residues(spec, renormalize=renormalize)
    beta = beta / np.sum(beta)  # absorb the admissible 1e-6 slack exactly
    data = ProblemData(spec.lam, beta)
    trace = am_solve(data, strategy or InitStrategy("diag"), **am_kwargs)
    outcome = classify_outcome(trace, zero_threshold)
    rep = None
    if outcome is Outcome.SOLUTION_FOUND:
        rep = Representation(alpha=beta @ trace.final.P, A=trace.final.A.copy())
    return PhaseTypeResult(outcome, beta, trace, rep)


class ScreenVerdict(enum.Enum):
    POSSIBLY_REALIZABLE = "possibly_realizable"
    PROVABLY_UNREALIZABLE = "provably_unrealizable"


@dataclass(frozen=True)
class ScreenResult:
    verdict: ScreenVerdict
    weighted_sum: float  # sum (1 - lam_i) beta_i
    weighted_moment: float  # sum (1 - lam_i) beta_i lam_i
    reason: str = ""

    @property
    def unrealizable(self) -> bool:
        return self.verdict is ScreenVerdict.PROVABLY_UNREALIZABLE


def nonexistence_screen_n3(data: ProblemData) -> ScreenResult:
    """Two necessary sign conditions for a three-state realization."""
    if data.n != 3:
        raise UnsupportedDimension("the screen is defined for n = 3 only")
    w = (1.0 - data.lam) * data.beta
    s1 = float(np.sum(w))
    s2 = float(np.sum(w * data.lam))
    reasons = []
    if s1 < -SCREEN_TOL:
        reasons.append(f"(1-lambda)*beta sum = {s1:.4f} < 0")
    if s2 < -SCREEN_TOL:
        reasons.append(f"(1-lambda)*beta*lambda sum = {s2:.4f} < 0")
    verdict = ScreenVerdict.PROVABLY_UNREALIZABLE if reasons else ScreenVerdict.POSSIBLY_REALIZABLE
    return ScreenResult(verdict, s1, s2, "; ".join(reasons))
