"""Substochastic matrices with a prescribed real spectrum and eigenvector
sign conditions, computed by alternating minimization over two convex QPs."""

from __future__ import annotations

from .am import InitStrategy, Outcome, SolveTrace, am_solve, classify_outcome
from .errors import SstiepError
from .phasetype import PhaseTypeSpec, Representation, mgf_eval, nonexistence_screen_n3, solve_phasetype
from .qp import QpProblem, QpSolution, QpStatus, qp_solve
from .subproblems import MatrixPair, ProblemData

__version__ = "0.1.0"

__all__ = [
    "InitStrategy",
    "MatrixPair",
    "Outcome",
    "PhaseTypeSpec",
    "ProblemData",
    "QpProblem",
    "QpSolution",
    "QpStatus",
    "Representation",
    "SolveTrace",
    "SstiepError",
    "am_solve",
    "classify_outcome",
    "mgf_eval",
    "nonexistence_screen_n3",
    "qp_solve",
    "solve_phasetype",
]
