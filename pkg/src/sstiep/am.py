"""Alternating minimization over the two convex subproblems.

Each outer iteration ``k`` solves the P-subproblem at ``A_k`` giving ``P_k``,
then the A-subproblem at ``P_k`` giving ``A_{k+1}``.  The loop stops once
``|L(A_{k+1}, P_k) - L(A_k, P_k)| <= tol`` and, unless ``kkt_tol`` is None,
the pair ``(A_{k+1}, P_k)`` also passes the first-order check at ``kkt_tol``.
The second condition matters when the objective decays slowly: a change of
``1e-6`` per step can still leave stationarity residuals near ``1e-3``.
"""

from __future__ import annotations

import enum
import logging
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import InfeasiblePoint, NonnegativityViolated, UnsupportedDimension
from .kkt import KKT_TOL, kkt_report
from .linalg import as_square, inverse, norm_maxabs
from .qp import QpOptions, qp_solve
from .subproblems import (
    MatrixPair,
    ProblemData,
    build_op_a,
    build_op_p,
    objective_direct,
    unpack_a,
    unpack_p,
)

logger = logging.getLogger(__name__)

ZERO_THRESHOLD = 1e-4
# Subproblem accuracy used by the outer loop.  Interior-point iterates stop
# about sqrt(tol) short of active bounds; 1e-11 keeps them well inside the
# 1e-7 activity tolerance of the first-order check.
AM_QP_OPTIONS = QpOptions(tol=1e-11)
INIT_KINDS = ("diag", "zero", "tilde", "bar", "hat", "random", "explicit")


@dataclass(frozen=True)
class InitStrategy:
    """How to pick ``A_0``.

    ``kind`` is one of ``diag`` (``diag(lam)``, negatives clamped to 0),
    ``zero``, ``tilde``, ``bar``, ``hat`` (the three n=3 recipes), ``random``
    (seeded substochastic matrix) or ``explicit`` (``matrix`` given).
    """

    kind: str = "diag"
    epsilon: float = 1e-3
    seed: int | None = None
    matrix: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in INIT_KINDS:
            raise ValueError(f"unknown init strategy {self.kind!r}; expected one of {INIT_KINDS}")
        if self.kind == "explicit" and self.matrix is None:
            raise ValueError("explicit strategy needs a matrix")

    @classmethod
    def parse(cls, name: str, **kw) -> "InitStrategy":
        aliases = {"diaglambda": "diag", "diag_lambda": "diag", "0": "zero"}
        key = name.strip().lower()
        return cls(aliases.get(key, key), **kw)


TILDE = np.array([[1 / 3, 1 / 3, 1 / 3], [1 / 3, 1 / 3, 1 / 3], [1 / 6, 1 / 6, 1 / 6]])
BAR = np.array([[1 / 9, 1 / 9, 1 / 9], [1 / 9, 1 / 9, 1 / 9], [0.0, 1.0, 0.0]])


def hat_basis(lam: np.ndarray, epsilon: float = 1e-3) -> np.ndarray:
    """Similarity basis ``Q`` giving ``Q diag(lam) Q^-1`` with unit row sums factor."""
    l1, l2, l3 = lam
    if l1 > l2 > l3 >= 0:
        return np.array([[1.0, 1.0, 1.0], [1.0, 1.0, -1.0], [1.0, -1.0, 0.0]])
    if l1 > l2 >= 0 > l3:
        e = epsilon
        return np.array([[1.0, 1.0, 0.0], [1.0, -e, 1.0 - e], [1.0, -e, -(1.0 - e)]])
    if l1 > 0 > l2 > l3:
        c = l2 / (l2 + l3)
        return np.array([[1.0, 1.0, 0.0], [1.0, -c, 1.0 - c], [1.0, -c, -1.0 + c]])
    raise NonnegativityViolated(f"no hat construction for spectrum {tuple(lam)}")


def diag_needs_clamp(data: ProblemData) -> bool:
    return bool(np.any(data.lam < 0))


def random_substochastic(n: int, rng: np.random.Generator) -> np.ndarray:
    A = rng.random((n, n))
    return A / A.sum(axis=1, keepdims=True) * rng.uniform(0.0, 1.0, size=(n, 1))


def make_initial(data: ProblemData, strategy: InitStrategy) -> np.ndarray:
    n = data.n
    kind = strategy.kind
    if kind in ("tilde", "bar", "hat") and n != 3:
        raise UnsupportedDimension(f"{kind} initialization is defined for n = 3 only")
    if kind == "diag":
        if diag_needs_clamp(data):
            logger.warning("diag initialization: negative eigenvalues clamped to 0")
        A0 = np.diag(np.clip(data.lam, 0.0, None))
    elif kind == "zero":
        A0 = np.zeros((n, n))
    elif kind == "tilde":
        A0 = TILDE.copy()
    elif kind == "bar":
        A0 = BAR.copy()
    elif kind == "hat":
        Q = hat_basis(data.lam, strategy.epsilon)
        A0 = Q @ np.diag(data.lam) @ inverse(Q)
        if np.min(A0) < -1e-12:
            raise NonnegativityViolated(
                f"hat construction gives a negative entry {np.min(A0):.3e}"
            )
        A0 = np.clip(A0, 0.0, None)
    elif kind == "random":
        A0 = random_substochastic(n, np.random.default_rng(strategy.seed))
    else:
        A0 = as_square(strategy.matrix, "initial A").copy()
        if A0.shape != (n, n):
            raise UnsupportedDimension(f"initial A must be {n}x{n}")
    if np.min(A0) < 0 or np.max(A0.sum(axis=1)) > 1.0 + 1e-12:
        raise NonnegativityViolated("initial A must be nonnegative with row sums at most 1")
    return A0


class TraceStatus(enum.Enum):
    CONVERGED = "converged"
    MAX_ITERS = "max_iters"
    TIME_BUDGET = "time_budget"


class Outcome(enum.Enum):
    SOLUTION_FOUND = "solution_found"
    NO_ZERO_VALUE_FOUND = "no_zero_value_found"


@dataclass
class IterationRecord:
    index: int
    objective_after_P_step: float  # L(A_k, P_k)
    objective_after_A_step: float  # L(A_{k+1}, P_k)
    P_maxabs_norm: float
    wall_time: float


@dataclass
class SolveTrace:
    iterations: list[IterationRecord]
    status: TraceStatus
    final: MatrixPair
    initial_A: np.ndarray
    init_clamped: bool = False
    qp_failures: int = 0
    wall_time: float = 0.0
    history: list[tuple[np.ndarray, np.ndarray]] | None = field(default=None, repr=False)

    @property
    def objective(self) -> float:
        return self.final.objective

    @property
    def n_iterations(self) -> int:
        return len(self.iterations)

    def monotone(self, slack: float = 1e-8) -> bool:
        prev = None
        for rec in self.iterations:
            if rec.objective_after_P_step < rec.objective_after_A_step - slack:
                return False
            if prev is not None and prev.objective_after_A_step < rec.objective_after_P_step - slack:
                return False
            prev = rec
        return True


def _clean_a(A: np.ndarray) -> np.ndarray:
    """Clip solver round-off so that A is exactly feasible."""
    A = np.clip(A, 0.0, None)
    sums = A.sum(axis=1)
    over = sums > 1.0
    if np.any(over):
        A[over] /= sums[over, None]
    return A


def p_step(data: ProblemData, A: np.ndarray, qp_opts: QpOptions | None = None):
    sol = qp_solve(build_op_a(data, A), qp_opts or AM_QP_OPTIONS)
    return unpack_p(sol.x, data.n), sol


def a_step(data: ProblemData, P: np.ndarray, qp_opts: QpOptions | None = None):
    sol = qp_solve(build_op_p(data, P), qp_opts or AM_QP_OPTIONS)
    return _clean_a(unpack_a(sol.x, data.n)), sol


def _stationary(data: ProblemData, A, P, kkt_tol: float | None) -> bool:
    if kkt_tol is None:
        return True
    try:
        return kkt_report(data, A, P).passes(kkt_tol)
    except InfeasiblePoint:
        return False


def am_solve(
    data: ProblemData,
    strategy: InitStrategy | None = None,
    tol: float = 1e-6,
    max_iters: int = 50000,
    *,
    qp_opts: QpOptions | None = None,
    time_budget: float | None = None,
    keep_history: bool = False,
    kkt_tol: float | None = KKT_TOL,
) -> SolveTrace:
    """Run the alternating iterations from the initial matrix of ``strategy``.

    A subproblem step that fails to improve on the current iterate (solver
    round-off, or a QP that hit its iteration cap) keeps the current iterate,
    so the recorded objective sequence is monotone by construction.
    """
    strategy = strategy or InitStrategy()
    qp_opts = qp_opts or AM_QP_OPTIONS
    A = make_initial(data, strategy)
    A0 = A.copy()
    start = time.perf_counter()
    records: list[IterationRecord] = []
    history = [] if keep_history else None
    failures = 0
    status = TraceStatus.MAX_ITERS
    P = None
    obj_a = None
    for k in range(max_iters):
        P_new, sol = p_step(data, A, qp_opts)
        failures += not sol.optimal
        obj_p = objective_direct(data, A, P_new)
        if P is not None:
            obj_keep = objective_direct(data, A, P)
            if obj_keep <= obj_p:
                P_new, obj_p = P, obj_keep
        P = P_new

        A_new, sol = a_step(data, P, qp_opts)
        failures += not sol.optimal
        obj_a = objective_direct(data, A_new, P)
        if obj_a > obj_p:
            A_new, obj_a = A, obj_p

        records.append(
            IterationRecord(k, obj_p, obj_a, norm_maxabs(P), time.perf_counter() - start)
        )
        if history is not None:
            history.append((A.copy(), P.copy()))
        A = A_new
        if abs(obj_a - obj_p) <= tol and _stationary(data, A, P, kkt_tol):
            status = TraceStatus.CONVERGED
            break
        if time_budget is not None and time.perf_counter() - start > time_budget:
            status = TraceStatus.TIME_BUDGET
            break
    if P is None:
        raise ValueError("max_iters must be at least 1")
    return SolveTrace(
        iterations=records,
        status=status,
        final=MatrixPair(A.copy(), P.copy(), objective_direct(data, A, P)),
        initial_A=A0,
        init_clamped=strategy.kind == "diag" and diag_needs_clamp(data),
        qp_failures=failures,
        wall_time=time.perf_counter() - start,
        history=history,
    )


def classify_outcome(trace_or_objective, zero_threshold: float = ZERO_THRESHOLD) -> Outcome:
    """``SOLUTION_FOUND`` iff the final objective is at most ``zero_threshold``."""
    obj = trace_or_objective.objective if hasattr(trace_or_objective, "objective") else float(trace_or_objective)
    return Outcome.SOLUTION_FOUND if obj <= zero_threshold else Outcome.NO_ZERO_VALUE_FOUND
