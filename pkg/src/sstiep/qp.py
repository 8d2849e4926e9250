"""Dense convex quadratic programming.

Solves::

    minimize    1/2 x'Qx + c'x
    subject to  E x  = d
                G x <= h

with a primal-dual interior-point method (Mehrotra predictor-corrector).
The Newton systems are regularized by ``delta = 1e-9 (1 + ||Q||)`` on the
primal diagonal, which keeps them solvable when ``Q`` is only positive
semidefinite, as happens for the subproblem Hessians ``(A - x I)(A - x I)'``
whenever ``x`` is (close to) an eigenvalue of ``A``.

Inequality rows that are signed unit vectors (simple bounds) are detected at
construction and folded into the diagonal of the reduced system, so bound
heavy problems avoid a dense ``G' W G`` product.
"""

from __future__ import annotations

import enum
import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .errors import ShapeMismatch

logger = logging.getLogger(__name__)

_STEP_FRACTION = 0.995


class QpStatus(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    MAX_ITERS = "max_iters"


@dataclass(frozen=True)
class QpOptions:
    tol: float = 1e-9
    max_iters: int = 200
    regularization: float = 1e-9
    divergence_window: int = 50


def _rows(a, ncols: int, name: str) -> np.ndarray:
    if a is None:
        return np.zeros((0, ncols))
    m = np.asarray(a, dtype=float)
    if m.size == 0:
        return np.zeros((0, ncols))
    if m.ndim != 2 or m.shape[1] != ncols:
        raise ShapeMismatch(f"{name} must have {ncols} columns, got shape {m.shape}")
    return m


def _vec(v, size: int, name: str) -> np.ndarray:
    if v is None:
        v = np.zeros(size)
    x = np.asarray(v, dtype=float).reshape(-1)
    if x.size != size:
        raise ShapeMismatch(f"{name} must have length {size}, got {x.size}")
    return x


@dataclass
class QpProblem:
    """Dense QP data.  ``Q`` is symmetrized on construction."""

    Q: np.ndarray
    c: np.ndarray
    E: np.ndarray | None = None
    d: np.ndarray | None = None
    G: np.ndarray | None = None
    h: np.ndarray | None = None
    _bounds: tuple = field(init=False, repr=False)

    def __post_init__(self):
        Q = np.asarray(self.Q, dtype=float)
        if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
            raise ShapeMismatch(f"Q must be square, got shape {Q.shape}")
        n = Q.shape[0]
        self.Q = 0.5 * (Q + Q.T)
        self.c = _vec(self.c, n, "c")
        self.E = _rows(self.E, n, "E")
        self.d = _vec(self.d, self.E.shape[0], "d")
        self.G = _rows(self.G, n, "G")
        self.h = _vec(self.h, self.G.shape[0], "h")
        for name in ("Q", "c", "E", "d", "G", "h"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise ValueError(f"{name} has non-finite entries")
        self._bounds = _split_bounds(self.G)

    @property
    def n(self) -> int:
        return self.Q.shape[0]

    @property
    def n_eq(self) -> int:
        return self.E.shape[0]

    @property
    def n_ineq(self) -> int:
        return self.G.shape[0]

    def objective(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return float(0.5 * x @ self.Q @ x + self.c @ x)

    def is_psd(self, reg: float = 1e-10) -> bool:
        """Debug check: Cholesky of ``Q + reg (1 + ||Q||) I`` succeeds."""
        scale = 1.0 + float(np.max(np.abs(self.Q), initial=0.0))
        try:
            np.linalg.cholesky(self.Q + reg * scale * np.eye(self.n))
        except np.linalg.LinAlgError:
            return False
        return True


def _split_bounds(G: np.ndarray):
    """Index rows of ``G`` with exactly one nonzero entry."""
    if G.shape[0] == 0:
        return (np.zeros(0, dtype=int), np.zeros(0, dtype=int), np.zeros(0), np.zeros(0, dtype=int))
    nnz = np.count_nonzero(G, axis=1)
    simple = np.flatnonzero(nnz == 1)
    general = np.flatnonzero(nnz != 1)
    cols = np.argmax(G[simple] != 0, axis=1) if simple.size else np.zeros(0, dtype=int)
    coef = G[simple, cols] if simple.size else np.zeros(0)
    return simple, cols, coef, general


@dataclass
class QpSolution:
    x: np.ndarray
    eq_multipliers: np.ndarray
    ineq_multipliers: np.ndarray
    objective: float
    status: QpStatus
    iterations: int = 0

    @property
    def optimal(self) -> bool:
        return self.status is QpStatus.OPTIMAL


def qp_kkt_residual(p: QpProblem, s: QpSolution) -> tuple[float, float, float]:
    """Max-abs (stationarity, primal, complementarity) residuals of ``s``.

    Complementarity also absorbs any negative inequality multiplier.
    """
    x = np.asarray(s.x, dtype=float)
    y = np.asarray(s.eq_multipliers, dtype=float)
    z = np.asarray(s.ineq_multipliers, dtype=float)
    if x.shape != (p.n,) or y.shape != (p.n_eq,) or z.shape != (p.n_ineq,):
        raise ShapeMismatch("solution shapes do not match the problem")
    grad = p.Q @ x + p.c + p.E.T @ y + p.G.T @ z
    stationarity = float(np.max(np.abs(grad), initial=0.0))
    eq = float(np.max(np.abs(p.E @ x - p.d), initial=0.0))
    slack = p.h - p.G @ x
    primal = max(eq, float(np.max(-slack, initial=0.0)))
    comp = max(
        float(np.max(np.abs(z * slack), initial=0.0)),
        float(np.max(-z, initial=0.0)),
    )
    return stationarity, primal, comp


def _max_step(v: np.ndarray, dv: np.ndarray) -> float:
    neg = dv < 0
    if not np.any(neg):
        return 1.0
    return float(min(1.0, np.min(-v[neg] / dv[neg])))


class _Kkt:
    """Factorized regularized reduced Newton matrix for one iteration."""

    def __init__(self, p: QpProblem, w: np.ndarray, delta: float):
        simple, cols, coef, general = p._bounds
        n, me = p.n, p.n_eq
        H = p.Q.copy()
        H[np.diag_indices(n)] += delta
        if simple.size:
            np.add.at(H, (cols, cols), w[simple] * coef * coef)
        if general.size:
            Gg = p.G[general]
            H += Gg.T @ (w[general, None] * Gg)
        self.n = n
        if me:
            K = np.empty((n + me, n + me))
            K[:n, :n] = H
            K[:n, n:] = p.E.T
            K[n:, :n] = p.E
            K[n:, n:] = -delta * np.eye(me)
        else:
            K = H
        with warnings.catch_warnings():
            # an exactly singular pivot surfaces as a non-finite direction,
            # which the main loop handles
            warnings.simplefilter("ignore", sla.LinAlgWarning)
            self.lu = sla.lu_factor(K, check_finite=False)

    def solve(self, rx: np.ndarray, ry: np.ndarray):
        sol = sla.lu_solve(self.lu, np.concatenate([rx, ry]), check_finite=False)
        return sol[: self.n], sol[self.n :]


def _farkas_certificate(p: QpProblem, y: np.ndarray, z: np.ndarray) -> bool:
    """Large multipliers that nearly satisfy E'y + G'z = 0, d'y + h'z < 0."""
    scale = max(float(np.max(np.abs(y), initial=0.0)), float(np.max(z, initial=0.0)))
    if scale < 1e6:
        return False
    yh, zh = y / scale, z / scale
    ray = float(np.max(np.abs(p.E.T @ yh + p.G.T @ zh), initial=0.0))
    return ray <= 1e-6 and float(p.d @ yh + p.h @ zh) < -1e-6


def _starting_point(p: QpProblem):
    if p.n_eq:
        x = np.linalg.lstsq(p.E, p.d, rcond=None)[0]
    else:
        x = np.zeros(p.n)
    y = np.zeros(p.n_eq)
    s = p.h - p.G @ x
    if s.size:
        s = s + max(0.0, 1.0 - float(np.min(s)))
    z = np.ones(p.n_ineq)
    return x, y, s, z


def qp_solve(p: QpProblem, opts: QpOptions | None = None) -> QpSolution:
    """Solve ``p``; deterministic for fixed input."""
    opts = opts or QpOptions()
    delta = opts.regularization * (1.0 + float(np.max(np.abs(p.Q), initial=0.0)))
    x, y, s, z = _starting_point(p)
    m = p.n_ineq
    G, E = p.G, p.E

    best = None
    best_merit = np.inf
    first_primal = None
    status = QpStatus.MAX_ITERS
    it = 0
    for it in range(opts.max_iters + 1):
        Gx = G @ x
        r_d = p.Q @ x + p.c + E.T @ y + G.T @ z
        r_e = E @ x - p.d
        r_i = Gx + s - p.h
        mu = float(s @ z) / m if m else 0.0
        res_d = float(np.max(np.abs(r_d), initial=0.0))
        res_p = max(float(np.max(np.abs(r_e), initial=0.0)), float(np.max(np.abs(r_i), initial=0.0)))
        gap = float(np.max(s * z, initial=0.0))
        merit = max(res_d, res_p, gap)
        if merit < best_merit:
            best_merit = merit
            best = (x.copy(), y.copy(), z.copy())
        if first_primal is None:
            first_primal = res_p
        if res_d <= opts.tol and res_p <= opts.tol and gap <= opts.tol:
            status = QpStatus.OPTIMAL
            best = (x, y, z)
            break
        if it == opts.max_iters:
            break
        if _farkas_certificate(p, y, z) or (
            it >= opts.divergence_window
            and res_p > 1e-6 * (1.0 + first_primal)
            and float(np.max(z, initial=0.0)) > 1e10
        ):
            status = QpStatus.INFEASIBLE
            break

        w = z / s if m else z
        try:
            kkt = _Kkt(p, w, delta)
        except (np.linalg.LinAlgError, ValueError):
            logger.debug("KKT factorization failed at iteration %d", it)
            break

        def direction(r_sz):
            tmp = (z * r_i - r_sz) / s if m else np.zeros(0)
            dx, dy = kkt.solve(-r_d - G.T @ tmp, -r_e)
            Gdx = G @ dx
            dz = w * Gdx + tmp
            ds = -r_i - Gdx
            return dx, dy, ds, dz

        if m:
            dx, dy, ds, dz = direction(s * z)
            alpha_aff = min(_max_step(s, ds), _max_step(z, dz))
            mu_aff = float((s + alpha_aff * ds) @ (z + alpha_aff * dz)) / m
            sigma = (mu_aff / mu) ** 3 if mu > 0 else 0.0
            dx, dy, ds, dz = direction(s * z + ds * dz - sigma * mu)
            alpha = min(1.0, _STEP_FRACTION * min(_max_step(s, ds), _max_step(z, dz)))
        else:
            dx, dy, ds, dz = direction(np.zeros(0))
            alpha = 1.0
        if not (np.all(np.isfinite(dx)) and np.all(np.isfinite(dz)) and np.all(np.isfinite(dy))):
            logger.debug("non-finite Newton direction at iteration %d", it)
            break
        x = x + alpha * dx
        y = y + alpha * dy
        s = s + alpha * ds
        z = z + alpha * dz

    bx, by, bz = best
    return QpSolution(
        x=bx.copy(),
        eq_multipliers=by.copy(),
        ineq_multipliers=bz.copy(),
        objective=p.objective(bx),
        status=status,
        iterations=it,
    )
