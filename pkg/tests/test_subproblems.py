from __future__ import annotations

import numpy as np
import pytest

from oracles import project_simplex_cap, projected_gradient, random_data, random_substochastic
from sstiep.bounds import build_delta
from sstiep.errors import InfeasibleInput, InvalidBeta, InvalidData, ShapeMismatch
from sstiep.qp import QpStatus, qp_kkt_residual, qp_solve
from sstiep.subproblems import (
    MatrixPair,
    ProblemData,
    build_op_a,
    build_op_p,
    dropped_constant,
    objective_direct,
    objective_quadform_A,
    objective_quadform_P,
    pack_a,
    pack_p,
    unpack_a,
    unpack_p,
)

UNORDERED3 = ProblemData([0.8, 0.3637, 0.5120], [0.17, 0.15, 0.68], check=False)


def test_validation():
    ProblemData([0.5, 0.2], [0.6, 0.4])
    with pytest.raises(InvalidData):
        ProblemData([1.0, 0.2], [0.6, 0.4])
    with pytest.raises(InvalidData):
        ProblemData([0.2, 0.5], [0.6, 0.4])
    with pytest.raises(InvalidData):
        ProblemData([0.5, -0.6], [0.6, 0.4])
    with pytest.raises(InvalidBeta):
        ProblemData([0.5, 0.2], [1.0, 0.0])
    with pytest.raises(InvalidBeta):
        ProblemData([0.5, 0.2], [0.6, 0.5])
    with pytest.raises(ShapeMismatch):
        ProblemData([0.5, 0.2], [0.2, 0.3, 0.5])
    with pytest.raises(InvalidData):
        ProblemData([0.5], [1.0])


def test_data_is_read_only():
    d = ProblemData([0.5, 0.2], [0.6, 0.4])
    with pytest.raises(ValueError):
        d.lam[0] = 0.1


def test_objective_examples():
    d = ProblemData([0.5, 0.2], [0.6, 0.4])
    assert objective_direct(d, np.diag(d.lam), np.eye(2)) == 0.0
    assert objective_direct(d, np.zeros((2, 2)), np.eye(2)) == pytest.approx(0.29)


@pytest.mark.parametrize("seed", range(30))
def test_three_objective_forms_agree(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 7))
    d = random_data(n, rng)
    A = random_substochastic(n, rng)
    P = rng.normal(size=(n, n))
    ref = objective_direct(d, A, P)
    assert objective_quadform_P(d, A, P) == pytest.approx(ref, rel=1e-10)
    assert objective_quadform_A(d, A, P) == pytest.approx(ref, rel=1e-10)


def test_pack_roundtrip():
    M = np.arange(9.0).reshape(3, 3)
    np.testing.assert_array_equal(unpack_p(pack_p(M), 3), M)
    np.testing.assert_array_equal(unpack_a(pack_a(M), 3), M)
    assert pack_a(M)[1] == M[1, 0]


@pytest.mark.parametrize("seed", range(10))
def test_op_a_objective_is_L(seed):
    rng = np.random.default_rng(seed)
    d = random_data(3, rng)
    A = random_substochastic(3, rng)
    P = rng.normal(size=(3, 3))
    assert build_op_a(d, A).objective(pack_p(P)) == pytest.approx(objective_direct(d, A, P), rel=1e-12)


@pytest.mark.parametrize("seed", range(10))
def test_op_p_objective_drops_constant(seed):
    rng = np.random.default_rng(seed)
    d = random_data(4, rng)
    A = random_substochastic(4, rng)
    P = rng.normal(size=(4, 4))
    q = build_op_p(d, P).objective(pack_a(A))
    assert q + dropped_constant(d, P) == pytest.approx(objective_direct(d, A, P), rel=1e-10, abs=1e-12)


def test_op_a_from_zero_unordered():
    s = qp_solve(build_op_a(UNORDERED3, np.zeros((3, 3))))
    np.testing.assert_allclose(unpack_p(s.x, 3), np.full((3, 3), 1 / 3), atol=1e-6)


def test_op_a_trivial():
    d = ProblemData([0.5, 0.2], [0.6, 0.4])
    s = qp_solve(build_op_a(d, np.diag(d.lam)))
    assert s.objective == pytest.approx(0.0, abs=1e-10)


def test_op_a_rejects_infeasible_A():
    d = ProblemData([0.5, 0.2], [0.6, 0.4])
    with pytest.raises(InfeasibleInput):
        build_op_a(d, np.array([[0.7, 0.7], [0.0, 0.0]]))
    with pytest.raises(InfeasibleInput):
        build_op_a(d, np.array([[-0.1, 0.0], [0.0, 0.0]]))


@pytest.mark.parametrize("seed", range(10))
def test_delta_feasible_for_op_a(seed):
    rng = np.random.default_rng(seed)
    d = random_data(int(rng.integers(2, 7)), rng)
    p = build_op_a(d, random_substochastic(d.n, rng))
    x = pack_p(build_delta(d.beta))
    assert np.max(np.abs(p.E @ x - p.d)) <= 1e-12
    assert np.max(p.G @ x - p.h) <= 1e-12


def test_op_p_trivial():
    d = ProblemData([0.5, 0.2], [0.6, 0.4])
    s = qp_solve(build_op_p(d, np.eye(2)))
    A = unpack_a(s.x, 2)
    # zero multipliers on the active bounds: interior iterates approach the
    # off-diagonal zeros only like sqrt(tol)
    np.testing.assert_allclose(A, np.diag([0.5, 0.2]), atol=1e-4)
    assert objective_direct(d, A, np.eye(2)) <= 1e-9


def test_op_p_nonuniqueness():
    P0 = np.full((3, 3), 1 / 3)
    p = build_op_p(UNORDERED3, P0)
    s = qp_solve(p)
    A = unpack_a(s.x, 3)
    np.testing.assert_allclose(A, np.full((3, 3), 0.18618), atol=2e-5)
    # With P0 = J/3 the objective depends on A only through its column sums,
    # so every feasible A with column sums mean(lam) is optimal.
    A_hat = np.array([
        [1.8618e-01, 1.8618e-01, 1.8618e-01],
        [1.8618e-01, 1.8618e-01, 3.7219e-01],
        [1.8618e-01, 1.8618e-01, 1.8889e-04],
    ])
    best = objective_direct(UNORDERED3, A, P0)
    other = objective_direct(UNORDERED3, A_hat, P0)
    assert other == pytest.approx(best, abs=1e-8)
    assert not np.allclose(A, A_hat, atol=1e-3)
    exact = 3 * np.sum((UNORDERED3.lam - UNORDERED3.lam.mean()) ** 2) / 9
    assert best == pytest.approx(exact, abs=1e-10)


@pytest.mark.parametrize("seed", range(10))
def test_op_p_matches_projected_gradient(seed):
    rng = np.random.default_rng(seed)
    d = random_data(3, rng)
    P = rng.normal(size=(3, 3)) + np.eye(3)
    p = build_op_p(d, P)
    s = qp_solve(p)
    assert s.status is QpStatus.OPTIMAL
    assert max(qp_kkt_residual(p, s)) <= 1e-8

    def grad(A):
        R = P @ A - d.lam[:, None] * P
        return 2 * P.T @ R

    L = 2 * float(np.linalg.eigvalsh(P.T @ P)[-1])
    A = projected_gradient(grad, lambda Y: np.array([project_simplex_cap(r) for r in Y]), np.zeros((3, 3)), L)
    assert objective_direct(d, unpack_a(s.x, 3), P) == pytest.approx(objective_direct(d, A, P), abs=1e-6)


def test_matrix_pair_violations():
    d = ProblemData([0.5, 0.2], [0.6, 0.4])
    good = MatrixPair.of(d, np.diag(d.lam), np.eye(2))
    assert good.is_feasible(d)
    bad = MatrixPair.of(d, np.array([[0.8, 0.3], [0.0, 0.2]]), np.eye(2))
    v = bad.violations(d)
    assert v["A_row_sums"] == pytest.approx(0.1)
    assert not bad.is_feasible(d)
