"""Normalized complementarity solver and Q-matrix testing."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from absorbeq import (
    LcpProblem,
    find_witness,
    is_q_matrix,
    solve_lcp,
    verify_solution,
)
from absorbeq.lcp_solver import LcpError


def test_scalar_positive():
    sol = solve_lcp(LcpProblem([[1.0]], [2.0]))
    assert sol is not None
    assert sol.support == (1,)
    assert np.allclose(sol.w, [1.0])
    assert np.allclose(sol.z, [0.0, 1.0])


def test_scalar_negative_matrix():
    # with R = [[-1]] only q >= 0 with all mass on q works
    sol = solve_lcp(LcpProblem([[-1.0]], [0.5]))
    assert sol is not None
    assert sol.support == ()
    assert np.allclose(sol.w, [0.5])
    assert np.allclose(sol.z, [1.0, 0.0])
    assert solve_lcp(LcpProblem([[-1.0]], [-0.5])) is None


def test_q_matrix_verdicts():
    assert is_q_matrix([[1.0]], density=40).is_q
    assert is_q_matrix(np.eye(2), density=40).is_q
    verdict = is_q_matrix([[-1.0]], density=40)
    assert not verdict.is_q
    assert verdict.witness is not None
    # the witness has no solution
    assert solve_lcp(LcpProblem([[-1.0]], verdict.witness)) is None


def test_find_witness_reverified():
    w = find_witness([[-1.0]], density=40)
    assert w is not None and w[0] < 0.0
    assert find_witness([[1.0]], density=40) is None
    assert find_witness(np.eye(2), density=40) is None


def test_diag_bound_variant():
    # dominant column: R[:, 1] >= diag(R) entrywise, so all mass on that
    # column solves every q even under the diagonal bound
    R = np.array([[0.2, 0.25], [0.1, 0.3]])
    assert is_q_matrix(R, density=40, diag_bound=True).is_q
    sol = solve_lcp(LcpProblem(R, [-1.0, -1.0]), diag_bound=True)
    assert sol is not None and sol.diag_bound_holds
    assert np.all(sol.w >= np.diag(R) - 1e-9)
    # without a dominant column the diagonal bound can break solvability:
    # this matrix has a nonnegative column (so it is Q verbatim) but no
    # dominant column, and the bounded variant finds a witness
    R2 = np.array([[0.9, 0.5], [0.3, 0.4]])
    assert is_q_matrix(R2, density=40).is_q
    verdict = is_q_matrix(R2, density=40, diag_bound=True)
    assert not verdict.is_q
    assert solve_lcp(LcpProblem(R2, verdict.witness)) is not None
    assert solve_lcp(LcpProblem(R2, verdict.witness), diag_bound=True) is None


def test_input_validation():
    with pytest.raises(LcpError):
        LcpProblem([[1.0, 2.0]], [1.0])
    with pytest.raises(LcpError):
        LcpProblem([[np.inf]], [1.0])
    with pytest.raises(LcpError):
        solve_lcp(LcpProblem([[1.0]], [1.0]), tol=1.0)


def test_deterministic_support_order():
    # repeated solves return the identical solution object values
    R = np.array([[0.3, 0.1], [0.2, 0.4]])
    q = np.array([0.5, -0.2])
    a = solve_lcp(LcpProblem(R, q))
    b = solve_lcp(LcpProblem(R, q))
    assert a.support == b.support
    assert np.array_equal(a.w, b.w) and np.array_equal(a.z, b.z)


@settings(max_examples=150, deadline=None)
@given(st.integers(min_value=0, max_value=100_000), st.integers(min_value=1, max_value=3))
def test_solutions_verify(seed, n):
    rng = np.random.default_rng(seed)
    R = rng.uniform(-1, 1, (n, n))
    q = rng.uniform(-1, 1, n)
    problem = LcpProblem(R, q)
    sol = solve_lcp(problem)
    if sol is not None:
        assert verify_solution(problem, sol, 1e-6)
        assert abs(sol.z.sum() - 1.0) <= 1e-9
        assert np.all(sol.w >= -1e-9)


@settings(max_examples=50, deadline=None)
@given(st.integers(min_value=0, max_value=100_000))
def test_nonnegative_q_always_solvable(seed):
    # z = (1, 0, ..., 0) solves any q >= 0, so the solver must never fail
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 4))
    R = rng.uniform(-1, 1, (n, n))
    q = rng.uniform(0, 1, n)
    assert solve_lcp(LcpProblem(R, q)) is not None
