"""Simplex-normalized linear complementarity problems.

The problem: given an n x n matrix R and q in R^n, find w >= 0 and a
probability vector z = (z_0, ..., z_n) with w = z_0 * q + R * (z_1..z_n) and,
per coordinate, z_i = 0 or w_i = R_ii.  A Q-matrix is an R for which the
problem is solvable for every q; a q with no solution is a witness.

Solved by support enumeration: for each S subset of {1..n} the active system
is square and generically has a unique candidate, checked directly; singular
systems fall back to a linear-programming feasibility solve.  An optional
diagonal bound adds w_i >= R_ii for every i (the variant the synthesis
routes need: without it any matrix with a nonnegative column is trivially
solvable by putting all mass on that column's quitter).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import linprog


class LcpError(ValueError):
    pass


@dataclass(frozen=True)
class LcpProblem:
    R: np.ndarray
    q: np.ndarray

    def __init__(self, R, q):
        Rm = np.asarray(R, dtype=float)
        qv = np.asarray(q, dtype=float)
        if Rm.ndim != 2 or Rm.shape[0] != Rm.shape[1]:
            raise LcpError("R must be square")
        if qv.shape != (Rm.shape[0],):
            raise LcpError("q dimension does not match R")
        if not (np.all(np.isfinite(Rm)) and np.all(np.isfinite(qv))):
            raise LcpError("entries must be finite")
        object.__setattr__(self, "R", Rm)
        object.__setattr__(self, "q", qv)

    @property
    def n(self) -> int:
        return self.R.shape[0]


@dataclass(frozen=True)
class LcpSolution:
    w: np.ndarray
    z: np.ndarray  # length n + 1, z[0] is the q weight
    support: tuple  # S subset of {1..n} (1-based indices)
    diag_bound_holds: bool  # whether w_i >= R_ii for every i


@dataclass(frozen=True)
class QMatrixVerdict:
    status: str  # "Q_certified_numerically" or "NotQ"
    witness: Optional[np.ndarray]
    density: int
    diag_bound: bool

    @property
    def is_q(self) -> bool:
        return self.status == "Q_certified_numerically"


def _supports(n: int):
    """All S subsets of {1..n}, larger supports first, lexicographic within size."""
    idx = list(range(1, n + 1))
    for k in range(n, -1, -1):
        yield from itertools.combinations(idx, k)


def _candidate_from_support(problem, S, tol, diag_bound):
    """Solve the square active system for support S; None when infeasible."""
    R, q, n = problem.R, problem.q, problem.n
    S0 = [i - 1 for i in S]
    m = len(S0)
    # unknowns: z_0 and z_i for i in S; equations: sum = 1 and w_i = R_ii on S
    A = np.zeros((m + 1, m + 1))
    b = np.zeros(m + 1)
    A[0, :] = 1.0
    b[0] = 1.0
    for r, i in enumerate(S0):
        A[r + 1, 0] = q[i]
        for c, j in enumerate(S0):
            A[r + 1, c + 1] = R[i, j]
        b[r + 1] = R[i, i]
    try:
        sol = np.linalg.solve(A, b)
    except np.linalg.LinAlgError:
        return _lp_feasible(problem, S, tol, diag_bound)
    if np.linalg.cond(A) > 1e12:
        return _lp_feasible(problem, S, tol, diag_bound)
    return _check_candidate(problem, S, sol, tol, diag_bound)


def _check_candidate(problem, S, sol, tol, diag_bound):
    R, q, n = problem.R, problem.q, problem.n
    S0 = [i - 1 for i in S]
    if np.any(sol < -tol):
        return None
    z = np.zeros(n + 1)
    z[0] = max(sol[0], 0.0)
    for c, i in enumerate(S0):
        z[i + 1] = max(sol[c + 1], 0.0)
    ssum = z.sum()
    if abs(ssum - 1.0) > 1e-9:
        return None
    z /= ssum
    w = z[0] * q + R @ z[1:]
    if np.any(w < -tol):
        return None
    for i in S0:
        if abs(w[i] - R[i, i]) > 10 * tol:
            return None
    diag_ok = bool(np.all(w >= np.diag(R) - tol))
    if diag_bound and not diag_ok:
        return None
    return LcpSolution(w, z, tuple(S), diag_ok)


def _lp_feasible(problem, S, tol, diag_bound):
    """LP feasibility fallback for singular active systems."""
    R, q, n = problem.R, problem.q, problem.n
    S0 = [i - 1 for i in S]
    m = len(S0)
    nv = m + 1  # z_0, z_S
    A_eq = [np.ones(nv)]
    b_eq = [1.0]
    for i in S0:
        row = np.zeros(nv)
        row[0] = q[i]
        for c, j in enumerate(S0):
            row[c + 1] = R[i, j]
        A_eq.append(row)
        b_eq.append(R[i, i])
    A_ub = []
    b_ub = []
    lo = np.diag(R) if diag_bound else np.zeros(n)
    for i in range(n):
        bound = max(lo[i], 0.0) if diag_bound else 0.0
        row = np.zeros(nv)
        row[0] = -q[i]
        for c, j in enumerate(S0):
            row[c + 1] = -R[i, j]
        A_ub.append(row)
        b_ub.append(-bound)
    # minimize z_0 for a deterministic vertex (and the least dependence on q)
    obj = np.zeros(nv)
    obj[0] = 1.0
    res = linprog(
        obj,
        A_ub=np.array(A_ub),
        b_ub=np.array(b_ub),
        A_eq=np.array(A_eq),
        b_eq=np.array(b_eq),
        bounds=[(0.0, None)] * nv,
        method="highs",
    )
    if not res.success:
        return None
    return _check_candidate(problem, S, res.x, max(tol, 1e-9), diag_bound)


def solve_lcp(
    problem: LcpProblem, tol: float = 1e-9, diag_bound: bool = False
) -> Optional[LcpSolution]:
    """First feasible support in deterministic order; None when infeasible.

    ``diag_bound`` additionally requires w_i >= R_ii for every coordinate.
    """
    if not 1e-12 <= tol <= 1e-4:
        raise LcpError(f"tol out of range: {tol}")
    for S in _supports(problem.n):
        sol = _candidate_from_support(problem, S, tol, diag_bound)
        if sol is not None:
            return sol
    return None


def verify_solution(problem: LcpProblem, sol: LcpSolution, tol: float) -> bool:
    """Independent constraint re-check of a returned solution."""
    z = sol.z
    if np.any(z < -tol) or abs(z.sum() - 1.0) > tol:
        return False
    w = z[0] * problem.q + problem.R @ z[1:]
    if np.max(np.abs(w - sol.w)) > tol or np.any(w < -tol):
        return False
    for i in range(problem.n):
        if z[i + 1] > tol and abs(w[i] - problem.R[i, i]) > tol:
            return False
    return True


def _sphere_grid(n: int, density: int) -> np.ndarray:
    """Deterministic grid on the unit sphere with `density` points per angle."""
    if n == 1:
        return np.array([[1.0], [-1.0]])
    if n == 2:
        ang = 2.0 * np.pi * np.arange(density) / density
        return np.stack([np.cos(ang), np.sin(ang)], axis=1)
    # hyperspherical angles: n - 2 polar in [0, pi], one azimuthal in [0, 2 pi)
    polar = [np.pi * (np.arange(density) + 0.5) / density] * (n - 2)
    azim = 2.0 * np.pi * np.arange(density) / density
    pts = []
    for angles in itertools.product(*polar, azim):
        v = np.ones(n)
        for k, th in enumerate(angles):
            v[k] *= np.cos(th)
            v[k + 1 :] *= np.sin(th)
        pts.append(v)
    return np.array(pts)


def _structured_candidates(n: int) -> np.ndarray:
    pts = []
    eye = np.eye(n)
    for i in range(n):
        pts.append(eye[i])
        pts.append(-eye[i])
    for signs in itertools.product((1.0, -1.0), repeat=n):
        v = np.array(signs) / np.sqrt(n)
        pts.append(v)
    return np.array(pts)


# module-level registry of previously found witnesses, keyed by dimension and
# variant, re-tried first on later calls
_WITNESS_CACHE: dict = {}


def is_q_matrix(
    R, density: int = 40, tol: float = 1e-9, diag_bound: bool = False
) -> QMatrixVerdict:
    """Sample q over the unit sphere and structured candidates.

    NotQ verdicts carry an exact witness (re-verified infeasible); Q verdicts
    are certified only at the sampling density used.
    """
    Rm = np.asarray(R, dtype=float)
    n = Rm.shape[0]
    if n > 12:
        raise LcpError("dimension too large for support enumeration")
    cached = _WITNESS_CACHE.get((n, diag_bound), [])
    candidates = [np.asarray(c) for c in cached]
    candidates.extend(_structured_candidates(n))
    candidates.extend(_sphere_grid(n, density))
    for q in candidates:
        problem = LcpProblem(Rm, q)
        if solve_lcp(problem, tol, diag_bound) is None:
            key = (n, diag_bound)
            bucket = _WITNESS_CACHE.setdefault(key, [])
            if not any(np.allclose(q, c) for c in bucket):
                bucket.append(np.array(q))
            return QMatrixVerdict("NotQ", np.array(q), density, diag_bound)
    return QMatrixVerdict("Q_certified_numerically", None, density, diag_bound)


def find_witness(
    R, density: int = 40, tol: float = 1e-9, diag_bound: bool = False
) -> Optional[np.ndarray]:
    verdict = is_q_matrix(R, density, tol, diag_bound)
    if verdict.status != "NotQ":
        return None
    # re-verify through an independent call before handing the witness out
    if solve_lcp(LcpProblem(R, verdict.witness), tol, diag_bound) is not None:
        raise LcpError("witness failed re-verification")  # pragma: no cover
    return verdict.witness
