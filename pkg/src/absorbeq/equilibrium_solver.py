"""Stationary discounted equilibria, vanishing-discount limits, and min-max values.

Equilibria are found by damped best-response iteration from seeded starts with
a support-enumeration / nonlinear-refinement fallback; residuals are always
re-computed exactly (a best stationary deviation in a single-non-absorbing-
state discounted problem is pure, so exhaustive action evaluation is exact).

The min-max value treats the opponents as one adversary who may correlate
(legitimate in the sunspot extension, where a public device is available) and
is computed by solving the one-state Shapley fixed point with bisection over
the state value; each evaluation is a zero-sum matrix game solved by LP.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import least_squares, linprog

from .game_core import AbsorbingGame, GameError
from .payoff_engine import MixedProfile, discounted_payoff

Caps = Optional[dict]  # (player, action) -> probability cap


class SolverError(RuntimeError):
    pass


def _cap(caps: Caps, i: int, a: int) -> float:
    if caps is None:
        return 1.0
    return float(caps.get((i, a), 1.0))


def _nd_values(game: AbsorbingGame, x: MixedProfile, i: int, lam: float):
    """Per-action numerator/denominator pieces of player i's discounted value.

    For pure action a against x_{-i} the value is N_a / D_a with
    N_a = lam * ubar_a + (1 - lam) * absorbed_a and D_a = lam + (1 - lam) * P_a;
    a mixture's value is (sum x_a N_a) / (sum x_a D_a) since every piece is
    linear in x_i.
    """
    n_act = len(game.actions[i])
    N = np.zeros(n_act)
    D = np.full(n_act, lam)
    for a in game.profiles():
        rest = 1.0
        for j, aj in enumerate(a):
            if j != i:
                rest *= x[j][aj]
        if rest == 0.0:
            continue
        ai = a[i]
        u = game.payoff[a][i]
        p = game.absorb_prob[a]
        N[ai] += lam * rest * u + (1.0 - lam) * rest * p * u
        D[ai] += (1.0 - lam) * rest * p
    return N, D


def action_values(game: AbsorbingGame, x: MixedProfile, i: int, lam: float) -> np.ndarray:
    """Discounted value to player i of each pure stationary action against x_{-i}."""
    N, D = _nd_values(game, x, i, lam)
    return N / D


def capped_best_response(
    game: AbsorbingGame, x: MixedProfile, i: int, lam: float, caps: Caps = None
) -> tuple:
    """Best mixed action for player i within per-action probability caps.

    The value of a mixture is the ratio (sum x_a N_a)/(sum x_a D_a); the
    capped maximum is found by Dinkelbach iteration: at level V, fill caps
    greedily by the linearized coefficient N_a - V * D_a, then update V to
    the achieved value.  Without caps this reduces to the pure argmax.
    Returns (distribution, value).
    """
    N, D = _nd_values(game, x, i, lam)
    n_act = len(N)
    if caps is None:
        a = int(np.argmax(N / D))
        dist = np.zeros(n_act)
        dist[a] = 1.0
        return dist, N[a] / D[a]

    def greedy(V):
        order = sorted(range(n_act), key=lambda a: (-(N[a] - V * D[a]), a))
        dist = np.zeros(n_act)
        remaining = 1.0
        for a in order:
            take = min(_cap(caps, i, a), remaining)
            dist[a] = take
            remaining -= take
            if remaining <= 1e-15:
                break
        if remaining > 1e-12:
            raise SolverError(f"caps on player {i} leave no feasible mixed action")
        return dist

    V = float(np.max(N / D))
    dist = greedy(V)
    for _ in range(100):
        value = float(dist @ N) / float(dist @ D)
        if abs(value - V) <= 1e-14:
            break
        V = value
        dist = greedy(V)
    return dist, float(dist @ N) / float(dist @ D)


def equilibrium_residual(
    game: AbsorbingGame, x: MixedProfile, lam: float, caps: Caps = None
) -> float:
    """Max over players of best-response gain, computed exactly."""
    base = discounted_payoff(game, x, lam)
    worst = 0.0
    for i in range(game.n_players):
        _, v = capped_best_response(game, x, i, lam, caps)
        worst = max(worst, v - base[i])
    return worst


@dataclass(frozen=True)
class DiscountedEquilibrium:
    profile: MixedProfile
    lam: float
    residual: float


def _mixture_value_greedy_note():  # pragma: no cover - documentation anchor
    pass


def _random_profile(game: AbsorbingGame, rng, caps: Caps) -> MixedProfile:
    dists = []
    for i, names in enumerate(game.actions):
        v = rng.dirichlet(np.ones(len(names)))
        # push inside the caps if violated
        for a in range(len(names)):
            cap = _cap(caps, i, a)
            if v[a] > cap:
                excess = v[a] - cap
                v[a] = cap
                free = [b for b in range(len(names)) if v[b] < _cap(caps, i, b)]
                for b in free:
                    v[b] += excess / len(free)
        v = v / v.sum()
        dists.append(v)
    return MixedProfile(dists)


def _pure_profiles(game: AbsorbingGame):
    return itertools.product(*(range(len(a)) for a in game.actions))


def _refine_support(
    game: AbsorbingGame,
    x: MixedProfile,
    lam: float,
    caps: Caps,
    support_tol: float = 1e-4,
) -> Optional[MixedProfile]:
    """Polish an approximate equilibrium by solving the indifference system
    on its approximate support with a nonlinear least-squares root finder."""
    supports = []
    fixed = []
    for i in range(game.n_players):
        sup = [a for a in range(len(game.actions[i])) if x[i][a] > support_tol]
        if not sup:
            sup = [int(np.argmax(x[i]))]
        fix = [a for a in sup if caps is not None and x[i][a] >= _cap(caps, i, a) - 1e-9
               and _cap(caps, i, a) < 1.0]
        supports.append([a for a in sup if a not in fix])
        fixed.append(fix)

    idx = []
    x0 = []
    for i in range(game.n_players):
        for a in supports[i]:
            idx.append((i, a))
            x0.append(x[i][a])
    if not idx:
        return None

    def build(vec):
        dists = []
        for i in range(game.n_players):
            v = np.zeros(len(game.actions[i]))
            for a in fixed[i]:
                v[a] = _cap(caps, i, a)
            for k, (j, a) in enumerate(idx):
                if j == i:
                    v[a] = max(vec[k], 0.0)
            s = v.sum()
            if s <= 0:
                return None
            dists.append(v / s)
        return MixedProfile(dists)

    def residuals(vec):
        prof = build(vec)
        if prof is None:
            return np.full(len(idx) + game.n_players, 1e3)
        res = []
        for i in range(game.n_players):
            vals = action_values(game, prof, i, lam)
            sup = supports[i]
            if len(sup) >= 2:
                ref = vals[sup[0]]
                res.extend(vals[a] - ref for a in sup[1:])
            # mass balance inside [0, cap]
            free_mass = sum(prof[i][a] for a in sup)
            res.append(
                free_mass + sum(_cap(caps, i, a) for a in fixed[i]) - 1.0
                if fixed[i]
                else 0.0
            )
        return np.array(res + [0.0] * (len(idx) + game.n_players - len(res)))

    try:
        sol = least_squares(residuals, np.array(x0), bounds=(0.0, 1.0), xtol=1e-14,
                            ftol=1e-14, gtol=1e-14, max_nfev=400)
    except Exception:
        return None
    return build(sol.x)


def stationary_discounted_equilibrium(
    game: AbsorbingGame,
    lam: float,
    tol: float = 1e-8,
    seed: int = 0,
    caps: Caps = None,
    n_starts: int = 64,
    max_iter: int = 2000,
    warm_start: Optional[MixedProfile] = None,
) -> DiscountedEquilibrium:
    """Damped best-response iteration with seeded restarts and refinement."""
    if not 0.0 < lam < 1.0:
        raise GameError(f"discount out of range: {lam}")
    best: Optional[MixedProfile] = None
    best_res = np.inf

    def consider(prof: MixedProfile):
        nonlocal best, best_res
        res = equilibrium_residual(game, prof, lam, caps)
        if res < best_res:
            best, best_res = prof, res
        return res

    # pure profiles first (cheap and exact when one works)
    if caps is None:
        for a in _pure_profiles(game):
            if consider(MixedProfile.point_mass(game, a)) <= tol:
                return DiscountedEquilibrium(best, lam, best_res)

    rng = np.random.default_rng(seed)
    starts = []
    if warm_start is not None:
        starts.append(warm_start)
    starts.append(MixedProfile.uniform(game) if caps is None else _random_profile(game, rng, caps))
    while len(starts) < n_starts:
        starts.append(_random_profile(game, rng, caps))

    for start in starts:
        x = start
        stalled = 0
        prev_res = np.inf
        for _ in range(max_iter):
            new_dists = []
            for i in range(game.n_players):
                br, _ = capped_best_response(game, x, i, lam, caps)
                new_dists.append(0.5 * x[i] + 0.5 * br)
            x = MixedProfile(new_dists)
            res = equilibrium_residual(game, x, lam, caps)
            if res <= tol:
                consider(x)
                return DiscountedEquilibrium(best, lam, best_res)
            if res >= prev_res - 1e-12:
                stalled += 1
                if stalled > 50:
                    break
            else:
                stalled = 0
            prev_res = res
        consider(x)
        refined = _refine_support(game, x, lam, caps)
        if refined is not None and consider(refined) <= tol:
            return DiscountedEquilibrium(best, lam, best_res)
        if best_res <= tol:
            return DiscountedEquilibrium(best, lam, best_res)

    if best_res <= tol:
        return DiscountedEquilibrium(best, lam, best_res)
    raise SolverError(
        f"no equilibrium found at tol={tol} (best residual {best_res:.3g} at lam={lam})"
    )


@dataclass(frozen=True)
class VanishingLimit:
    profile: MixedProfile
    lam_sequence: tuple
    successive_distances: tuple
    converged: bool


def vanishing_discount_limit(
    game: AbsorbingGame,
    lam_sequence: Sequence[float],
    tol: float = 1e-8,
    seed: int = 0,
    caps: Caps = None,
) -> VanishingLimit:
    """Track x^lambda along a decreasing discount sequence with warm starts."""
    lams = list(lam_sequence)
    if len(lams) < 4:
        raise GameError("sequence too short: need at least 4 decreasing discounts")
    if any(b >= a for a, b in zip(lams, lams[1:])):
        raise GameError("lam_sequence must be strictly decreasing")
    if lams[-1] > 1e-5 + 1e-12:
        raise GameError("lam_sequence must end at or below 1e-5")
    prev = None
    dists = []
    for lam in lams:
        eq = stationary_discounted_equilibrium(
            game, lam, tol=tol, seed=seed, caps=caps, warm_start=prev
        )
        if prev is not None:
            dists.append(eq.profile.max_abs_diff(prev))
        prev = eq.profile
    tail = dists[-3:]
    converged = all(b <= a + 1e-9 for a, b in zip(tail, tail[1:])) or tail[-1] <= 1e-6
    return VanishingLimit(prev, tuple(lams), tuple(dists), converged)


def _matrix_game_value(G: np.ndarray) -> tuple:
    """Value and both optimal strategies of a zero-sum matrix game (row max)."""
    m, k = G.shape
    shift = float(G.min())
    H = G - shift + 1.0  # strictly positive; value v > 0
    # maximize v s.t. p^T H >= v 1, sum p = 1  <=>  minimize sum y, y = p / v
    res = linprog(
        np.ones(m),
        A_ub=-H.T,
        b_ub=-np.ones(k),
        bounds=[(0.0, None)] * m,
        method="highs",
    )
    if not res.success:  # pragma: no cover
        raise SolverError("matrix game LP failed")
    v = 1.0 / res.x.sum()
    p = res.x * v
    # adversary strategy from the dual: marginals of the inequality constraints
    duals = np.asarray(res.ineqlin.marginals)
    y = np.abs(duals)
    y = y / y.sum() if y.sum() > 0 else np.full(k, 1.0 / k)
    return v + shift - 1.0, p, y


@dataclass(frozen=True)
class MinMaxResult:
    player: int
    lam: float
    value: float
    adversary: dict  # joint opponent profile (tuple over players != i) -> prob
    own_best: np.ndarray  # player i's optimal mixed action at the fixed point


def minmax(game: AbsorbingGame, i: int, lam: float, tol: float = 1e-10) -> MinMaxResult:
    """Level to which correlated opponents can hold player i (discounted)."""
    if not 0 <= i < game.n_players:
        raise GameError(f"invalid player {i}")
    if not 0.0 < lam < 1.0:
        raise GameError(f"discount out of range: {lam}")
    own = list(range(len(game.actions[i])))
    other_players = [j for j in range(game.n_players) if j != i]
    others = list(itertools.product(*(range(len(game.actions[j])) for j in other_players)))

    U = np.empty((len(own), len(others)))
    P = np.empty((len(own), len(others)))
    for r, ai in enumerate(own):
        for c, rest in enumerate(others):
            prof = list(rest)
            prof.insert(i, ai)
            prof = tuple(prof)
            U[r, c] = game.payoff[prof][i]
            P[r, c] = game.absorb_prob[prof]

    def shapley_value(v):
        G = lam * U + (1.0 - lam) * (P * U + (1.0 - P) * v)
        return _matrix_game_value(G)

    lo = float(U.min())
    hi = float(U.max())
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        val, _, _ = shapley_value(mid)
        if val > mid:
            lo = mid
        else:
            hi = mid
        if hi - lo <= tol:
            break
    v_star = 0.5 * (lo + hi)
    _, p, y = shapley_value(v_star)
    adversary = {rest: float(prob) for rest, prob in zip(others, y) if prob > 1e-15}
    return MinMaxResult(i, lam, v_star, adversary, p)


def punishment_profile(game: AbsorbingGame, i: int, lam: float) -> MinMaxResult:
    """Adversary side of the min-max computation (the punishment device)."""
    return minmax(game, i, lam)


def best_response_vs_correlated(
    game: AbsorbingGame, i: int, adversary: dict, lam: float
) -> float:
    """Best pure stationary value for player i against a correlated opponent
    distribution; pure stationary deviations are optimal in this one-state
    discounted decision problem."""
    from .payoff_engine import correlated_discounted_payoff

    best = -np.inf
    for ai in range(len(game.actions[i])):
        dist = {}
        for rest, prob in adversary.items():
            prof = list(rest)
            prof.insert(i, ai)
            dist[tuple(prof)] = prob
        best = max(best, correlated_discounted_payoff(game, dist, lam)[i])
    return best
