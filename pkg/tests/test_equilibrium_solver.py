"""Stationary equilibrium, best responses, and min-max solvers."""

import itertools

import numpy as np
import pytest

from absorbeq import (
    MixedProfile,
    best_response_vs_correlated,
    capped_best_response,
    discounted_payoff,
    equilibrium_residual,
    minmax,
    punishment_profile,
    stationary_discounted_equilibrium,
    vanishing_discount_limit,
)
from absorbeq.equilibrium_solver import action_values
from absorbeq.payoff_engine import correlated_discounted_payoff
from game_builders import lshaped_ql, quitting_2p, random_game


def test_uncapped_best_response_is_pure_argmax():
    game = quitting_2p()
    x = MixedProfile([[0.9, 0.1], [0.7, 0.3]])
    for i in range(2):
        dist, value = capped_best_response(game, x, i, 1e-2)
        vals = action_values(game, x, i, 1e-2)
        assert value == pytest.approx(float(np.max(vals)))
        assert dist[int(np.argmax(vals))] == 1.0


def test_capped_best_response_vs_grid():
    """Capped maximum checked against a dense grid over the capped simplex."""
    game = quitting_2p()
    x = MixedProfile([[0.9, 0.1], [0.7, 0.3]])
    lam = 1e-2
    caps = {(0, 1): 0.25}  # player 0 may quit with probability at most 0.25
    dist, value = capped_best_response(game, x, 0, lam, caps)
    assert dist[1] <= 0.25 + 1e-12
    best_grid = -np.inf
    for p_quit in np.linspace(0.0, 0.25, 2501):
        cand = x.replace_player(0, [1.0 - p_quit, p_quit])
        best_grid = max(best_grid, discounted_payoff(game, cand, lam)[0])
    assert value >= best_grid - 1e-9
    assert value <= best_grid + 1e-6  # grid resolution slack


def test_stationary_equilibrium_residual():
    game = quitting_2p()
    for lam in (1e-2, 1e-3):
        eq = stationary_discounted_equilibrium(game, lam, tol=1e-8)
        assert eq.residual <= 1e-8
        # independent re-check: pure-action gains against the profile
        base = discounted_payoff(game, eq.profile, lam)
        for i in range(2):
            vals = action_values(game, eq.profile, i, lam)
            assert float(np.max(vals)) - base[i] <= 1e-8 + 1e-12


def test_equilibrium_residual_detects_deviation():
    game = quitting_2p()
    # all-continue forever pays 0, while quitting pays at least 0.18
    x = MixedProfile([[1.0, 0.0], [1.0, 0.0]])
    assert equilibrium_residual(game, x, 1e-2) >= 0.1


def test_vanishing_discount_limit_converges():
    game = quitting_2p()
    limit = vanishing_discount_limit(game, (1e-2, 1e-3, 1e-4, 1e-5), tol=1e-7)
    assert limit.converged
    assert equilibrium_residual(game, limit.profile, 1e-4) <= 1e-7


def test_minmax_vs_grid_oracle():
    """Two-player case: correlated adversary = one mixed opponent; compare
    with a dense grid over the opponent's mixtures."""
    game = quitting_2p()
    lam = 1e-2
    for i in range(2):
        res = minmax(game, i, lam)
        j = 1 - i
        best_cap = np.inf
        for p in np.linspace(0.0, 1.0, 4001):
            adv = {(0,): 1.0 - p, (1,): p}
            v = best_response_vs_correlated(game, i, adv, lam)
            best_cap = min(best_cap, v)
        assert res.value == pytest.approx(best_cap, abs=1e-4)
        # the reported adversary actually holds player i near the value
        held = best_response_vs_correlated(game, i, res.adversary, lam)
        assert held <= res.value + 1e-6


def test_minmax_guarantee_lower_bound():
    # player 0 can always quit: the min-max value is at least the worst
    # payoff of quitting (0.10 against opponent's quit, 0.20 against continue)
    game = quitting_2p()
    res = minmax(game, 0, 1e-3)
    assert res.value >= 0.10 - 1e-9


def test_punishment_profile_equals_minmax():
    game = lshaped_ql()
    a = punishment_profile(game, 0, 1e-4)
    b = minmax(game, 0, 1e-4)
    assert a.value == pytest.approx(b.value)


def test_best_response_vs_correlated_enumeration():
    game = lshaped_ql()
    lam = 1e-3
    adv = {(0,): 0.25, (1,): 0.5, (2,): 0.25}
    got = best_response_vs_correlated(game, 0, adv, lam)
    manual = -np.inf
    for a0 in range(3):
        dist = {(a0, rest[0]): p for rest, p in adv.items()}
        manual = max(manual, correlated_discounted_payoff(game, dist, lam)[0])
    assert got == pytest.approx(manual)


def test_solver_on_random_games():
    for seed in (0, 1, 2):
        game = random_game(seed, n_players=2, max_actions=2)
        eq = stationary_discounted_equilibrium(game, 1e-2, tol=1e-7, seed=0)
        assert equilibrium_residual(game, eq.profile, 1e-2) <= 1e-7
