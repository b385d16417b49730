"""Exact payoff and absorption computations for stationary profiles.

All quantities are closed-form: the per-profile absorption mass chi(a, x) =
x(a) * P(a), the per-stage absorption probability P(x), the undiscounted
payoff gamma(x), the lambda-discounted payoff gamma^lambda(x), the T-stage
average payoff, and the phase absorption probability rho.  The stage-payoff
convention: at every stage each player receives u(a^t) for the realized
profile a^t; once a profile absorbs, a^t stays fixed forever.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .game_core import AbsorbingGame, GameError, Profile, _is_recursive

SIMPLEX_TOL = 1e-12


@dataclass(frozen=True)
class MixedProfile:
    """One probability distribution over actions per player (stationary strategy)."""

    distributions: tuple  # per-player np.ndarray

    def __init__(self, distributions: Sequence):
        dists = []
        for x in distributions:
            v = np.asarray(x, dtype=float)
            if v.ndim != 1:
                raise GameError("mixed action must be a vector")
            if np.any(v < -SIMPLEX_TOL):
                raise GameError(f"negative probability in mixed action: {v}")
            s = float(v.sum())
            if abs(s - 1.0) > 1e-6:
                raise GameError(f"mixed action does not sum to 1: {v}")
            v = np.clip(v, 0.0, None)
            v = v / v.sum()
            dists.append(v)
        object.__setattr__(self, "distributions", tuple(dists))

    def __getitem__(self, i: int) -> np.ndarray:
        return self.distributions[i]

    def __len__(self) -> int:
        return len(self.distributions)

    def profile_prob(self, a: Profile) -> float:
        p = 1.0
        for i, ai in enumerate(a):
            p *= self.distributions[i][ai]
        return p

    def replace_player(self, i: int, dist) -> "MixedProfile":
        dists = list(self.distributions)
        dists[i] = np.asarray(dist, dtype=float)
        return MixedProfile(dists)

    def max_abs_diff(self, other: "MixedProfile") -> float:
        return max(
            float(np.max(np.abs(a - b)))
            for a, b in zip(self.distributions, other.distributions)
        )

    def to_json_obj(self) -> list:
        return [[float(p) for p in d] for d in self.distributions]

    @staticmethod
    def point_mass(game: AbsorbingGame, profile: Profile) -> "MixedProfile":
        dists = []
        for i, ai in enumerate(profile):
            v = np.zeros(len(game.actions[i]))
            v[ai] = 1.0
            dists.append(v)
        return MixedProfile(dists)

    @staticmethod
    def uniform(game: AbsorbingGame) -> "MixedProfile":
        return MixedProfile(
            [np.full(len(names), 1.0 / len(names)) for names in game.actions]
        )


@dataclass(frozen=True)
class AbsorptionSummary:
    chi: dict  # Profile -> x(a) * P(a)
    total: float  # P(x)
    conditional: dict  # Profile -> chi / P(x), empty when P(x) == 0
    mean_stage_payoff: np.ndarray  # ubar(x) = sum_a x(a) u(a)
    mean_absorbed_payoff: np.ndarray  # sum_a chi(a, x) u(a)


def absorption_summary(game: AbsorbingGame, x: MixedProfile) -> AbsorptionSummary:
    chi = {}
    total = 0.0
    ubar = np.zeros(game.n_players)
    absorbed = np.zeros(game.n_players)
    for a in game.profiles():
        xa = x.profile_prob(a)
        if xa == 0.0:
            continue
        c = xa * game.absorb_prob[a]
        if c > 0.0:
            chi[a] = c
            total += c
            absorbed += c * game.payoff[a]
        ubar += xa * game.payoff[a]
    conditional = {a: c / total for a, c in chi.items()} if total > 0.0 else {}
    return AbsorptionSummary(chi, total, conditional, ubar, absorbed)


def undiscounted_payoff(game: AbsorbingGame, x: MixedProfile) -> np.ndarray:
    """gamma(x): expected absorbing payoff conditional on absorption.

    When x never absorbs the limit of stage averages is the zero vector for
    recursive games and undefined otherwise.
    """
    s = absorption_summary(game, x)
    if s.total > 0.0:
        return s.mean_absorbed_payoff / s.total
    if _is_recursive(game):
        return np.zeros(game.n_players)
    raise GameError("undiscounted payoff undefined: non-absorbing profile in a non-recursive game")


def discounted_payoff(game: AbsorbingGame, x: MixedProfile, lam: float) -> np.ndarray:
    """gamma^lambda(x) in closed form for a stationary profile."""
    if not 0.0 < lam <= 1.0:
        raise GameError(f"discount out of range: {lam}")
    s = absorption_summary(game, x)
    num = lam * s.mean_stage_payoff + (1.0 - lam) * s.mean_absorbed_payoff
    den = lam + (1.0 - lam) * s.total
    return num / den


def t_stage_payoff(game: AbsorbingGame, x: MixedProfile, T: int) -> np.ndarray:
    """(1/T) E[sum of the first T stage payoffs], by forward recursion.

    State: probability of still being alive plus the accumulated absorbed
    payoff rate.  An absorption at stage t contributes its payoff at stage t
    (the realized profile's payoff) and at every later stage.
    """
    if T < 1:
        raise GameError("T must be a positive integer")
    s = absorption_summary(game, x)
    total = np.zeros(game.n_players)
    alive = 1.0
    absorbed_rate = np.zeros(game.n_players)
    for _ in range(T):
        total += alive * s.mean_stage_payoff + absorbed_rate
        absorbed_rate += alive * s.mean_absorbed_payoff
        alive *= 1.0 - s.total
    return total / T


def correlated_discounted_payoff(
    game: AbsorbingGame, dist: dict, lam: float
) -> np.ndarray:
    """Discounted payoff when the stage profile is drawn i.i.d. from ``dist``.

    ``dist`` maps full action profiles to probabilities (a correlated
    stationary strategy, e.g. a public-device punishment profile).
    """
    if not 0.0 < lam <= 1.0:
        raise GameError(f"discount out of range: {lam}")
    ubar = np.zeros(game.n_players)
    absorbed = np.zeros(game.n_players)
    total = 0.0
    for a, pa in dist.items():
        if pa == 0.0:
            continue
        ubar += pa * game.payoff[a]
        c = pa * game.absorb_prob[a]
        total += c
        absorbed += c * game.payoff[a]
    num = lam * ubar + (1.0 - lam) * absorbed
    den = lam + (1.0 - lam) * total
    return num / den


def rho(p_abs: float, alpha: float, M: int) -> float:
    """Probability that a phase of M stages absorbs, with per-stage quit
    probability alpha against absorption probability p_abs."""
    if not (0.0 <= p_abs <= 1.0 and 0.0 <= alpha <= 1.0):
        raise GameError("rho arguments out of range")
    if M < 1:
        raise GameError("M must be a positive integer")
    return 1.0 - (1.0 - alpha * p_abs) ** M
