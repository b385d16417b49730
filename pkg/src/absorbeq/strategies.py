"""Strategy objects: phase plans, sunspot strategies, almost-stationary profiles.

A phase plan is a public-signal-driven automaton: at the start of each period
the device draws one phase (a designated quitter, a quitting action, a
per-stage quit probability alpha and a duration M); everyone else plays the
phase's continue profile.  Monitoring specs are empirical-frequency tests
with Hoeffding windows and power-of-two checkpoints; punishment after a
trigger is permanent (grim) at the punished player's min-max profile.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .game_core import AbsorbingGame, GameError
from .payoff_engine import MixedProfile


@dataclass(frozen=True)
class MonitorSpec:
    player: int
    marginal: np.ndarray  # tested stage marginal of that player's actions
    tolerance: float
    window: int

    def to_json_obj(self) -> dict:
        return {
            "player": self.player,
            "marginal": [float(x) for x in self.marginal],
            "tolerance": float(self.tolerance),
            "window": int(self.window),
        }

    @staticmethod
    def from_json_obj(d: dict) -> "MonitorSpec":
        return MonitorSpec(
            int(d["player"]), np.array(d["marginal"], dtype=float),
            float(d["tolerance"]), int(d["window"]),
        )


@dataclass(frozen=True)
class PunishmentSpec:
    player: int
    value: float  # min-max level the profile holds the player to
    adversary: dict  # joint opponent profile (tuple without the player) -> prob

    def to_json_obj(self) -> dict:
        return {
            "player": self.player,
            "value": float(self.value),
            "adversary": [[list(k), float(v)] for k, v in sorted(self.adversary.items())],
        }

    @staticmethod
    def from_json_obj(d: dict) -> "PunishmentSpec":
        adv = {tuple(int(i) for i in k): float(v) for k, v in d["adversary"]}
        return PunishmentSpec(int(d["player"]), float(d["value"]), adv)


@dataclass(frozen=True)
class Phase:
    quitter: int
    quit_action: int
    alpha: float  # per-stage quit probability, in (0, epsilon)
    duration: int  # M stages
    base: MixedProfile  # continue behavior of every player
    weight: float  # device probability of drawing this phase each period

    def stage_profile(self) -> MixedProfile:
        """Realized per-stage mixed profile (quitter's alpha-mix included)."""
        dists = list(self.base.distributions)
        q = np.array(dists[self.quitter], dtype=float) * (1.0 - self.alpha)
        q[self.quit_action] += self.alpha
        dists[self.quitter] = q
        return MixedProfile(dists)

    def to_json_obj(self) -> dict:
        return {
            "quitter": self.quitter,
            "quit_action": self.quit_action,
            "alpha": float(self.alpha),
            "duration": int(self.duration),
            "base": self.base.to_json_obj(),
            "weight": float(self.weight),
        }

    @staticmethod
    def from_json_obj(d: dict) -> "Phase":
        return Phase(
            int(d["quitter"]), int(d["quit_action"]), float(d["alpha"]),
            int(d["duration"]), MixedProfile(d["base"]), float(d["weight"]),
        )


@dataclass(frozen=True)
class PhasePlan:
    phases: tuple  # of Phase; weights sum to 1

    def __post_init__(self):
        w = sum(ph.weight for ph in self.phases)
        if abs(w - 1.0) > 1e-9:
            raise GameError("phase weights must sum to 1")

    def select(self, signal: float) -> Phase:
        """Deterministic signal-to-phase rule: cumulative weight inversion."""
        acc = 0.0
        for ph in self.phases:
            acc += ph.weight
            if signal < acc:
                return ph
        return self.phases[-1]

    def to_json_obj(self) -> dict:
        return {"phases": [ph.to_json_obj() for ph in self.phases]}

    @staticmethod
    def from_json_obj(d: dict) -> "PhasePlan":
        return PhasePlan(tuple(Phase.from_json_obj(p) for p in d["phases"]))


@dataclass(frozen=True)
class SunspotStrategy:
    plan: PhasePlan
    monitoring: tuple  # of MonitorSpec
    punishments: dict  # player -> PunishmentSpec
    epsilon: float

    def to_json_obj(self) -> dict:
        return {
            "type": "sunspot",
            "epsilon": float(self.epsilon),
            "plan": self.plan.to_json_obj(),
            "monitoring": [m.to_json_obj() for m in self.monitoring],
            "punishments": [p.to_json_obj() for _, p in sorted(self.punishments.items())],
        }


@dataclass(frozen=True)
class AlmostStationaryProfile:
    base: MixedProfile
    monitoring: tuple
    punishments: dict
    epsilon: float

    def to_json_obj(self) -> dict:
        return {
            "type": "almost_stationary",
            "epsilon": float(self.epsilon),
            "base": self.base.to_json_obj(),
            "monitoring": [m.to_json_obj() for m in self.monitoring],
            "punishments": [p.to_json_obj() for _, p in sorted(self.punishments.items())],
        }


Strategy = Union[MixedProfile, AlmostStationaryProfile, SunspotStrategy]


def strategy_to_json(strategy: Strategy) -> dict:
    if isinstance(strategy, MixedProfile):
        return {"type": "stationary", "base": strategy.to_json_obj()}
    return strategy.to_json_obj()


def strategy_from_json(d: dict) -> Strategy:
    kind = d.get("type")
    if kind == "stationary":
        return MixedProfile(d["base"])
    monitoring = tuple(MonitorSpec.from_json_obj(m) for m in d.get("monitoring", []))
    punishments = {
        p["player"]: PunishmentSpec.from_json_obj(p) for p in d.get("punishments", [])
    }
    eps = float(d.get("epsilon", 0.0))
    if kind == "almost_stationary":
        return AlmostStationaryProfile(MixedProfile(d["base"]), monitoring, punishments, eps)
    if kind == "sunspot":
        return SunspotStrategy(PhasePlan.from_json_obj(d["plan"]), monitoring, punishments, eps)
    raise GameError(f"unknown strategy type: {kind}")


def load_strategy(path: str) -> Strategy:
    with open(path, "r", encoding="utf-8") as fh:
        return strategy_from_json(json.load(fh))


def save_strategy(strategy: Strategy, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(strategy_to_json(strategy), fh, indent=2, sort_keys=True)
        fh.write("\n")


def monitoring_window(tolerance: float) -> int:
    """Smallest window T whose union bound over power-of-two checkpoints
    keeps the total false-trigger probability below the tolerance.

    Hoeffding at checkpoint 2^j T gives 2 exp(-2 (2^j T) tol^2); the
    geometric-like series is summed directly.
    """
    if tolerance <= 0:
        raise GameError("tolerance must be positive")
    if tolerance >= 1.0:
        return 1

    def total(T: int) -> float:
        s = 0.0
        for j in range(64):
            term = 2.0 * math.exp(-2.0 * (2**j) * T * tolerance * tolerance)
            s += term
            if term < 1e-18:
                break
        return s

    T = 1
    while total(T) > tolerance:
        T *= 2
        if T > 2**62:  # pragma: no cover
            raise GameError("monitoring window overflow")
    # binary search down to the smallest sufficient T
    lo, hi = T // 2, T
    while lo + 1 < hi:
        mid = (lo + hi) // 2
        if total(mid) <= tolerance:
            hi = mid
        else:
            lo = mid
    return hi


def attach_monitoring(
    tested_player: int, tested_marginal, tolerance: float
) -> MonitorSpec:
    """Monitoring spec with the Hoeffding window for the given tolerance."""
    marginal = np.asarray(tested_marginal, dtype=float)
    return MonitorSpec(tested_player, marginal, tolerance, monitoring_window(tolerance))
