"""Certification: exact strategy evaluation, best-deviation search over the
declared deviation classes, lambda/T-grid ε-equilibrium reports, seeded Monte
Carlo simulation, and the min-max robustness check for the delta families.

Deviation classes for history-dependent strategies (declared scope):
  (i)   any single-stage action deviation at any phase position,
  (ii)  any persistent pure-action deviation (punished from the end of the
        phase/window in which it becomes statistically detectable),
  (iii) stationary frequency shifts below the monitoring tolerance (never
        punished).
Stationary strategies admit exact best deviations (a best response in a
single-non-absorbing-state discounted problem is a pure stationary action).
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .game_core import AbsorbingGame, GameError
from .payoff_engine import (
    MixedProfile,
    absorption_summary,
    discounted_payoff,
)
from .equilibrium_solver import best_response_vs_correlated, minmax
from .strategies import (
    AlmostStationaryProfile,
    MonitorSpec,
    Phase,
    PhasePlan,
    Strategy,
    SunspotStrategy,
)

# ---------------------------------------------------------------------------
# stage statistics


@dataclass(frozen=True)
class StageStats:
    """One stage of i.i.d. play: absorption hazard, conditional absorbed
    payoff, and expected stage payoff."""

    hazard: float
    rbar: np.ndarray
    ubar: np.ndarray


def _stage_stats(game: AbsorbingGame, x: MixedProfile) -> StageStats:
    s = absorption_summary(game, x)
    rbar = s.mean_absorbed_payoff / s.total if s.total > 0 else np.zeros(game.n_players)
    return StageStats(s.total, rbar, s.mean_stage_payoff)


def _phase_stats(game: AbsorbingGame, phase: Phase, override=None) -> StageStats:
    """Stage statistics of a phase; ``override=(player, dist)`` replaces one
    player's stage behavior (deviations)."""
    prof = phase.stage_profile()
    if override is not None:
        i, dist = override
        prof = prof.replace_player(i, dist)
    return _stage_stats(game, prof)


def _geom_block(stats: StageStats, lam: float, M: int):
    """Discounted value of M stages with constant hazard, as (g, h): the
    value given continuation V is g + h * V."""
    a = stats.hazard
    d = (1.0 - lam) * (1.0 - a)
    per = lam * stats.ubar + (1.0 - lam) * a * stats.rbar
    if d == 1.0:  # pragma: no cover - lam > 0 keeps d < 1
        g = per * M
    else:
        g = per * (1.0 - d**M) / (1.0 - d)
    return g, d**M


# ---------------------------------------------------------------------------
# exact discounted evaluation


def plan_value(game: AbsorbingGame, plan: PhasePlan, lam: float) -> np.ndarray:
    """Fixed point of the per-period evaluation: V = sum_k w_k (g_k + h_k V)."""
    g_sum = np.zeros(game.n_players)
    h_sum = 0.0
    for ph in plan.phases:
        stats = _phase_stats(game, ph)
        g, h = _geom_block(stats, lam, ph.duration)
        g_sum += ph.weight * g
        h_sum += ph.weight * h
    return g_sum / (1.0 - h_sum)


def eval_strategy(game: AbsorbingGame, strategy: Strategy, lam: float) -> np.ndarray:
    """On-path discounted payoff vector (monitoring never triggers on path)."""
    if isinstance(strategy, MixedProfile):
        return discounted_payoff(game, strategy, lam)
    if isinstance(strategy, AlmostStationaryProfile):
        return discounted_payoff(game, strategy.base, lam)
    if isinstance(strategy, SunspotStrategy):
        return plan_value(game, strategy.plan, lam)
    raise GameError(f"malformed strategy: {type(strategy).__name__}")


# ---------------------------------------------------------------------------
# deviation search (discounted)


def _pure_dist(n: int, a: int) -> np.ndarray:
    v = np.zeros(n)
    v[a] = 1.0
    return v


def _monitor_tolerance(strategy, player: int) -> Optional[float]:
    tols = [m.tolerance for m in strategy.monitoring if m.player == player]
    return min(tols) if tols else None


def _detection_window(strategy, player: int) -> Optional[int]:
    wins = [m.window for m in strategy.monitoring if m.player == player]
    return min(wins) if wins else None


def _punished_value(game, strategy, player: int, lam: float) -> float:
    """Best the deviator can still get once grim punishment has started."""
    spec = strategy.punishments.get(player)
    if spec is None:
        # no punishment installed: continuation is unconstrained; use the
        # payoff ceiling as a sound bound
        return float(max(game.payoff[a][player] for a in game.profiles()))
    return best_response_vs_correlated(game, player, spec.adversary, lam)


def _shift_candidates(base: np.ndarray, tol: Optional[float]):
    """Vertex candidates of the tolerance box around a marginal (class iii)."""
    n = len(base)
    out = []
    if tol is None:
        return out
    for b in range(n):
        for c in range(n):
            if b == c:
                continue
            amount = min(tol, 1.0 - base[b], base[c])
            if amount <= 0:
                continue
            y = base.copy()
            y[b] += amount
            y[c] -= amount
            out.append(y)
    return out


def _stationary_deviation_value(game, base: MixedProfile, player: int,
                                dist: np.ndarray, lam: float) -> float:
    return discounted_payoff(game, base.replace_player(player, dist), lam)[player]


def _best_deviation_stationary(game, strategy, player: int, lam: float):
    """Stationary base (with or without monitoring/punishment)."""
    base = strategy if isinstance(strategy, MixedProfile) else strategy.base
    monitored = not isinstance(strategy, MixedProfile) and any(
        m.player == player for m in strategy.monitoring
    )
    on_path = discounted_payoff(game, base, lam)[player]
    n_act = len(game.actions[player])
    best = on_path
    desc = ("conform",)

    if not monitored:
        # best response is a pure stationary action, exactly
        for b in range(n_act):
            v = _stationary_deviation_value(game, base, player, _pure_dist(n_act, b), lam)
            if v > best:
                best, desc = v, ("stationary", player, b)
        return best, desc

    tol = _monitor_tolerance(strategy, player)
    window = _detection_window(strategy, player)
    v_pun = _punished_value(game, strategy, player, lam)
    marginal = base[player]

    # class (i): one-stage deviation, then back on path (below any frequency test)
    v_vec = discounted_payoff(game, base, lam)
    for b in range(n_act):
        stats = _stage_stats(game, base.replace_player(player, _pure_dist(n_act, b)))
        v = (lam * stats.ubar[player]
             + (1.0 - lam) * (stats.hazard * stats.rbar[player]
                              + (1.0 - stats.hazard) * v_vec[player]))
        if v > best:
            best, desc = v, ("single_stage", player, b)

    # class (ii): persistent pure deviation
    for b in range(n_act):
        y = _pure_dist(n_act, b)
        detectable = tol is not None and np.max(np.abs(y - marginal)) > tol
        stats = _stage_stats(game, base.replace_player(player, y))
        if detectable:
            g, h = _geom_block(stats, lam, window)
            v = g[player] + h * v_pun
            tag = "punished"
        else:
            v = _stationary_deviation_value(game, base, player, y, lam)
            tag = "unpunished"
        if v > best:
            best, desc = v, ("persistent", player, b, tag)

    # class (iii): frequency shifts below tolerance, never punished
    for y in _shift_candidates(np.array(marginal), tol):
        v = _stationary_deviation_value(game, base, player, y, lam)
        if v > best:
            best, desc = v, ("shift", player, [float(t) for t in y])
    return best, desc


def _plan_prescribed_marginal(phase: Phase, player: int) -> np.ndarray:
    return phase.stage_profile()[player]


def _plan_fixed_point(game, plan, lam, overrides):
    """Per-period fixed point with per-phase overrides for one player."""
    g_sum = np.zeros(game.n_players)
    h_sum = 0.0
    for ph, ov in zip(plan.phases, overrides):
        stats = _phase_stats(game, ph, ov)
        g, h = _geom_block(stats, lam, ph.duration)
        g_sum += ph.weight * g
        h_sum += ph.weight * h
    return g_sum / (1.0 - h_sum)


def _plan_one_period_then(game, plan, lam, overrides, continuation: float, player: int):
    """Deviation value when punishment starts after the current period."""
    total = 0.0
    for ph, ov in zip(plan.phases, overrides):
        stats = _phase_stats(game, ph, ov)
        g, h = _geom_block(stats, lam, ph.duration)
        total += ph.weight * (g[player] + h * continuation)
    return total


def _best_deviation_plan(game, strategy: SunspotStrategy, player: int, lam: float):
    plan = strategy.plan
    n_act = len(game.actions[player])
    V = plan_value(game, plan, lam)
    best = V[player]
    desc = ("conform",)
    tol = _monitor_tolerance(strategy, player)
    v_pun = _punished_value(game, strategy, player, lam)

    on_stats = [_phase_stats(game, ph) for ph in plan.phases]

    # class (i): single-stage deviation at the best phase position; the gain
    # bound is evaluated at both ends of each phase (the within-phase
    # continuation is monotone in the offset)
    for k, ph in enumerate(plan.phases):
        stats = on_stats[k]
        d = (1.0 - lam) * (1.0 - stats.hazard)
        for b in range(n_act):
            dev = _phase_stats(game, ph, (player, _pure_dist(n_act, b)))
            for offset in (0, ph.duration - 1):
                remaining = ph.duration - offset - 1
                g, h = _geom_block(stats, lam, remaining) if remaining else (np.zeros(game.n_players), 1.0)
                v_next = g[player] + h * V[player]
                delta = (lam * (dev.ubar[player] - stats.ubar[player])
                         + (1.0 - lam) * ((dev.hazard * dev.rbar[player]
                                           + (1.0 - dev.hazard) * v_next)
                                          - (stats.hazard * stats.rbar[player]
                                             + (1.0 - stats.hazard) * v_next)))
                v = V[player] + max(0.0, delta)
                if v > best:
                    best, desc = v, ("single_stage", player, b, k, offset)

    # class (ii): persistent pure deviation across all phases
    for b in range(n_act):
        y = _pure_dist(n_act, b)
        overrides = [(player, y)] * len(plan.phases)
        detectable = tol is not None and any(
            np.max(np.abs(y - _plan_prescribed_marginal(ph, player))) > tol
            for ph in plan.phases
        )
        if detectable:
            v = _plan_one_period_then(game, plan, lam, overrides, v_pun, player)
            tag = "punished"
        else:
            v = _plan_fixed_point(game, plan, lam, overrides)[player]
            tag = "unpunished"
        if v > best:
            best, desc = v, ("persistent", player, b, tag)

    # class (iii): per-phase marginal shifted within tolerance, never punished
    shift_targets = list(range(n_act))
    for b in shift_targets:
        overrides = []
        changed = False
        for ph in plan.phases:
            marg = np.array(_plan_prescribed_marginal(ph, player))
            cands = _shift_candidates(marg, tol)
            pick = None
            for y in cands:
                if y[b] > marg[b]:
                    pick = y
                    break
            if pick is None:
                overrides.append(None)
            else:
                overrides.append((player, pick))
                changed = True
        if not changed:
            continue
        v = _plan_fixed_point(game, plan, lam, overrides)[player]
        if v > best:
            best, desc = v, ("shift", player, b)

    # the quitter silently dropping (or keeping) the quit mass is the classic
    # plan deviation; cover it explicitly as an unpunished stationary override
    overrides = [(player, np.array(ph.base[player])) for ph in plan.phases]
    v = _plan_fixed_point(game, plan, lam, overrides)[player]
    if v > best:
        best, desc = v, ("no_quit", player)

    return best, desc


def best_deviation(game: AbsorbingGame, strategy: Strategy, player: int, lam: float):
    """Best value player can secure within the declared deviation classes."""
    if isinstance(strategy, (MixedProfile, AlmostStationaryProfile)):
        return _best_deviation_stationary(game, strategy, player, lam)
    if isinstance(strategy, SunspotStrategy):
        return _best_deviation_plan(game, strategy, player, lam)
    raise GameError(f"malformed strategy: {type(strategy).__name__}")


# ---------------------------------------------------------------------------
# T-stage evaluation (finite-horizon recursion with geometric partial sums)


def _stationary_t_average(stats: StageStats, T: int) -> np.ndarray:
    """Exact T-stage average of an i.i.d.-stage absorbing process."""
    a = stats.hazard
    if a == 0.0:
        return stats.ubar.copy()
    G = (1.0 - (1.0 - a) ** T) / a
    return (stats.ubar * G + stats.rbar * (T - G)) / T


def _phase_partial(stats: StageStats, s: int, M_eff: int, T: int):
    """Total payoff (not averaged) of a cohort of mass 1 entering a phase at
    stage s+1 for M_eff stages, plus the surviving mass."""
    a = stats.hazard
    x = 1.0 - a
    if M_eff <= 0:
        return np.zeros_like(stats.ubar), 1.0
    if a == 0.0:
        flow = stats.ubar * M_eff
        return flow, 1.0
    G = (1.0 - x**M_eff) / a  # sum_{j<M_eff} x^j
    # sum_{j<M_eff} j x^j
    Sj = (x - (M_eff) * x**M_eff + (M_eff - 1) * x ** (M_eff + 1)) / (a * a)
    flow = stats.ubar * G
    B = T - s - 1
    tail = stats.rbar * a * (B * G - Sj)
    return flow + tail, x**M_eff


def _plan_t_average(game, plan: PhasePlan, T: int, overrides=None,
                    punish_after_first=False, punished_value=0.0, player=None):
    """T-stage average payoff of a phase plan by cohort recursion.

    ``overrides`` is a per-phase list as in the discounted case; with
    ``punish_after_first`` the mass surviving the first period is held at
    ``punished_value`` (per stage) for the remaining horizon.
    """
    n = game.n_players
    stats_list = [
        _phase_stats(game, ph, None if overrides is None else overrides[k])
        for k, ph in enumerate(plan.phases)
    ]
    total = np.zeros(n)
    starts = {0: 1.0}
    first = True
    while starts:
        s = min(starts)
        mass = starts.pop(s)
        if s >= T or mass < 1e-15:
            continue
        for k, ph in enumerate(plan.phases):
            m0 = mass * ph.weight
            M_eff = min(ph.duration, T - s)
            contrib, surv = _phase_partial(stats_list[k], s, M_eff, T)
            total += m0 * contrib
            s_next = s + ph.duration
            if s_next < T:
                if punish_after_first and first:
                    if player is not None:
                        pv = np.zeros(n)
                        pv[player] = punished_value
                    else:  # pragma: no cover
                        pv = np.full(n, punished_value)
                    total += m0 * surv * pv * (T - s_next)
                else:
                    starts[s_next] = starts.get(s_next, 0.0) + m0 * surv
        first = False
        if punish_after_first and not starts:
            break
    return total / T


def t_stage_value(game: AbsorbingGame, strategy: Strategy, T: int) -> np.ndarray:
    if isinstance(strategy, MixedProfile):
        return _stationary_t_average(_stage_stats(game, strategy), T)
    if isinstance(strategy, AlmostStationaryProfile):
        return _stationary_t_average(_stage_stats(game, strategy.base), T)
    if isinstance(strategy, SunspotStrategy):
        return _plan_t_average(game, strategy.plan, T)
    raise GameError(f"malformed strategy: {type(strategy).__name__}")


def _payoff_range(game: AbsorbingGame) -> float:
    lo = min(float(np.min(game.payoff[a])) for a in game.profiles())
    hi = max(float(np.max(game.payoff[a])) for a in game.profiles())
    return hi - lo


def _punished_t_value(game, strategy, player: int) -> float:
    spec = strategy.punishments.get(player)
    if spec is None:
        return float(max(game.payoff[a][player] for a in game.profiles()))
    return best_response_vs_correlated(game, player, spec.adversary, 1e-6)


def _t_stage_deviation_stationary(game, strategy, player: int, T: int):
    base = strategy if isinstance(strategy, MixedProfile) else strategy.base
    monitored = not isinstance(strategy, MixedProfile) and any(
        m.player == player for m in strategy.monitoring
    )
    n_act = len(game.actions[player])
    best = _stationary_t_average(_stage_stats(game, base), T)[player]
    desc = ("conform",)
    tol = _monitor_tolerance(strategy, player) if monitored else None
    window = _detection_window(strategy, player) if monitored else None
    v_pun = _punished_t_value(game, strategy, player) if monitored else None
    marginal = base[player]

    for b in range(n_act):
        y = _pure_dist(n_act, b)
        stats = _stage_stats(game, base.replace_player(player, y))
        detectable = monitored and tol is not None and np.max(np.abs(y - marginal)) > tol
        if detectable and window is not None and window < T:
            W = window
            head = _stationary_t_average(stats, W)[player] * W
            alive = (1.0 - stats.hazard) ** W
            # absorbed mass keeps its absorbing payoff; survivors are punished
            absorbed_tail = (1.0 - alive) * stats.rbar[player] * (T - W)
            # the T-average over W stages already counts only the head window;
            # redo the tail bookkeeping from the unaveraged pieces
            v = (head + absorbed_tail + alive * v_pun * (T - W)) / T
            tag = "punished"
        else:
            v = _stationary_t_average(stats, T)[player]
            tag = "unpunished"
        if v > best:
            best, desc = v, ("persistent", player, b, tag)

    if monitored:
        for y in _shift_candidates(np.array(marginal), tol):
            v = _stationary_t_average(
                _stage_stats(game, base.replace_player(player, y)), T
            )[player]
            if v > best:
                best, desc = v, ("shift", player, [float(t) for t in y])
    # single-stage deviations change a T-average by at most 2 * range / T
    slack = 2.0 * _payoff_range(game) / T
    return best + slack, desc


def _t_stage_deviation_plan(game, strategy: SunspotStrategy, player: int, T: int):
    plan = strategy.plan
    n_act = len(game.actions[player])
    best = _plan_t_average(game, plan, T)[player]
    desc = ("conform",)
    tol = _monitor_tolerance(strategy, player)
    v_pun = _punished_t_value(game, strategy, player)

    for b in range(n_act):
        y = _pure_dist(n_act, b)
        overrides = [(player, y)] * len(plan.phases)
        detectable = tol is not None and any(
            np.max(np.abs(y - _plan_prescribed_marginal(ph, player))) > tol
            for ph in plan.phases
        )
        v = _plan_t_average(
            game, plan, T, overrides,
            punish_after_first=detectable, punished_value=v_pun, player=player,
        )[player]
        if v > best:
            best, desc = v, ("persistent", player, b, "punished" if detectable else "unpunished")

    overrides = [(player, np.array(ph.base[player])) for ph in plan.phases]
    v = _plan_t_average(game, plan, T, overrides)[player]
    if v > best:
        best, desc = v, ("no_quit", player)

    slack = 2.0 * _payoff_range(game) / T
    return best + slack, desc


def t_stage_deviation(game: AbsorbingGame, strategy: Strategy, player: int, T: int):
    if isinstance(strategy, (MixedProfile, AlmostStationaryProfile)):
        return _t_stage_deviation_stationary(game, strategy, player, T)
    if isinstance(strategy, SunspotStrategy):
        return _t_stage_deviation_plan(game, strategy, player, T)
    raise GameError(f"malformed strategy: {type(strategy).__name__}")


# ---------------------------------------------------------------------------
# certification


@dataclass(frozen=True)
class CertificationReport:
    epsilon: float
    lam_rows: tuple  # (lam, player, conform, deviation, gain, description)
    t_rows: tuple  # (T, player, conform, deviation, gain, description)
    verdict: bool
    max_gain: float
    coverage: str
    note: str

    def to_json_obj(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "lambda_table": [
                {"lambda": l, "player": p, "conforming": c, "deviation": d,
                 "gain": g, "description": list(map(str, dd))}
                for (l, p, c, d, g, dd) in self.lam_rows
            ],
            "t_table": [
                {"T": t, "player": p, "conforming": c, "deviation": d,
                 "gain": g, "description": list(map(str, dd))}
                for (t, p, c, d, g, dd) in self.t_rows
            ],
            "verdict": "pass" if self.verdict else "fail",
            "max_gain": self.max_gain,
            "deviation_classes": self.coverage,
            "note": self.note,
        }


DEFAULT_LAM_GRID = (1e-2, 1e-3, 1e-4)
DEFAULT_T_GRID = (10**3, 10**4, 10**5)

_COVERAGE = (
    "single-stage deviations at any position; persistent pure-action "
    "deviations (punished once statistically detectable); stationary "
    "frequency shifts below the monitoring tolerance"
)


def certify_uniform(
    game: AbsorbingGame,
    strategy: Strategy,
    epsilon: float,
    lam_grid=DEFAULT_LAM_GRID,
    t_grid=DEFAULT_T_GRID,
) -> CertificationReport:
    """Grid-based ε-equilibrium certification (not a proof for all discounts)."""
    lam_rows = []
    t_rows = []
    max_gain = -np.inf
    for lam in lam_grid:
        conform = eval_strategy(game, strategy, lam)
        for i in range(game.n_players):
            dev, dd = best_deviation(game, strategy, i, lam)
            gain = dev - conform[i]
            max_gain = max(max_gain, gain)
            lam_rows.append((float(lam), i, float(conform[i]), float(dev), float(gain), dd))
    for T in t_grid:
        conform = t_stage_value(game, strategy, int(T))
        for i in range(game.n_players):
            dev, dd = t_stage_deviation(game, strategy, i, int(T))
            gain = dev - conform[i]
            max_gain = max(max_gain, gain)
            t_rows.append((int(T), i, float(conform[i]), float(dev), float(gain), dd))
    return CertificationReport(
        epsilon=float(epsilon),
        lam_rows=tuple(lam_rows),
        t_rows=tuple(t_rows),
        verdict=bool(max_gain <= epsilon),
        max_gain=float(max_gain),
        coverage=_COVERAGE,
        note="grid-based certification over the listed discounts and horizons",
    )


# ---------------------------------------------------------------------------
# Monte Carlo simulation


@dataclass(frozen=True)
class SimulationSummary:
    runs: int
    horizon: int
    seed: int
    lam: float
    mean_discounted: np.ndarray
    se_discounted: np.ndarray
    mean_undiscounted: np.ndarray
    se_undiscounted: np.ndarray
    absorbed_fraction: float
    absorption_histogram: dict  # stage -> count (power-of-two buckets)
    monitor_triggers: int

    def to_json_obj(self) -> dict:
        return {
            "runs": self.runs,
            "horizon": self.horizon,
            "seed": self.seed,
            "lambda": self.lam,
            "mean_discounted": [float(v) for v in self.mean_discounted],
            "se_discounted": [float(v) for v in self.se_discounted],
            "mean_undiscounted": [float(v) for v in self.mean_undiscounted],
            "se_undiscounted": [float(v) for v in self.se_undiscounted],
            "absorbed_fraction": self.absorbed_fraction,
            "absorption_histogram": {str(k): int(v) for k, v in sorted(self.absorption_histogram.items())},
            "monitor_triggers": self.monitor_triggers,
        }


def _stage_rng(seed: int, stage: int) -> np.random.Generator:
    """Fixed stream per stage: a Philox generator keyed by (seed, stage);
    row r of any array drawn from it belongs to run r."""
    key = np.array([seed & 0xFFFFFFFFFFFFFFFF, stage], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def monte_carlo(
    game: AbsorbingGame,
    strategy: Strategy,
    runs: int,
    horizon: int,
    seed: int,
    lam: float = 1e-2,
) -> SimulationSummary:
    """Seeded simulation; reproducible bit-exactly from (seed, runs, horizon)."""
    if runs < 1 or horizon < 1:
        raise GameError("runs and horizon must be positive")
    n = game.n_players
    shape = game.n_actions

    payoff_table = np.zeros(shape + (n,))
    absorb_table = np.zeros(shape)
    for a in game.profiles():
        payoff_table[a] = game.payoff[a]
        absorb_table[a] = game.absorb_prob[a]

    if isinstance(strategy, SunspotStrategy):
        phases = strategy.plan.phases
        weights = np.array([ph.weight for ph in phases])
        cumw = np.cumsum(weights)
        phase_dists = [
            [np.cumsum(ph.stage_profile()[i]) for i in range(n)] for ph in phases
        ]
        durations = np.array([ph.duration for ph in phases])
        monitoring = strategy.monitoring
    else:
        base = strategy if isinstance(strategy, MixedProfile) else strategy.base
        stationary_cdf = [np.cumsum(base[i]) for i in range(n)]
        monitoring = () if isinstance(strategy, MixedProfile) else strategy.monitoring

    alive = np.ones(runs, dtype=bool)
    absorbed_at = np.full(runs, -1, dtype=np.int64)
    absorbed_payoff = np.zeros((runs, n))
    disc_payoff = np.zeros((runs, n))
    phase_idx = np.zeros(runs, dtype=np.int64)
    phase_left = np.zeros(runs, dtype=np.int64)

    action_counts = {m.player: np.zeros((runs, len(game.actions[m.player])))
                     for m in monitoring}
    checkpoints = {}
    for m in monitoring:
        cp = m.window
        while cp <= horizon:
            checkpoints.setdefault(cp, []).append(m)
            cp *= 2
    snapshots = {}  # (checkpoint, player) -> counts copy at that stage
    triggers = 0

    disc_weight = 1.0  # lam * (1 - lam)^(t-1), running
    tail_factor = np.ones(runs)  # (1 - lam)^(t-1) for absorbed tail bookkeeping

    for stage in range(1, horizon + 1):
        if not alive.any():
            break
        gen = _stage_rng(seed, stage)
        u = gen.uniform(size=(runs, n + 2))
        idx = np.nonzero(alive)[0]

        if isinstance(strategy, SunspotStrategy):
            need = idx[phase_left[idx] == 0]
            if need.size:
                phase_idx[need] = np.searchsorted(cumw, u[need, 0], side="right").clip(0, len(phases) - 1)
                phase_left[need] = durations[phase_idx[need]]
            acts = np.zeros((runs, n), dtype=np.int64)
            for k in range(len(phases)):
                sel = idx[phase_idx[idx] == k]
                if not sel.size:
                    continue
                for i in range(n):
                    acts[sel, i] = np.searchsorted(phase_dists[k][i], u[sel, 1 + i], side="right")
            phase_left[idx] -= 1
        else:
            acts = np.zeros((runs, n), dtype=np.int64)
            for i in range(n):
                acts[idx, i] = np.searchsorted(stationary_cdf[i], u[idx, 1 + i], side="right")

        prof_idx = tuple(acts[idx, i].clip(0, shape[i] - 1) for i in range(n))
        stage_u = payoff_table[prof_idx]
        stage_p = absorb_table[prof_idx]

        w = lam * (1.0 - lam) ** (stage - 1)
        disc_payoff[idx] += w * stage_u
        for player, counts in action_counts.items():
            counts[idx, acts[idx, player].clip(0, len(game.actions[player]) - 1)] += 1.0
        if stage in checkpoints:
            for m in checkpoints[stage]:
                snapshots[(stage, m.player)] = action_counts[m.player].copy()

        hit = u[idx, n + 1] < stage_p
        hit_idx = idx[hit]
        if hit_idx.size:
            absorbed_at[hit_idx] = stage
            absorbed_payoff[hit_idx] = stage_u[hit]
            # frozen payoff from stage + 1 on: remaining discounted mass
            disc_payoff[hit_idx] += ((1.0 - lam) ** stage) * stage_u[hit]
            alive[hit_idx] = False

    # monitoring triggers: power-of-two checkpoints over each run's history;
    # only runs still alive at the checkpoint are tested
    for m in monitoring:
        cp = m.window
        while cp <= horizon:
            counts = snapshots.get((cp, m.player))
            if counts is None:
                break  # simulation ended before this checkpoint
            tested = (absorbed_at < 0) | (absorbed_at > cp)
            freq = counts / cp
            dev = np.max(np.abs(freq - m.marginal[None, :]), axis=1)
            triggers += int(np.sum((dev > m.tolerance) & tested))
            cp *= 2

    absorbed = absorbed_at > 0
    undisc = np.where(absorbed[:, None], absorbed_payoff, 0.0)
    hist = {}
    for t in absorbed_at[absorbed]:
        bucket = 1 << int(t).bit_length() - 1
        hist[bucket] = hist.get(bucket, 0) + 1
    return SimulationSummary(
        runs=runs,
        horizon=horizon,
        seed=seed,
        lam=lam,
        mean_discounted=disc_payoff.mean(axis=0),
        se_discounted=disc_payoff.std(axis=0, ddof=1) / np.sqrt(runs) if runs > 1 else np.zeros(n),
        mean_undiscounted=undisc.mean(axis=0),
        se_undiscounted=undisc.std(axis=0, ddof=1) / np.sqrt(runs) if runs > 1 else np.zeros(n),
        absorbed_fraction=float(absorbed.mean()),
        absorption_histogram=hist,
        monitor_triggers=triggers,
    )


# ---------------------------------------------------------------------------
# min-max robustness across the delta family


@dataclass(frozen=True)
class MinMaxRobustnessReport:
    epsilon: float
    lam: float
    base_values: np.ndarray
    grid_values: dict  # (d1, d2) -> per-player values
    delta_prime: float  # largest grid level below which the bound holds

    def to_json_obj(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "lambda": self.lam,
            "base_values": [float(v) for v in self.base_values],
            "grid": [
                {"delta1": d1, "delta2": d2, "values": [float(v) for v in vals]}
                for (d1, d2), vals in sorted(self.grid_values.items())
            ],
            "delta_prime": self.delta_prime,
        }


def check_minmax_robustness(
    game: AbsorbingGame,
    epsilon: float,
    delta_grid,
    lam: float,
) -> MinMaxRobustnessReport:
    """Min-max stability of the delta construction: find the largest grid
    level delta' with bar-v_i(delta game) >= bar-v_i(game) - epsilon for all
    deltas below delta' and all players."""
    from .auxiliary_games import build_delta_game

    base_values = np.array([minmax(game, i, lam).value for i in range(game.n_players)])
    levels = sorted(set(float(d) for d in delta_grid))
    grid_values = {}
    for d1 in levels:
        for d2 in levels:
            gd = build_delta_game(game, d1, d2)
            grid_values[(d1, d2)] = np.array(
                [minmax(gd, i, lam).value for i in range(game.n_players)]
            )
    delta_prime = 0.0
    for level in levels + [max(levels) + 1e-12]:
        ok = all(
            np.all(vals >= base_values - epsilon)
            for (d1, d2), vals in grid_values.items()
            if d1 < level and d2 < level
        )
        if ok:
            delta_prime = level
        else:
            break
    return MinMaxRobustnessReport(epsilon, lam, base_values, grid_values, delta_prime)
