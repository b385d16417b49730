"""Equilibrium synthesis: sunspot phase plans and almost-stationary profiles.

Every synthesizer is search-plus-certify: a construction is only returned
after verifier.certify_uniform passes at the requested epsilon, and failures
raise SynthesisError with per-route diagnostics.

Routes:
  - general quitting: Q-matrix branch builds a cyclic phase plan from a fixed
    point of the complementarity targets (quitter indifference w_k = R_kk);
    the non-Q branch installs witness payoffs, follows the vanishing-discount
    limit, and returns an absorbing stationary profile with punishments.
  - spotted: tries each non-absorbing profile's quitting auxiliary (plan
    re-interpreted in the original game), else the all-witness stationary
    route.
  - L-shaped QL: plan in a delta game, then phases whose designated quit is a
    corner continue action are realized with the companion mixture and a
    duration/quit-rate re-match of the phase absorption probability.
  - L-shaped NQL: stationary candidates plus homotopy path following with
    absorbing-point and small-absorption detection windows.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .game_core import AbsorbingGame, GameError, LShapedLabeling, classify, derive_action_partition
from .payoff_engine import MixedProfile, absorption_summary, rho, undiscounted_payoff
from .lcp_solver import LcpProblem, find_witness, is_q_matrix, solve_lcp
from .equilibrium_solver import (
    SolverError,
    punishment_profile,
    stationary_discounted_equilibrium,
    vanishing_discount_limit,
)
from .auxiliary_games import (
    BestResponseMatrix,
    best_response_matrix_set,
    build_delta_game,
    build_homotopy_game,
    build_spotted_aux,
    build_witness_game,
    classify_ql_nql,
)
from .strategies import (
    AlmostStationaryProfile,
    MonitorSpec,
    Phase,
    PhasePlan,
    PunishmentSpec,
    SunspotStrategy,
    attach_monitoring,
    monitoring_window,
)
from .verifier import CertificationReport, certify_uniform

PUNISH_LAM = 1e-4
MONITOR_TOL = 0.25


class SynthesisError(RuntimeError):
    def __init__(self, message: str, diagnostics=()):
        super().__init__(message)
        self.diagnostics = list(diagnostics)


@dataclass(frozen=True)
class SynthesisResult:
    strategy: object  # SunspotStrategy or AlmostStationaryProfile
    report: CertificationReport
    route: str
    details: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# shared pieces


def _punishments(game: AbsorbingGame) -> dict:
    out = {}
    for i in range(game.n_players):
        mm = punishment_profile(game, i, PUNISH_LAM)
        out[i] = PunishmentSpec(i, mm.value, mm.adversary)
    return out


def _profile_monitors(game: AbsorbingGame, marginals) -> tuple:
    return tuple(
        attach_monitoring(i, marginals[i], MONITOR_TOL) for i in range(game.n_players)
    )


def _plan_monitors(game: AbsorbingGame, plan: PhasePlan) -> tuple:
    """One loose test per player against the duration-weighted stage marginal."""
    weights = np.array([ph.weight * ph.duration for ph in plan.phases])
    weights = weights / weights.sum()
    marginals = []
    for i in range(game.n_players):
        avg = np.zeros(len(game.actions[i]))
        for wk, ph in zip(weights, plan.phases):
            avg += wk * ph.stage_profile()[i]
        marginals.append(avg)
    return _profile_monitors(game, marginals)


def _almost_stationary(game: AbsorbingGame, x: MixedProfile, epsilon: float) -> AlmostStationaryProfile:
    monitors = _profile_monitors(game, [x[i] for i in range(game.n_players)])
    return AlmostStationaryProfile(x, monitors, _punishments(game), epsilon)


def _quit_hazard(game: AbsorbingGame, base: MixedProfile, player: int, action: int) -> float:
    """Per-stage absorption probability when the player quits surely against base."""
    pure = np.zeros(len(game.actions[player]))
    pure[action] = 1.0
    return absorption_summary(game, base.replace_player(player, pure)).total


def _lcp_fixed_point(R: np.ndarray, seeds, tol: float = 1e-8, max_iter: int = 200):
    """Iterate the complementarity targets q <- w to a fixed point.

    At a fixed point (1 - z0) w = R z, so the support probabilities
    z_k / (1 - z0) realize w as a convex combination of quit columns with
    quitter indifference on the support and the diagonal bound off it.
    """
    for seed in seeds:
        q = np.asarray(seed, dtype=float)
        for _ in range(max_iter):
            sol = solve_lcp(LcpProblem(R, q), diag_bound=True)
            if sol is None:
                break
            if np.max(np.abs(sol.w - q)) <= tol:
                if sol.z[0] <= 1.0 - 1e-9:
                    return sol
                break
            q = sol.w
    return None


def _build_plan(
    game: AbsorbingGame,
    base: MixedProfile,
    brm: BestResponseMatrix,
    epsilon: float,
) -> Optional[PhasePlan]:
    """Phase plan from an LCP fixed point of the best-response matrix."""
    R = brm.matrix
    n = R.shape[0]
    seeds = [np.diag(R).copy()] + [R[:, k].copy() for k in range(n)]
    sol = _lcp_fixed_point(R, seeds)
    if sol is None:
        return None
    z = sol.z
    support = [k for k in range(n) if z[k + 1] > 1e-12]
    if not support:
        return None
    pis = np.array([z[k + 1] for k in support])
    pis = pis / pis.sum()

    hazards = []
    for k in support:
        player = brm.players[k]
        action = brm.quit_actions[k]
        p = _quit_hazard(game, base, player, action)
        if p <= 0.0:
            return None
        hazards.append(p)
    # equalize per-phase absorption probability so the conditional-on-
    # absorption phase distribution equals the target weights
    target = 0.9 * epsilon * min(hazards)
    duration = max(32, monitoring_window(MONITOR_TOL))
    phases = []
    for pi, k, p in zip(pis, support, hazards):
        alpha = target / p
        phases.append(
            Phase(
                quitter=brm.players[k],
                quit_action=brm.quit_actions[k],
                alpha=alpha,
                duration=duration,
                base=base,
                weight=float(pi),
            )
        )
    return PhasePlan(tuple(phases))


def _certified(game, strategy, epsilon, lam_grid=None, t_grid=None):
    kwargs = {}
    if lam_grid is not None:
        kwargs["lam_grid"] = lam_grid
    if t_grid is not None:
        kwargs["t_grid"] = t_grid
    report = certify_uniform(game, strategy, epsilon, **kwargs)
    return report


# ---------------------------------------------------------------------------
# general quitting


def synth_general_quitting(
    game: AbsorbingGame,
    epsilon: float,
    density: int = 40,
    seed: int = 0,
    budget_secs: float = 600.0,
) -> SynthesisResult:
    """Sunspot plan via the Q-matrix branch, else the witness stationary route."""
    cls = classify(game)
    part = cls.partition
    if part is None or not any(part.quitting_actions):
        raise SynthesisError("no quitting actions")
    diagnostics = []
    start_time = time.monotonic()

    # continue profiles to anchor the plan (pure over continue actions)
    continue_profiles = []
    for combo in itertools.product(*part.continue_actions):
        continue_profiles.append(MixedProfile.point_mass(game, combo))

    witness_matrix = None
    for c in continue_profiles:
        for brm in best_response_matrix_set(game, c, part):
            if time.monotonic() - start_time > budget_secs:
                raise SynthesisError("budget exhausted", diagnostics)
            verdict = is_q_matrix(brm.matrix, density=density, diag_bound=True)
            if verdict.is_q:
                plan = _build_plan(game, c, brm, epsilon)
                if plan is None:
                    diagnostics.append("Q branch: no usable complementarity fixed point")
                    continue
                strategy = SunspotStrategy(
                    plan, _plan_monitors(game, plan), _punishments(game), epsilon
                )
                report = _certified(game, strategy, epsilon)
                if report.verdict:
                    return SynthesisResult(
                        strategy, report, "general-quitting/Q",
                        {"matrix": brm, "plan_weights": [p.weight for p in plan.phases]},
                    )
                diagnostics.append(
                    f"Q branch: certification failed, max gain {report.max_gain:.3g}"
                )
            else:
                witness_matrix = witness_matrix or (brm, verdict.witness)
                diagnostics.append("matrix not Q-certified (witness found)")

    # non-Q branch: witness payoffs, vanishing-discount limit
    if witness_matrix is not None:
        brm, w = witness_matrix
        full = np.zeros(game.n_players)
        full[list(brm.players)] = w
        wit_map = {tuple(a): full for a in game.non_absorbing_profiles()}
        try:
            wgame = build_witness_game(game, wit_map)
            limit = vanishing_discount_limit(
                wgame, (1e-2, 1e-3, 1e-4, 1e-5), tol=1e-6, seed=seed
            )
            x0 = limit.profile
            if absorption_summary(game, x0).total > 0.0:
                strategy = _almost_stationary(game, x0, epsilon)
                report = _certified(game, strategy, epsilon)
                if report.verdict:
                    return SynthesisResult(
                        strategy, report, "general-quitting/witness", {"limit": limit}
                    )
                diagnostics.append(
                    f"witness branch: certification failed, max gain {report.max_gain:.3g}"
                )
            else:
                diagnostics.append("witness branch: limit profile not absorbing")
        except (SolverError, GameError) as exc:
            diagnostics.append(f"witness branch: {exc}")

    # last resort: a plain stationary discounted equilibrium of the game
    try:
        eq = stationary_discounted_equilibrium(game, PUNISH_LAM, tol=1e-7, seed=seed)
        strategy = _almost_stationary(game, eq.profile, epsilon)
        report = _certified(game, strategy, epsilon)
        if report.verdict:
            return SynthesisResult(
                strategy, report, "general-quitting/stationary", {"residual": eq.residual}
            )
        diagnostics.append(
            f"stationary fallback: certification failed, max gain {report.max_gain:.3g}"
        )
    except SolverError as exc:
        diagnostics.append(f"stationary fallback: {exc}")

    raise SynthesisError("synthesis failed", diagnostics)


# ---------------------------------------------------------------------------
# spotted


def synth_spotted(
    game: AbsorbingGame,
    epsilon: float,
    density: int = 40,
    seed: int = 0,
    budget_secs: float = 1200.0,
) -> SynthesisResult:
    cls = classify(game)
    if not cls.spotted:
        raise SynthesisError("not spotted")
    if not (cls.positive and cls.recursive):
        raise SynthesisError("not positive recursive")
    diagnostics = []
    start_time = time.monotonic()

    non_abs = sorted(tuple(a) for a in game.non_absorbing_profiles())
    witnesses = {}
    all_witnessed = True
    for a_prime in non_abs:
        if time.monotonic() - start_time > budget_secs:
            raise SynthesisError("budget exhausted", diagnostics)
        aux = build_spotted_aux(game, a_prime)
        part = derive_action_partition(aux)
        c = MixedProfile.point_mass(game, a_prime)
        found_wit = None
        for brm in best_response_matrix_set(aux, c, part):
            verdict = is_q_matrix(brm.matrix, density=density, diag_bound=True)
            if verdict.is_q:
                # the quit columns and conditional payoffs agree between the
                # auxiliary and the original game (single-coordinate
                # deviations from a non-absorbing profile of a spotted game
                # absorb in both), so the plan is built directly in the
                # original game
                plan = _build_plan(game, c, brm, epsilon)
                if plan is None:
                    diagnostics.append(f"{a_prime}: no complementarity fixed point")
                    continue
                strategy = SunspotStrategy(
                    plan, _plan_monitors(game, plan), _punishments(game), epsilon
                )
                report = _certified(game, strategy, epsilon)
                if report.verdict:
                    return SynthesisResult(
                        strategy, report, "spotted/Q",
                        {"anchor": a_prime, "matrix": brm},
                    )
                diagnostics.append(
                    f"{a_prime}: certification failed, max gain {report.max_gain:.3g}"
                )
            else:
                full = np.zeros(game.n_players)
                full[list(brm.players)] = verdict.witness
                found_wit = full
        if found_wit is None:
            all_witnessed = False
            diagnostics.append(f"{a_prime}: neither Q-certified nor witnessed")
        else:
            witnesses[a_prime] = found_wit

    if all_witnessed and witnesses:
        try:
            wgame = build_witness_game(game, witnesses)
            limit = vanishing_discount_limit(
                wgame, (1e-2, 1e-3, 1e-4, 1e-5), tol=1e-6, seed=seed
            )
            x0 = limit.profile
            if absorption_summary(game, x0).total <= 0.0:
                diagnostics.append("witness route: limit profile not absorbing")
            else:
                strategy = _almost_stationary(game, x0, epsilon)
                report = _certified(game, strategy, epsilon)
                if report.verdict:
                    return SynthesisResult(
                        strategy, report, "spotted/witness", {"limit": limit}
                    )
                diagnostics.append(
                    f"witness route: certification failed, max gain {report.max_gain:.3g}"
                )
        except (SolverError, GameError) as exc:
            diagnostics.append(f"witness route: {exc}")

    raise SynthesisError("synthesis failed", diagnostics)


# ---------------------------------------------------------------------------
# L-shaped QL


def _corner_quit(lab: LShapedLabeling, player: int, action: int) -> Optional[int]:
    """Which side's corner continue action this (player, action) is, if any."""
    if player == lab.player1 and action == lab.c12:
        return 1
    if player == lab.player2 and action == lab.c22:
        return 2
    return None


def _transform_ql_phase(
    game: AbsorbingGame,
    lab: LShapedLabeling,
    aux: AbsorbingGame,
    phase: Phase,
    epsilon: float,
    window: int,
):
    """Realize an auxiliary-game phase in the original game.

    True quitting actions copy unchanged; a corner continue action used as a
    quit is realized by giving the companion player the mixture
    p * (own corner) + (1 - p) * (own first continue), p = max{current corner
    mass, epsilon / 2}, then re-matching the phase absorption probability by
    first growing the duration and then shrinking the quit rate.

    Returns (phase, monitor-or-None, rho_target, rho_achieved).
    """
    side = _corner_quit(lab, phase.quitter, phase.quit_action)
    p_aux = _quit_hazard(aux, phase.base, phase.quitter, phase.quit_action)
    rho_target = rho(p_aux, phase.alpha, phase.duration)
    if side is None:
        # real quit: hazard agrees between the games by construction
        return phase, None, rho_target, rho_target

    if side == 1:
        companion, corner, first = lab.player2, lab.c22, lab.c21
    else:
        companion, corner, first = lab.player1, lab.c12, lab.c11
    p = max(float(phase.base[companion][corner]), epsilon / 2.0)
    comp = np.zeros(len(game.actions[companion]))
    comp[corner] = p
    comp[first] = 1.0 - p
    new_base = phase.base.replace_player(companion, comp)

    p_hat = _quit_hazard(game, new_base, phase.quitter, phase.quit_action)
    if p_hat <= 0.0:
        raise SynthesisError("corner-quit phase cannot absorb in the original game")

    # duration: smallest M-hat >= max(M, window) with rho at the old quit
    # rate at least the target (rho is increasing in M)
    M_hat = max(phase.duration, window)
    while rho(p_hat, phase.alpha, M_hat) < rho_target:
        M_hat *= 2
        if M_hat > 10**9:
            raise SynthesisError("phase duration blow-up in the quit-rate re-match")
    lo, hi = M_hat // 2, M_hat
    while lo + 1 < hi:
        mid = (lo + hi) // 2
        if mid >= max(phase.duration, window) and rho(p_hat, phase.alpha, mid) >= rho_target:
            hi = mid
        else:
            lo = mid
    M_hat = hi

    # quit rate: bisection in (0, alpha] (rho is increasing in alpha)
    lo_a, hi_a = 0.0, phase.alpha
    for _ in range(200):
        mid = 0.5 * (lo_a + hi_a)
        if rho(p_hat, mid, M_hat) >= rho_target:
            hi_a = mid
        else:
            lo_a = mid
        if hi_a - lo_a <= 1e-16:
            break
    alpha_hat = hi_a
    rho_achieved = rho(p_hat, alpha_hat, M_hat)
    if abs(rho_achieved - rho_target) > 1e-10:
        raise SynthesisError(
            f"phase absorption re-match residual {abs(rho_achieved - rho_target):.3g}"
        )

    new_phase = Phase(
        quitter=phase.quitter,
        quit_action=phase.quit_action,
        alpha=alpha_hat,
        duration=M_hat,
        base=new_base,
        weight=phase.weight,
    )
    monitor = attach_monitoring(companion, comp, epsilon * p)
    return new_phase, monitor, rho_target, rho_achieved


def synth_ql(
    game: AbsorbingGame,
    epsilon: float,
    density: int = 40,
    seed: int = 0,
    budget_secs: float = 1200.0,
) -> SynthesisResult:
    cls = classify(game)
    if not cls.l_shaped:
        raise SynthesisError("not L-shaped")
    lab = cls.l_labeling
    res = classify_ql_nql(game, density=density)
    if res.kind != "QL":
        raise SynthesisError("not QL")
    diagnostics = []
    start_time = time.monotonic()

    grids = [(res.delta1, res.delta2)]
    for d in [(1.0, 0.0), (0.0, 1.0), (1.0, 1.0)]:
        if d not in grids:
            grids.append(d)

    for d1, d2 in grids:
        aux = build_delta_game(game, d1, d2, lab)
        part = derive_action_partition(aux)
        # prefer anchors whose corner actions are already played (native
        # absorption: the corner-quit phases then need no re-match and keep a
        # fast absorption rate)
        combos = sorted(
            itertools.product(*part.continue_actions),
            key=lambda combo: -(
                (1 if combo[lab.player1] == lab.c12 else 0)
                + (1 if combo[lab.player2] == lab.c22 else 0)
            ),
        )
        for combo in combos:
            if time.monotonic() - start_time > budget_secs:
                raise SynthesisError("budget exhausted", diagnostics)
            c = MixedProfile.point_mass(aux, combo)
            for brm in best_response_matrix_set(aux, c, part):
                verdict = is_q_matrix(brm.matrix, density=density, diag_bound=True)
                if not verdict.is_q:
                    continue
                plan = _build_plan(aux, c, brm, epsilon)
                if plan is None:
                    diagnostics.append(f"delta {d1},{d2} at {combo}: no fixed point")
                    continue
                window = monitoring_window(MONITOR_TOL)
                new_phases = []
                monitors = []
                transform_log = []
                try:
                    for ph in plan.phases:
                        nph, mon, r_t, r_a = _transform_ql_phase(
                            game, lab, aux, ph, epsilon, window
                        )
                        new_phases.append(nph)
                        if mon is not None:
                            monitors.append(mon)
                        transform_log.append(
                            {
                                "quitter": ph.quitter,
                                "quit_action": ph.quit_action,
                                "rho_target": r_t,
                                "rho_achieved": r_a,
                                "alpha": nph.alpha,
                                "duration": nph.duration,
                            }
                        )
                except SynthesisError as exc:
                    diagnostics.append(f"delta {d1},{d2} at {combo}: {exc}")
                    continue
                real_plan = PhasePlan(tuple(new_phases))
                all_monitors = tuple(monitors) + _plan_monitors(game, real_plan)
                strategy = SunspotStrategy(
                    real_plan, all_monitors, _punishments(game), epsilon
                )
                report = _certified(game, strategy, epsilon)
                if report.verdict:
                    return SynthesisResult(
                        strategy, report, "ql/sunspot",
                        {
                            "delta": (d1, d2),
                            "anchor": combo,
                            "transform_log": transform_log,
                        },
                    )
                diagnostics.append(
                    f"delta {d1},{d2} at {combo}: certification failed, "
                    f"max gain {report.max_gain:.3g}"
                )
    raise SynthesisError("synthesis failed", diagnostics)


# ---------------------------------------------------------------------------
# L-shaped NQL: step bounds, hat profiles, path following


def _quit_sets_with_corner(game: AbsorbingGame, lab: LShapedLabeling):
    """Per-player quitting-action sets with Player 1's corner action included."""
    part = derive_action_partition(game)
    quits = [set(q) for q in part.quitting_actions]
    quits[lab.player1].add(lab.c12)
    return quits


def partition_absorbing_profiles(game: AbsorbingGame, lab: LShapedLabeling):
    """(A1, A1-tilde, A-gt1): profiles with exactly one / more than one
    quitting coordinate, counting Player 1's corner action as quitting."""
    quits = _quit_sets_with_corner(game, lab)
    A1, Agt1 = [], []
    for a in game.profiles():
        k = sum(1 for i, ai in enumerate(a) if ai in quits[i])
        if k == 1:
            A1.append(a)
        elif k > 1:
            Agt1.append(a)
    A1t = [a for a in A1 if a not in (lab.a3, lab.a4)]
    return A1, A1t, Agt1


def step2_quit_bound(game: AbsorbingGame, lab: LShapedLabeling, epsilon: float) -> float:
    """Upper bound on per-action quit probabilities keeping multi-quit
    absorption mass below epsilon times the total absorption mass."""
    quits = _quit_sets_with_corner(game, lab)
    n_quit = sum(len(qs) for qs in quits)
    p_min = min(
        game.absorb_prob[a] for a in game.profiles() if game.absorb_prob[a] > 0.0
    )
    n_profiles = len(list(game.profiles()))
    return min(
        1.0 - 2.0 ** (-1.0 / max(n_quit, 1)),
        p_min * p_min * epsilon / (2.0 * n_profiles),
    )


def step7_delta_bound(game: AbsorbingGame, lab: LShapedLabeling, epsilon: float) -> float:
    quits = _quit_sets_with_corner(game, lab)
    n_quit = sum(len(qs) for qs in quits)
    p_min = min(
        game.absorb_prob[a] for a in game.profiles() if game.absorb_prob[a] > 0.0
    )
    n_profiles = len(list(game.profiles()))
    return min(
        epsilon / 3.0,
        p_min * (1.0 - 2.0 ** (-1.0 / max(n_quit, 1))) / 2.0,
        p_min**3 * epsilon / (4.0 * n_profiles),
    )


def chi_mass(game: AbsorbingGame, x: MixedProfile, profiles) -> float:
    """Absorption mass contributed by the listed profiles under x."""
    return sum(x.profile_prob(a) * game.absorb_prob[a] for a in profiles)


def build_hat_profile(
    x: MixedProfile,
    delta: float,
    eta: float,
    epsilon: float,
    labeling: LShapedLabeling,
    quit_sets=None,
) -> MixedProfile:
    """Corner shift then quit-rate scaling.

    First the companion player moves a delta fraction of its first continue
    action onto its corner action; then, if any quit probability exceeds eta,
    all quit probabilities are scaled by eta / (largest quit probability),
    preserving the companion player's continue split.
    """
    lab = labeling
    dists = [np.array(x[i], dtype=float) for i in range(len(x))]
    # corner shift for Player 2
    moved = delta * dists[lab.player2][lab.c21]
    dists[lab.player2][lab.c21] -= moved
    dists[lab.player2][lab.c22] += moved

    if quit_sets is None:
        quit_sets = [set() for _ in dists]
    x_max = 0.0
    for i, qs in enumerate(quit_sets):
        for a in qs:
            x_max = max(x_max, dists[i][a])
    if x_max > eta > 0.0:
        scale = eta / x_max
        for i, qs in enumerate(quit_sets):
            if not qs:
                continue
            removed = 0.0
            for a in qs:
                removed += dists[i][a] * (1.0 - scale)
                dists[i][a] *= scale
            cont = [a for a in range(len(dists[i])) if a not in qs]
            cont_mass = sum(dists[i][a] for a in cont)
            if cont_mass > 0.0:
                for a in cont:
                    dists[i][a] += removed * dists[i][a] / cont_mass
            else:
                dists[i][cont[0]] += removed
    return MixedProfile(dists)


def _swap_labeling(lab: LShapedLabeling) -> LShapedLabeling:
    """Mirror the construction so Player 1's side plays Player 2's role."""
    return LShapedLabeling(
        player1=lab.player2,
        player2=lab.player1,
        c11=lab.c21,
        c12=lab.c22,
        c21=lab.c11,
        c22=lab.c12,
        others_continue=lab.others_continue,
        a1=lab.a1,
        a2=lab.a3,
        a3=lab.a2,
        a4=lab.a4,
    )


def _profile_mass(x: MixedProfile, a) -> float:
    return x.profile_prob(tuple(a))


def synth_nql(
    game: AbsorbingGame,
    epsilon: float,
    density: int = 40,
    seed: int = 0,
    omega: float = 1e-3,
    lam: float = 1e-4,
    theta_step: float = 1e-2,
    budget_secs: float = 1800.0,
) -> SynthesisResult:
    cls = classify(game)
    if not cls.l_shaped:
        raise SynthesisError("not L-shaped")
    lab = cls.l_labeling
    res = classify_ql_nql(game, density=density)
    if res.kind != "NQL":
        raise SynthesisError("not NQL")
    witnesses = (res.q, res.q1, res.q2)
    diagnostics = []
    start_time = time.monotonic()
    c_eps = step2_quit_bound(game, lab, epsilon)
    delta = step7_delta_bound(game, lab, epsilon)
    quit_sets = _quit_sets_with_corner(game, lab)
    quit_sets_sym = _quit_sets_with_corner(game, _swap_labeling(lab))

    def try_stationary(x: MixedProfile, tag: str):
        if absorption_summary(game, x).total <= 1e-9:
            return None
        strategy = _almost_stationary(game, x, epsilon)
        report = _certified(game, strategy, epsilon)
        if report.verdict:
            return SynthesisResult(strategy, report, f"nql/{tag}", {})
        diagnostics.append(f"{tag}: certification failed, max gain {report.max_gain:.3g}")
        return None

    def try_hat(x: MixedProfile, side: int, tag: str):
        the_lab = lab if side == 1 else _swap_labeling(lab)
        qsets = quit_sets if side == 1 else quit_sets_sym
        x_max = max(
            (float(x[i][a]) for i, qs in enumerate(qsets) for a in qs), default=0.0
        )
        eta = min(x_max, c_eps) if x_max > 0.0 else c_eps
        xhat = build_hat_profile(x, delta, eta, epsilon, the_lab, qsets)
        if absorption_summary(game, xhat).total <= 0.0:
            diagnostics.append(f"{tag}: hat profile not absorbing")
            return None
        companion = the_lab.player2
        monitors = _profile_monitors(game, [xhat[i] for i in range(game.n_players)])
        monitors = monitors + (
            attach_monitoring(companion, xhat[companion], max(delta * epsilon, 1e-3)),
        )
        strategy = AlmostStationaryProfile(xhat, monitors, _punishments(game), epsilon)
        report = _certified(game, strategy, epsilon)
        if report.verdict:
            return SynthesisResult(strategy, report, f"nql/{tag}", {"delta": delta, "eta": eta})
        diagnostics.append(f"{tag}: certification failed, max gain {report.max_gain:.3g}")
        return None

    # direct stationary candidates of the original game first (honest
    # search-plus-certify: any absorbing stationary equilibrium settles it)
    try:
        eq = stationary_discounted_equilibrium(game, lam, tol=1e-7, seed=seed)
        out = try_stationary(eq.profile, "stationary-direct")
        if out is not None:
            return out
    except SolverError as exc:
        diagnostics.append(f"stationary-direct: {exc}")

    # homotopy path following
    theta = -1.0
    step = theta_step
    prev = None
    while theta <= 2.0 + 1e-12:
        if time.monotonic() - start_time > budget_secs:
            raise SynthesisError("budget exhausted", diagnostics)
        hp = build_homotopy_game(game, witnesses, omega, theta, lab)
        caps = hp.caps or None
        try:
            eq = stationary_discounted_equilibrium(
                hp.game, lam, tol=1e-6, seed=seed, caps=caps,
                warm_start=prev, n_starts=8 if prev is not None else 32,
                max_iter=500,
            )
        except SolverError:
            if step > 1e-5:
                step *= 0.5
                theta = min(theta - step, 2.0)
                continue
            diagnostics.append(f"path trace lost at theta={theta:.4f}")
            prev = None
            theta += theta_step
            step = theta_step
            continue
        x = eq.profile
        prev = x

        if absorption_summary(game, x).total > 1e-9:
            out = try_stationary(x, f"path-absorbing@{theta:.3f}")
            if out is not None:
                return out
        p01 = absorption_summary(game, x).total + _profile_mass(x, lab.a2)
        p10 = absorption_summary(game, x).total + _profile_mass(x, lab.a3)
        if theta <= 0.0 and 0.0 < p01 < c_eps:
            out = try_hat(x, 1, f"hat-side1@{theta:.3f}")
            if out is not None:
                return out
        if theta >= 1.0 and 0.0 < p10 < c_eps:
            out = try_hat(x, 2, f"hat-side2@{theta:.3f}")
            if out is not None:
                return out
        theta += step
        step = min(theta_step, step * 2.0)

    raise SynthesisError("no certifiable window found within budgets", diagnostics)
