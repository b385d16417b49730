"""Auxiliary game families and the best-response matrices that classify them.

Constructions: the delta games (one or both inner continue-grid profiles of an
L-shaped game made absorbing with the corner payoff), their cap-restricted
variants, the quitting auxiliary built around a non-absorbing profile of a
spotted game, witness-payoff games, and the three-segment homotopy family used
by the NQL path-following synthesizer.

Best-response matrices use the diagonal-bounded complementarity variant for
Q-matrix testing (see lcp_solver): without the bound, any matrix with a
nonnegative column is trivially solvable and the witness-based routes would
be vacuous for games with payoffs in [0, 1].
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .game_core import (
    AbsorbingGame,
    ActionPartition,
    GameError,
    LShapedLabeling,
    classify,
    derive_action_partition,
)
from .lcp_solver import find_witness, is_q_matrix
from .payoff_engine import MixedProfile, undiscounted_payoff


@dataclass(frozen=True)
class RestrictedGame:
    """A game together with per-(player, action) probability caps."""

    game: AbsorbingGame
    caps: dict  # (player, action) -> cap in [0, 1]

    def cap_of(self, player: int, action: int) -> float:
        return float(self.caps.get((player, action), 1.0))


def _require_l_shaped(game: AbsorbingGame) -> LShapedLabeling:
    cls = classify(game)
    if not cls.l_shaped or cls.l_labeling is None:
        raise GameError("not L-shaped")
    return cls.l_labeling


def build_delta_game(
    game: AbsorbingGame,
    delta1: float,
    delta2: float,
    labeling: Optional[LShapedLabeling] = None,
) -> AbsorbingGame:
    """Make a^3 absorb with probability delta1 and a^2 with delta2.

    A profile made absorbing inherits the corner payoff u(a^4); with a zero
    delta the entry is untouched.
    """
    lab = labeling or _require_l_shaped(game)
    if not (0.0 <= delta1 <= 1.0 and 0.0 <= delta2 <= 1.0):
        raise GameError("deltas must lie in [0, 1]")
    new_p = {}
    new_u = {}
    u4 = game.payoff[lab.a4]
    if delta1 > 0.0:
        new_p[lab.a3] = delta1
        new_u[lab.a3] = u4
    if delta2 > 0.0:
        new_p[lab.a2] = delta2
        new_u[lab.a2] = u4
    return game.with_entries(absorb_prob=new_p, payoff=new_u)


def build_restricted_game(
    game: AbsorbingGame,
    delta: float,
    side: int,
    alpha: float,
    labeling: Optional[LShapedLabeling] = None,
) -> RestrictedGame:
    """Delta game on one side with the opposite corner action capped.

    Side 1 is the a^3 construction (delta1 = delta) with Player 2's second
    continue action capped at alpha; side 2 is symmetric.
    """
    lab = labeling or _require_l_shaped(game)
    if side not in (1, 2):
        raise GameError("side must be 1 or 2")
    if not 0.0 <= alpha <= 1.0:
        raise GameError("alpha must lie in [0, 1]")
    if side == 1:
        base = build_delta_game(game, delta, 0.0, lab)
        caps = {(lab.player2, lab.c22): alpha}
    else:
        base = build_delta_game(game, 0.0, delta, lab)
        caps = {(lab.player1, lab.c12): alpha}
    return RestrictedGame(base, caps)


def build_spotted_aux(game: AbsorbingGame, a_prime) -> AbsorbingGame:
    """General quitting game around a non-absorbing profile of a spotted game.

    The profile's actions become the unique continue actions; every other
    action absorbs surely except where the original game already absorbs with
    its own probability.
    """
    a_prime = tuple(a_prime)
    if game.absorb_prob[a_prime] > 0.0:
        raise GameError("profile is absorbing")
    new_p = {}
    for a in game.profiles():
        if game.absorb_prob[a] > 0.0:
            continue
        if a != a_prime:
            new_p[a] = 1.0
    return game.with_entries(absorb_prob=new_p)


def build_witness_game(game: AbsorbingGame, witness_map: dict) -> AbsorbingGame:
    """Replace every non-absorbing payoff with its witness vector.

    Witness vectors are arbitrary reals, so the result carries the relaxed
    payoff-range flag.
    """
    new_u = {}
    for a in game.non_absorbing_profiles():
        if tuple(a) not in witness_map:
            raise GameError(f"missing witness entry for profile {a}")
        q = np.asarray(witness_map[tuple(a)], dtype=float)
        if q.shape != (game.n_players,):
            raise GameError(f"witness vector at {a} has wrong length")
        new_u[a] = q
    return game.with_entries(payoff=new_u, relaxed=True)


@dataclass(frozen=True)
class HomotopyPoint:
    omega: float
    theta: float
    witnesses: tuple  # (q, q1, q2)
    game: AbsorbingGame
    caps: dict  # probability caps in force at this point
    segment: str  # "left", "middle", "right"


def build_homotopy_game(
    game: AbsorbingGame,
    witnesses: Sequence,
    omega: float,
    theta: float,
    labeling: Optional[LShapedLabeling] = None,
) -> HomotopyPoint:
    """One point of the three-segment family over theta in [-1, 2].

    Left segment (theta < 0): a^3 absorbs with omega, Player 2's corner action
    capped at 1 + theta, non-absorbing payoff -theta*q1 + (1+theta)*q.
    Middle ([0, 1]): a^3 absorbs with theta*omega and a^2 with (1-theta)*omega,
    payoff q.  Right (theta > 1): a^2 absorbs with omega, Player 1's corner
    action capped at 2 - theta, payoff (theta-1)*q2 + (2-theta)*q.
    Segment boundaries follow the middle convention on [0, 1].
    """
    lab = labeling or _require_l_shaped(game)
    if not 0.0 < omega <= 1.0:
        raise GameError("omega must lie in (0, 1]")
    if not -1.0 <= theta <= 2.0:
        raise GameError("theta must lie in [-1, 2]")
    q, q1, q2 = (np.asarray(v, dtype=float) for v in witnesses)
    if theta < 0.0:
        base = build_delta_game(game, omega, 0.0, lab)
        caps = {(lab.player2, lab.c22): 1.0 + theta}
        blend = -theta * q1 + (1.0 + theta) * q
        segment = "left"
    elif theta <= 1.0:
        base = build_delta_game(game, theta * omega, (1.0 - theta) * omega, lab)
        caps = {}
        blend = q
        segment = "middle"
    else:
        base = build_delta_game(game, 0.0, omega, lab)
        caps = {(lab.player1, lab.c12): 2.0 - theta}
        blend = (theta - 1.0) * q2 + (2.0 - theta) * q
        segment = "right"
    new_u = {a: blend for a in base.non_absorbing_profiles()}
    realized = base.with_entries(payoff=new_u, relaxed=True)
    return HomotopyPoint(omega, theta, (q, q1, q2), realized, caps, segment)


@dataclass(frozen=True)
class BestResponseMatrix:
    """Best-quitting-response payoff matrix against a continue profile.

    ``players`` lists the players that own a quitting action (one column
    each); when some player has none, the matrix is reduced to the remaining
    players and ``reduced`` is set.
    """

    matrix: np.ndarray
    players: tuple
    quit_actions: tuple  # chosen quitting action per included player
    continue_profile: MixedProfile
    reduced: bool


def _quit_payoff(game: AbsorbingGame, c: MixedProfile, i: int, qi: int) -> np.ndarray:
    """Absorbing payoff vector of player i quitting with qi against c_{-i}.

    Computed as the undiscounted payoff of the profile where player i plays
    qi surely; since qi absorbs against every opponent profile, this is the
    conditional-on-absorption expectation (for sure quits it reduces to the
    plain expectation over c_{-i}).
    """
    pure = np.zeros(len(game.actions[i]))
    pure[qi] = 1.0
    return undiscounted_payoff(game, c.replace_player(i, pure))


def best_response_matrix_set(
    game: AbsorbingGame,
    c: MixedProfile,
    partition: Optional[ActionPartition] = None,
    tie_tol: float = 1e-12,
) -> list:
    """All vertex selections of per-player best pure quitting responses.

    Ties within ``tie_tol`` on a player's own coordinate enumerate one matrix
    per selection; columns of mixed best responses are convex combinations of
    these vertex columns.
    """
    part = partition or derive_action_partition(game)
    n = game.n_players
    for i in range(n):
        for a, mass in enumerate(c[i]):
            if mass > 1e-12 and a not in part.continue_actions[i]:
                raise GameError(f"continue profile puts mass on quitting action of player {i}")
    included = [i for i in range(n) if part.quitting_actions[i]]
    if not included:
        raise GameError("no player has a quitting action")
    reduced = len(included) < n
    best_sets = []
    col_payoffs = {}
    for i in included:
        vals = {}
        for qi in part.quitting_actions[i]:
            r = _quit_payoff(game, c, i, qi)
            col_payoffs[(i, qi)] = r
            vals[qi] = r[i]
        top = max(vals.values())
        best_sets.append([qi for qi in part.quitting_actions[i] if vals[qi] >= top - tie_tol])
    out = []
    for selection in itertools.product(*best_sets):
        cols = [col_payoffs[(i, qi)][included] for i, qi in zip(included, selection)]
        matrix = np.stack(cols, axis=1)
        out.append(
            BestResponseMatrix(matrix, tuple(included), tuple(selection), c, reduced)
        )
    return out


def best_deviation_matrix(game: AbsorbingGame, a) -> np.ndarray:
    """Best absorbing-deviation payoff matrix at a non-absorbing profile.

    Column i is u(b_i(a), a_{-i}) where b_i(a) is player i's payoff-best
    deviation action; genericity must make each argmax unique.
    """
    a = tuple(a)
    if game.absorb_prob[a] > 0.0:
        raise GameError("profile is absorbing")
    n = game.n_players
    cols = []
    for i in range(n):
        best_val = -np.inf
        best_prof = None
        tied = False
        for ai in range(len(game.actions[i])):
            if ai == a[i]:
                continue
            prof = a[:i] + (ai,) + a[i + 1 :]
            v = game.payoff[prof][i]
            if v > best_val + 1e-15:
                best_val, best_prof, tied = v, prof, False
            elif abs(v - best_val) <= 1e-15:
                tied = True
        if tied or best_prof is None:
            raise GameError(f"not generic: tie in player {i}'s best deviation at {a}")
        cols.append(game.payoff[best_prof])
    return np.stack(cols, axis=1)


@dataclass(frozen=True)
class QlNqlResult:
    kind: str  # "QL", "NQL", or "Unresolved"
    # QL evidence
    delta1: Optional[float] = None
    delta2: Optional[float] = None
    matrix: Optional[BestResponseMatrix] = None
    # NQL evidence: witnesses of the (1,1), (1,0), (0,1) matrix families
    q: Optional[np.ndarray] = None
    q1: Optional[np.ndarray] = None
    q2: Optional[np.ndarray] = None
    detail: str = ""


def _cnq_continue_profile(game: AbsorbingGame, lab: LShapedLabeling) -> MixedProfile:
    """The pure profile (c_1^1, c_2^1, continue elsewhere)."""
    dists = []
    for i in range(game.n_players):
        v = np.zeros(len(game.actions[i]))
        if i == lab.player1:
            v[lab.c11] = 1.0
        elif i == lab.player2:
            v[lab.c21] = 1.0
        else:
            v[dict(lab.others_continue)[i]] = 1.0
        dists.append(v)
    return MixedProfile(dists)


def _pure_continue_profiles(game: AbsorbingGame, part: ActionPartition):
    for combo in itertools.product(*part.continue_actions):
        dists = []
        for i, ai in enumerate(combo):
            v = np.zeros(len(game.actions[i]))
            v[ai] = 1.0
            dists.append(v)
        yield MixedProfile(dists)


def classify_ql_nql(game: AbsorbingGame, density: int = 40) -> QlNqlResult:
    """Decide the QL / NQL dichotomy for an L-shaped game.

    Scaling a positive delta does not change the best-response matrix set, so
    the delta grid {(1,0), (0,1), (1,1)} covers all positive-delta families.
    QL: some best-response matrix of a delta game is (numerically) a
    Q-matrix.  NQL: at the canonical continue profile, every matrix of each
    of the three families has a witness.  QL takes priority when both tests
    pass; Unresolved when neither does.
    """
    lab = _require_l_shaped(game)
    grid = [(1.0, 0.0), (0.0, 1.0), (1.0, 1.0)]

    ql = None
    for d1, d2 in grid:
        aux = build_delta_game(game, d1, d2, lab)
        part = derive_action_partition(aux)
        for c in _pure_continue_profiles(aux, part):
            for brm in best_response_matrix_set(aux, c, part):
                verdict = is_q_matrix(brm.matrix, density=density, diag_bound=True)
                if verdict.is_q:
                    ql = QlNqlResult(
                        "QL",
                        delta1=d1,
                        delta2=d2,
                        matrix=brm,
                        detail=f"Q-certified at density {density}",
                    )
                    break
            if ql:
                break
        if ql:
            break
    if ql is not None:
        return ql

    witnesses = {}
    for d1, d2 in grid:
        aux = build_delta_game(game, d1, d2, lab)
        part = derive_action_partition(aux)
        c = _cnq_continue_profile(aux, lab)
        found = None
        for brm in best_response_matrix_set(aux, c, part):
            w = find_witness(brm.matrix, density=density, diag_bound=True)
            if w is None:
                return QlNqlResult(
                    "Unresolved",
                    detail=f"no witness found for a ({d1},{d2}) matrix at density {density}",
                )
            # pad reduced-matrix witnesses to a full payoff vector (players
            # without a quitting action keep a zero entry)
            full = np.zeros(game.n_players)
            full[list(brm.players)] = w
            found = full
        witnesses[(d1, d2)] = found
    return QlNqlResult(
        "NQL",
        q=witnesses[(1.0, 1.0)],
        q1=witnesses[(1.0, 0.0)],
        q2=witnesses[(0.0, 1.0)],
        detail="witnesses found for all three delta families",
    )
