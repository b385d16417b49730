"""Game data model, validation, and structural classification.

An absorbing game has a single non-absorbing state.  Each action profile `a`
carries an absorption probability P(a) and a payoff vector u(a); once an
absorbing entry is hit, payoffs freeze forever.  This module stores the full
profile table densely (desk-scale games have at most a few thousand profiles)
and computes the structural taxonomy: recursive, positive, generic, general
quitting, quitting, quitting absorbing, two-dimension, spotted, L-shaped.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional, Sequence

import numpy as np

Profile = tuple  # tuple of per-player action indices


class GameError(ValueError):
    """Structural error in a game definition or classification request."""


@dataclass(frozen=True)
class AbsorbingGame:
    n_players: int
    actions: tuple  # per-player tuple of action names
    absorb_prob: dict  # Profile -> float in [0, 1]
    payoff: dict  # Profile -> np.ndarray of shape (n_players,)
    relaxed_payoffs: bool = False  # internal games may carry payoffs outside [0,1]

    @property
    def n_actions(self) -> tuple:
        return tuple(len(a) for a in self.actions)

    def profiles(self) -> Iterable[Profile]:
        return itertools.product(*(range(len(a)) for a in self.actions))

    def n_profiles(self) -> int:
        out = 1
        for a in self.actions:
            out *= len(a)
        return out

    def is_absorbing(self, profile: Profile) -> bool:
        return self.absorb_prob[profile] > 0.0

    def non_absorbing_profiles(self) -> list:
        return [a for a in self.profiles() if not self.is_absorbing(a)]

    def with_entries(self, absorb_prob=None, payoff=None, relaxed=None) -> "AbsorbingGame":
        """Copy with some profile entries replaced."""
        new_p = dict(self.absorb_prob)
        new_u = {a: np.array(u, dtype=float) for a, u in self.payoff.items()}
        if absorb_prob:
            new_p.update(absorb_prob)
        if payoff:
            for a, u in payoff.items():
                new_u[a] = np.array(u, dtype=float)
        return AbsorbingGame(
            self.n_players,
            self.actions,
            new_p,
            new_u,
            self.relaxed_payoffs if relaxed is None else relaxed,
        )

    def to_json_dict(self) -> dict:
        entries = []
        for a in self.profiles():
            entries.append(
                {
                    "profile": list(a),
                    "p": float(self.absorb_prob[a]),
                    "u": [float(v) for v in self.payoff[a]],
                }
            )
        return {
            "players": self.n_players,
            "actions": [list(names) for names in self.actions],
            "entries": entries,
        }

    @staticmethod
    def from_json_dict(data: dict, relaxed_payoffs: bool = False) -> "AbsorbingGame":
        try:
            n = int(data["players"])
            actions = tuple(tuple(str(x) for x in names) for names in data["actions"])
            entries = data["entries"]
        except (KeyError, TypeError) as exc:
            raise GameError(f"malformed game object: {exc}") from exc
        if len(actions) != n:
            raise GameError("actions list length does not match player count")
        absorb_prob = {}
        payoff = {}
        for e in entries:
            a = tuple(int(i) for i in e["profile"])
            if len(a) != n:
                raise GameError(f"profile {a} has wrong length")
            for i, ai in enumerate(a):
                if not 0 <= ai < len(actions[i]):
                    raise GameError(f"profile {a} action index out of range")
            if a in absorb_prob:
                raise GameError(f"duplicate profile entry {a}")
            absorb_prob[a] = float(e["p"])
            payoff[a] = np.array([float(v) for v in e["u"]], dtype=float)
            if payoff[a].shape != (n,):
                raise GameError(f"payoff vector at {a} has wrong length")
        game = AbsorbingGame(n, actions, absorb_prob, payoff, relaxed_payoffs)
        validate(game)
        return game


def make_game(
    actions: Sequence[Sequence[str]],
    entries: dict,
    relaxed_payoffs: bool = False,
) -> AbsorbingGame:
    """Build a game from {profile: (p, payoff vector)} and validate it."""
    acts = tuple(tuple(a) for a in actions)
    n = len(acts)
    absorb_prob = {}
    payoff = {}
    for a, (p, u) in entries.items():
        absorb_prob[tuple(a)] = float(p)
        payoff[tuple(a)] = np.array(u, dtype=float)
    game = AbsorbingGame(n, acts, absorb_prob, payoff, relaxed_payoffs)
    validate(game)
    return game


def validate(game: AbsorbingGame) -> None:
    """Check the AbsorbingGame invariants; raise GameError on first violation."""
    if game.n_players < 1:
        raise GameError("game must have at least one player")
    if len(game.actions) != game.n_players:
        raise GameError("actions list length does not match player count")
    for i, names in enumerate(game.actions):
        if len(names) < 1:
            raise GameError(f"player {i} has no actions")
    for a in game.profiles():
        if a not in game.absorb_prob or a not in game.payoff:
            raise GameError(f"incomplete profile table: missing entry for {a}")
        p = game.absorb_prob[a]
        if not np.isfinite(p) or p < 0.0 or p > 1.0:
            raise GameError(f"absorption probability out of range at {a}: {p}")
        u = np.asarray(game.payoff[a], dtype=float)
        if u.shape != (game.n_players,):
            raise GameError(f"payoff vector at {a} has wrong length")
        if not np.all(np.isfinite(u)):
            raise GameError(f"payoff not finite at {a}")
        if not game.relaxed_payoffs and (np.any(u < 0.0) or np.any(u > 1.0)):
            raise GameError(f"payoff out of range at {a}: {u}")
    extra = set(game.absorb_prob) - set(game.profiles())
    if extra:
        raise GameError(f"unknown profile entries: {sorted(extra)[:3]}")


@dataclass(frozen=True)
class ActionPartition:
    continue_actions: tuple  # per-player tuple of action indices C_i
    quitting_actions: tuple  # per-player tuple of action indices Q_i


def derive_action_partition(game: AbsorbingGame) -> ActionPartition:
    """Split each player's actions into quitting and continue sets.

    An action is quitting iff it absorbs with positive probability against
    every opponent profile; every remaining (continue) action must admit a
    companion profile of opponents' continue actions that does not absorb,
    and at least one player must have a quitting action.
    """
    n = game.n_players
    quit_sets = []
    cont_sets = []
    for i in range(n):
        qi = []
        ci = []
        others = [range(len(game.actions[j])) for j in range(n) if j != i]
        for ai in range(len(game.actions[i])):
            always_absorbing = True
            for rest in itertools.product(*others):
                prof = rest[:i] + (ai,) + rest[i:]
                if game.absorb_prob[prof] == 0.0:
                    always_absorbing = False
                    break
            (qi if always_absorbing else ci).append(ai)
        quit_sets.append(tuple(qi))
        cont_sets.append(tuple(ci))
    # every continue action needs a non-absorbing companion among others' continue actions
    for i in range(n):
        other_cont = [cont_sets[j] for j in range(n) if j != i]
        for ci in cont_sets[i]:
            found = False
            for rest in itertools.product(*other_cont):
                prof = rest[:i] + (ci,) + rest[i:]
                if game.absorb_prob[prof] == 0.0:
                    found = True
                    break
            if not found:
                raise GameError(
                    "not quitting-absorbing: action "
                    f"{game.actions[i][ci]!r} of player {i} has no continue companion"
                )
    if all(len(q) == 0 for q in quit_sets):
        raise GameError("not quitting-absorbing: no quitting action exists")
    return ActionPartition(tuple(cont_sets), tuple(quit_sets))


@dataclass(frozen=True)
class LShapedLabeling:
    """Canonical labels for the 2x2 continue grid of an L-shaped game.

    ``player1``/``player2`` are the two players with two continue actions.
    ``a4`` is the unique absorbing profile of the grid, reached when both
    labeled players play their second continue action; ``a1``, ``a2``, ``a3``
    are the three non-absorbing grid profiles (``a2`` differs from ``a1`` in
    player2's action, ``a3`` in player1's action).
    """

    player1: int
    player2: int
    c11: int  # player1's first continue action
    c12: int  # player1's second continue action (the a4 coordinate)
    c21: int
    c22: int
    others_continue: tuple  # (player, action) continue choice for every other player
    a1: Profile
    a2: Profile
    a3: Profile
    a4: Profile


@dataclass(frozen=True)
class GameClassification:
    recursive: bool
    positive: bool
    generic: bool
    general_quitting: bool
    quitting: bool
    quitting_absorbing: bool
    two_dimension: bool
    spotted: bool
    l_shaped: bool
    partition: Optional[ActionPartition] = None
    l_labeling: Optional[LShapedLabeling] = None

    def flags(self) -> dict:
        return {
            "recursive": self.recursive,
            "positive": self.positive,
            "generic": self.generic,
            "general_quitting": self.general_quitting,
            "quitting": self.quitting,
            "quitting_absorbing": self.quitting_absorbing,
            "two_dimension": self.two_dimension,
            "spotted": self.spotted,
            "l_shaped": self.l_shaped,
        }


def _is_recursive(game: AbsorbingGame) -> bool:
    return all(
        game.absorb_prob[a] > 0.0 or np.all(game.payoff[a] == 0.0)
        for a in game.profiles()
    )


def _is_positive(game: AbsorbingGame) -> bool:
    return all(np.all(game.payoff[a] >= 0.0) for a in game.profiles())


def _is_generic(game: AbsorbingGame) -> bool:
    profs = list(game.profiles())
    for i in range(game.n_players):
        vals = [game.payoff[a][i] for a in profs]
        if len(set(vals)) != len(vals):
            return False
    return True


def _general_quitting(game: AbsorbingGame, part: ActionPartition) -> bool:
    """Any quitting action absorbs surely; all-continue profiles never absorb."""
    n = game.n_players
    for a in game.profiles():
        has_quit = any(a[i] in part.quitting_actions[i] for i in range(n))
        p = game.absorb_prob[a]
        if has_quit and p != 1.0:
            return False
        if not has_quit and p != 0.0:
            return False
    return True


def _is_spotted(game: AbsorbingGame) -> bool:
    nonabs = game.non_absorbing_profiles()
    for a, b in itertools.combinations(nonabs, 2):
        if sum(1 for x, y in zip(a, b) if x != y) < 2:
            return False
    return True


def _l_shaped_labeling(
    game: AbsorbingGame, part: ActionPartition
) -> Optional[LShapedLabeling]:
    """Find the canonical labeling of the continue grid, if the game is L-shaped.

    Requires exactly two players with two continue actions (all others with
    one) and exactly one absorbing profile among the four continue-grid
    profiles.  Among valid relabelings the lexicographically smallest
    (player-index, action-index) assignment is chosen.
    """
    n = game.n_players
    two = [i for i in range(n) if len(part.continue_actions[i]) == 2]
    one = [i for i in range(n) if len(part.continue_actions[i]) == 1]
    if len(two) != 2 or len(two) + len(one) != n:
        return None
    p, q = two  # p < q
    others = tuple((j, part.continue_actions[j][0]) for j in one)

    def grid_profile(ap, aq):
        prof = [0] * n
        for j, cj in others:
            prof[j] = cj
        prof[p] = ap
        prof[q] = aq
        return tuple(prof)

    cp = part.continue_actions[p]
    cq = part.continue_actions[q]
    absorbing = [
        (ap, aq)
        for ap in cp
        for aq in cq
        if game.absorb_prob[grid_profile(ap, aq)] > 0.0
    ]
    if len(absorbing) != 1:
        return None
    ap4, aq4 = absorbing[0]
    # candidate labelings: (player1, player2) in {(p, q), (q, p)}; the second
    # continue action of each labeled player is its a4 coordinate.
    candidates = []
    for p1, p2 in ((p, q), (q, p)):
        if p1 == p:
            c12, c22 = ap4, aq4
        else:
            c12, c22 = aq4, ap4
        c11 = next(a for a in part.continue_actions[p1] if a != c12)
        c21 = next(a for a in part.continue_actions[p2] if a != c22)
        candidates.append((p1, c11, c12, p2, c21, c22))
    candidates.sort()
    p1, c11, c12, p2, c21, c22 = candidates[0]

    def labeled_profile(a_p1, a_p2):
        prof = [0] * n
        for j, cj in others:
            prof[j] = cj
        prof[p1] = a_p1
        prof[p2] = a_p2
        return tuple(prof)

    return LShapedLabeling(
        player1=p1,
        player2=p2,
        c11=c11,
        c12=c12,
        c21=c21,
        c22=c22,
        others_continue=others,
        a1=labeled_profile(c11, c21),
        a2=labeled_profile(c11, c22),
        a3=labeled_profile(c12, c21),
        a4=labeled_profile(c12, c22),
    )


def classify(game: AbsorbingGame) -> GameClassification:
    """Compute every taxonomy flag by exhaustive checks over the profile table."""
    validate(game)
    try:
        part = derive_action_partition(game)
    except GameError:
        part = None

    recursive = _is_recursive(game)
    positive = _is_positive(game)
    generic = _is_generic(game)
    quitting_absorbing = part is not None
    general_quitting = part is not None and _general_quitting(game, part)
    quitting = general_quitting and all(
        len(part.continue_actions[i]) == 1 and len(part.quitting_actions[i]) == 1
        for i in range(game.n_players)
    )
    spotted = _is_spotted(game)

    two_dimension = False
    labeling = None
    if part is not None:
        sizes = sorted(len(c) for c in part.continue_actions)
        two_dimension = (
            game.n_players >= 2
            and sizes[-1] == 2
            and sizes[-2] == 2
            and all(s == 1 for s in sizes[:-2])
        )
        if two_dimension:
            labeling = _l_shaped_labeling(game, part)
    l_shaped = labeling is not None

    return GameClassification(
        recursive=recursive,
        positive=positive,
        generic=generic,
        general_quitting=general_quitting,
        quitting=quitting,
        quitting_absorbing=quitting_absorbing,
        two_dimension=two_dimension,
        spotted=spotted,
        l_shaped=l_shaped,
        partition=part,
        l_labeling=labeling,
    )


def perturb_generic(game: AbsorbingGame, eps: float) -> AbsorbingGame:
    """Shift payoffs deterministically so distinct profiles pay every player distinctly.

    The k-th profile (lexicographic order) is shifted by k*eps/(2*|A|); when the
    shift would leave [0,1] it is applied downward instead.  Absorption
    probabilities are untouched.  Raises GameError when the shifted table is
    still non-generic within eps.
    """
    if eps <= 0:
        raise GameError("eps must be positive")
    n_prof = game.n_profiles()
    new_payoff = {}
    for k, a in enumerate(game.profiles()):
        shift = k * eps / (2.0 * n_prof)
        u = np.asarray(game.payoff[a], dtype=float).copy()
        for i in range(game.n_players):
            if game.relaxed_payoffs or u[i] + shift <= 1.0:
                u[i] = u[i] + shift
            else:
                u[i] = u[i] - shift
        if not game.relaxed_payoffs:
            u = np.clip(u, 0.0, 1.0)
        new_payoff[a] = u
    out = game.with_entries(payoff=new_payoff)
    if not _is_generic(out):
        raise GameError(f"cannot perturb within {eps}: shifted payoffs still collide")
    for a in game.profiles():
        if np.max(np.abs(out.payoff[a] - game.payoff[a])) > eps:
            raise GameError("perturbation exceeded eps")  # pragma: no cover
    return out


def load_game(path: str, relaxed_payoffs: bool = False) -> AbsorbingGame:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise GameError(f"cannot parse {path}: line {exc.lineno}: {exc.msg}") from exc
    return AbsorbingGame.from_json_dict(data, relaxed_payoffs)


def save_game(game: AbsorbingGame, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(game.to_json_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
