"""Auxiliary game constructions and the QL/NQL dichotomy test."""

import numpy as np
import pytest

from absorbeq import (
    GameError,
    MixedProfile,
    best_deviation_matrix,
    best_response_matrix_set,
    build_delta_game,
    build_homotopy_game,
    build_restricted_game,
    build_spotted_aux,
    build_witness_game,
    classify,
    classify_ql_nql,
    derive_action_partition,
)
from game_builders import lshaped_nql, lshaped_ql, quitting_2p, spotted_all_witness


def test_delta_game_entries():
    game = lshaped_ql()
    lab = classify(game).l_labeling
    d = build_delta_game(game, 0.3, 0.7, lab)
    assert d.absorb_prob[lab.a3] == pytest.approx(0.3)
    assert d.absorb_prob[lab.a2] == pytest.approx(0.7)
    assert np.array_equal(d.payoff[lab.a3], game.payoff[lab.a4])
    assert np.array_equal(d.payoff[lab.a2], game.payoff[lab.a4])
    # a1 and a4 untouched
    assert d.absorb_prob[lab.a1] == 0.0
    assert d.absorb_prob[lab.a4] == game.absorb_prob[lab.a4]
    # zero delta leaves the entry untouched
    d0 = build_delta_game(game, 0.0, 0.5, lab)
    assert d0.absorb_prob[lab.a3] == 0.0
    with pytest.raises(GameError):
        build_delta_game(game, 1.5, 0.0, lab)


def test_restricted_game_caps():
    game = lshaped_ql()
    lab = classify(game).l_labeling
    r1 = build_restricted_game(game, 0.2, 1, 0.05, lab)
    assert r1.game.absorb_prob[lab.a3] == pytest.approx(0.2)
    assert r1.cap_of(lab.player2, lab.c22) == pytest.approx(0.05)
    assert r1.cap_of(lab.player1, lab.c12) == 1.0
    r2 = build_restricted_game(game, 0.2, 2, 0.05, lab)
    assert r2.game.absorb_prob[lab.a2] == pytest.approx(0.2)
    assert r2.cap_of(lab.player1, lab.c12) == pytest.approx(0.05)


def test_spotted_aux():
    game = spotted_all_witness()
    a_prime = (0, 0, 0)
    aux = build_spotted_aux(game, a_prime)
    for a in game.profiles():
        if a == a_prime:
            assert aux.absorb_prob[a] == 0.0
        elif game.absorb_prob[a] > 0.0:
            assert aux.absorb_prob[a] == game.absorb_prob[a]
        else:
            assert aux.absorb_prob[a] == 1.0  # the other continue profile
    with pytest.raises(GameError):
        build_spotted_aux(game, (1, 0, 0))  # absorbing profile


def test_witness_game():
    game = quitting_2p()
    w = {(0, 0): [-0.5, 0.25]}
    wg = build_witness_game(game, w)
    assert np.allclose(wg.payoff[(0, 0)], [-0.5, 0.25])
    assert wg.relaxed_payoffs
    # absorbing entries untouched
    assert np.array_equal(wg.payoff[(1, 0)], game.payoff[(1, 0)])
    with pytest.raises(GameError):
        build_witness_game(game, {})


def test_homotopy_segments():
    game = lshaped_nql()
    lab = classify(game).l_labeling
    q = np.array([0.1, 0.2])
    q1 = np.array([-0.3, 0.4])
    q2 = np.array([0.5, -0.6])
    # theta = -1: pure left endpoint, payoff q1, a3 absorbs with omega
    pt = build_homotopy_game(game, (q, q1, q2), 1e-3, -1.0, lab)
    assert pt.segment == "left"
    assert pt.game.absorb_prob[lab.a3] == pytest.approx(1e-3)
    assert pt.caps == {(lab.player2, lab.c22): 0.0}
    assert np.allclose(pt.game.payoff[lab.a1], q1)
    # theta = 0.5: middle, split deltas, payoff q, no caps
    pt = build_homotopy_game(game, (q, q1, q2), 1e-3, 0.5, lab)
    assert pt.segment == "middle" and pt.caps == {}
    assert pt.game.absorb_prob[lab.a3] == pytest.approx(0.5e-3)
    assert pt.game.absorb_prob[lab.a2] == pytest.approx(0.5e-3)
    assert np.allclose(pt.game.payoff[lab.a1], q)
    # theta = 2: pure right endpoint, payoff q2
    pt = build_homotopy_game(game, (q, q1, q2), 1e-3, 2.0, lab)
    assert pt.segment == "right"
    assert pt.game.absorb_prob[lab.a2] == pytest.approx(1e-3)
    assert pt.caps == {(lab.player1, lab.c12): 0.0}
    assert np.allclose(pt.game.payoff[lab.a1], q2)
    # segment boundaries follow the middle convention
    assert build_homotopy_game(game, (q, q1, q2), 1e-3, 0.0, lab).segment == "middle"
    assert build_homotopy_game(game, (q, q1, q2), 1e-3, 1.0, lab).segment == "middle"
    with pytest.raises(GameError):
        build_homotopy_game(game, (q, q1, q2), 1e-3, 2.5, lab)


def test_best_deviation_matrix_enumeration():
    game = quitting_2p()
    M = best_deviation_matrix(game, (0, 0))
    # each player's only deviation is its quit action
    assert np.allclose(M[:, 0], [0.20, 0.19])
    assert np.allclose(M[:, 1], [0.07, 0.18])
    with pytest.raises(GameError):
        best_deviation_matrix(game, (1, 0))  # absorbing profile


def test_best_response_matrix_set_quitting():
    game = quitting_2p()
    part = derive_action_partition(game)
    c = MixedProfile([[1.0, 0.0], [1.0, 0.0]])
    mats = list(best_response_matrix_set(game, c, part))
    assert len(mats) == 1
    brm = mats[0]
    assert brm.players == (0, 1)
    assert np.allclose(brm.matrix, [[0.20, 0.07], [0.19, 0.18]])


def test_classify_ql_nql():
    ql = classify_ql_nql(lshaped_ql())
    assert ql.kind == "QL"
    assert ql.matrix is not None
    nql = classify_ql_nql(lshaped_nql())
    assert nql.kind == "NQL"
    for w in (nql.q, nql.q1, nql.q2):
        assert w is not None and w.shape == (2,)
