"""Strategy objects, monitoring windows, and serialization."""

import math

import numpy as np
import pytest

from absorbeq import (
    GameError,
    MixedProfile,
    AlmostStationaryProfile,
    MonitorSpec,
    Phase,
    PhasePlan,
    PunishmentSpec,
    SunspotStrategy,
    attach_monitoring,
    load_strategy,
    monitoring_window,
    save_strategy,
)
from absorbeq.strategies import strategy_from_json, strategy_to_json


def union_bound(T, tol):
    return sum(2.0 * math.exp(-2.0 * (2**j) * T * tol * tol) for j in range(64))


def test_monitoring_window_minimal():
    for tol in (0.25, 0.1, 0.05):
        T = monitoring_window(tol)
        assert union_bound(T, tol) <= tol
        assert union_bound(T - 1, tol) > tol  # minimality
    assert monitoring_window(0.25) == 18
    assert monitoring_window(0.1) == 153
    assert monitoring_window(1.5) == 1
    with pytest.raises(GameError):
        monitoring_window(0.0)


def test_monitoring_window_monotone():
    ws = [monitoring_window(t) for t in (0.5, 0.25, 0.1, 0.05, 0.01)]
    assert ws == sorted(ws)  # tighter tolerance needs a longer window


def test_attach_monitoring():
    m = attach_monitoring(1, [0.9, 0.1], 0.25)
    assert m.player == 1 and m.window == monitoring_window(0.25)
    assert np.allclose(m.marginal, [0.9, 0.1])


def test_phase_stage_profile():
    base = MixedProfile([[1.0, 0.0], [0.0, 1.0]])
    ph = Phase(quitter=0, quit_action=1, alpha=0.1, duration=5, base=base, weight=1.0)
    sp = ph.stage_profile()
    assert np.allclose(sp[0], [0.9, 0.1])
    assert np.allclose(sp[1], [0.0, 1.0])


def test_plan_weights_and_select():
    base = MixedProfile([[1.0, 0.0], [1.0, 0.0]])
    p1 = Phase(0, 1, 0.1, 5, base, 0.25)
    p2 = Phase(1, 1, 0.1, 5, base, 0.75)
    plan = PhasePlan((p1, p2))
    assert plan.select(0.0) is p1
    assert plan.select(0.2499) is p1
    assert plan.select(0.25) is p2
    assert plan.select(0.999) is p2
    with pytest.raises(GameError):
        PhasePlan((p1, Phase(1, 1, 0.1, 5, base, 0.5)))  # weights sum to 0.75


def roundtrip(strategy):
    return strategy_from_json(strategy_to_json(strategy))


def test_stationary_round_trip(tmp_path):
    s = MixedProfile([[0.25, 0.75], [0.5, 0.5]])
    path = str(tmp_path / "s.json")
    save_strategy(s, path)
    loaded = load_strategy(path)
    assert isinstance(loaded, MixedProfile)
    assert loaded.max_abs_diff(s) == 0.0


def test_sunspot_round_trip():
    base = MixedProfile([[1.0, 0.0], [0.6, 0.4]])
    plan = PhasePlan(
        (
            Phase(0, 1, 0.05, 18, base, 0.4),
            Phase(1, 1, 0.02, 18, base, 0.6),
        )
    )
    mon = (attach_monitoring(0, [1.0, 0.0], 0.25),)
    pun = {0: PunishmentSpec(0, 0.1, {(0,): 0.3, (1,): 0.7})}
    s = SunspotStrategy(plan, mon, pun, 0.05)
    t = roundtrip(s)
    assert isinstance(t, SunspotStrategy)
    assert strategy_to_json(t) == strategy_to_json(s)
    assert t.plan.phases[0].alpha == 0.05
    assert t.punishments[0].adversary == pun[0].adversary


def test_almost_stationary_round_trip():
    base = MixedProfile([[0.9, 0.1], [0.8, 0.2]])
    mon = (MonitorSpec(1, np.array([0.8, 0.2]), 0.1, 153),)
    pun = {1: PunishmentSpec(1, 0.2, {(0,): 1.0})}
    s = AlmostStationaryProfile(base, mon, pun, 0.05)
    t = roundtrip(s)
    assert isinstance(t, AlmostStationaryProfile)
    assert strategy_to_json(t) == strategy_to_json(s)


def test_unknown_type_rejected():
    with pytest.raises(GameError):
        strategy_from_json({"type": "nope"})
