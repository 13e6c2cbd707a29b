import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sabrs import envs
from sabrs.explore import ExploreParams, Pool, eligible, explore_once, sample_and_select, sample_control_duration
from sabrs.nhs import ControlInput, HybridState, NhsModel, is_goal
from sabrs.tree import GameTree, StrategySubtree
from sabrs.ucb import select_strategy


def line_model(goal=None, invariant=None, guards=None):
    mode = {"name": "a", "dim": 1, "flow": {"id": "single_integrator"}, "control_box": {"lo": [1], "hi": [1]},
            "bounds": {"lo": [0], "hi": [10]}}
    if goal is not None:
        mode["goal"] = goal
    if invariant is not None:
        mode["invariant"] = invariant
    modes = [mode]
    if guards:
        mode["guards"] = guards
        modes.append(dict(mode, name="b", guards=[]))
    return NhsModel({"modes": modes, "initial": {"mode": "a", "x": [0.0]}, "integrator": {"h": 0.01}})


def grow(model, seed, n, params=None):
    params = params or ExploreParams()
    rng = np.random.default_rng(seed)
    t = GameTree(model.initial, is_goal(model, model.initial))
    for _ in range(n):
        s = select_strategy(t, 0, 0.1)
        explore_once(t, s, model, params, rng)
    return t


def test_only_nonzero_cost_nodes_are_eligible():
    m = line_model()
    t = GameTree(m.initial)
    t.add_expansion(0, ControlInput((1.0,), 1.0), [(HybridState(0, (1.0,)), True), (HybridState(0, (2.0,)), False)])
    s = select_strategy(t, 0, 0.0, mutate=False)
    pool = Pool.of(t, m, ExploreParams(), list(s.members))
    assert set(pool.where) == {0, 2}


def test_single_eligible_node_is_always_chosen():
    m = line_model()
    t = GameTree(m.initial)
    s = StrategySubtree(0, {0: None})
    rng = np.random.default_rng(3)
    assert {sample_and_select(s, t, m, ExploreParams(), rng) for _ in range(20)} == {0}


def test_nearest_neighbour_pick():
    m = line_model()
    t = GameTree(m.initial)
    t.add_expansion(0, ControlInput((1.0,), 10.0), [(HybridState(0, (10.0,)), False)])
    pool = Pool.of(t, m, ExploreParams(), [0, 1])
    assert pool.nearest(0, np.array([2.0])) == 0
    assert pool.nearest(0, np.array([7.0])) == 1


def test_no_eligible_node_signals_exhaustion():
    m = line_model()
    t = GameTree(m.initial)
    t.add_expansion(0, ControlInput((1.0,), 1.0), [(HybridState(0, (1.0,)), True)])
    s = select_strategy(t, 0, 0.0, mutate=False)
    assert sample_and_select(s, t, m, ExploreParams(), np.random.default_rng(0)) is None


def test_control_and_duration_sampling():
    mode = envs.build_charging().modes[0]
    p = ExploreParams(t_prop=2.0)
    draws = [sample_control_duration(mode, p, np.random.default_rng(s)) for s in range(200)]
    for c in draws:
        assert -1 <= c.u[0] <= 1 and -1.5 <= c.u[1] <= 1.5
        assert 0 < c.duration <= 2.0
    again = [sample_control_duration(mode, p, np.random.default_rng(s)) for s in range(200)]
    assert draws == again


def test_reaching_goal_from_bare_root():
    m = line_model(goal=[{"cmp": {"dim": 0, "op": ">=", "value": 0.005}}])
    t = GameTree(m.initial)
    assert t.root_cost == 1
    explore_once(t, StrategySubtree(0, {0: None}), m, ExploreParams(), np.random.default_rng(0))
    assert t.root_cost == 0 and len(t) == 2


def test_invalid_propagation_leaves_tree_untouched():
    m = line_model(invariant=[{"cmp": {"dim": 0, "op": "<=", "value": 0.001}}])
    t = GameTree(m.initial)
    s = StrategySubtree(0, {0: None})
    explore_once(t, s, m, ExploreParams(), np.random.default_rng(0))
    assert len(t) == 1 and not t[0].arms and s.choice == {}


def test_nondeterministic_guard_adds_all_children():
    g = [{"trigger": [{"cmp": {"dim": 0, "op": ">=", "value": 0.005}}], "targets": [{"mode": "a"}, {"mode": "b"}]}]
    m = line_model(guards=g)
    t = GameTree(m.initial)
    s = StrategySubtree(0, {0: None})
    explore_once(t, s, m, ExploreParams(), np.random.default_rng(0))
    assert len(t) == 3 and [t[i].state.mode for i in t[0].arms[0].children] == [0, 1]
    assert s.choice == {0: 0} and {1, 2} <= set(s.members)


def test_clock_dimensions_have_zero_default_weight():
    m = envs.build_charging()
    for mode in m.modes:
        assert mode.nn_weights[4] == 0.0
    assert m.mode_by_name("dry").nn_weights[5] == 0.0


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_expansion_never_starts_from_goal_or_solved_nodes(seed):
    m = envs.build_gear_car(2, 1)
    params = ExploreParams()
    rng = np.random.default_rng(seed)
    t = GameTree(m.initial)
    for _ in range(60):
        s = select_strategy(t, 0, 0.1)
        pool = Pool.of(t, m, params, list(s.members) + list(s.pool))
        before = {n: len(t[n].arms) for n in t.nodes}
        ok = {n for n in t.nodes if eligible(t[n])}
        size = len(t)
        explore_once(t, s, m, params, rng, pool)
        grown = [n for n in before if len(t[n].arms) > before[n]]
        assert all(n in ok for n in grown)
        added = len(t) - size
        if grown:
            assert added == len(t[grown[0]].arms[-1].children)
        else:
            assert added == 0


def test_seed_determinism():
    m = envs.build_charging()
    a, b = grow(m, 11, 150), grow(m, 11, 150)
    assert len(a) == len(b)
    assert all(a[n].state == b[n].state and a[n].parent == b[n].parent for n in a.nodes)
    c = grow(m, 12, 150)
    assert any(a[n].state != c[n].state for n in range(1, min(len(a), len(c))))


def test_params_validation():
    with pytest.raises(ValueError):
        ExploreParams(t_prop=0)
    with pytest.raises(ValueError):
        ExploreParams(goal_bias=1.0)
