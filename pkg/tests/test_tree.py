from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from _trees import S, random_tree, scratch_counts
from sabrs.nhs import ControlInput, HybridState
from sabrs.tree import (NO_ACTION, GameTree, StrategySubtree, TreeUsageError, all_outcomes_included,
                        contains_root, cost, edges_in_tree, one_control_per_or_node, qcost, strategy_counts,
                        well_formed)
from sabrs.ucb import select_strategy

C = ControlInput((0.0,), 1.0)


def st_(i):
    return HybridState(0, (float(i),))


def fan(goals):
    """Root with one control whose outcomes carry the given goal flags."""
    t = GameTree(S)
    t.add_expansion(0, C, [(st_(i), g) for i, g in enumerate(goals)])
    return t, select_strategy(t, 0, 0.0, mutate=False)


def test_cost_examples():
    t, s = fan([True, True])
    assert cost(t, s, 0) == 0
    t, s = fan([True, False, False])
    assert cost(t, s, 0, exact=True) == Fraction(2, 3)
    t, s = fan([False, False])
    assert cost(t, s, 0) == 1


def test_cost_outside_strategy_is_usage_error():
    t, s = fan([True])
    with pytest.raises(TreeUsageError):
        cost(t, StrategySubtree(0, {0: None}), 1)


def test_qcost_examples():
    t = GameTree(S)
    a, b = t.add_expansion(0, C, [(st_(1), False), (st_(2), False)])
    t.add_expansion(a, C, [(st_(3), True), (st_(4), False)])  # a: (1, 2)
    t.add_expansion(b, C, [(st_(5), False), (st_(6), False), (st_(7), False)])  # b: (0, 3)
    s = select_strategy(t, 0, 0.0, mutate=False)
    assert qcost(t, s, 0, 0, exact=True) == Fraction(4, 5)
    t1, s1 = fan([True])
    assert qcost(t1, s1, 0, 0) == 0
    assert qcost(t, s, 0, 0) == cost(t, s, 0)
    with pytest.raises(TreeUsageError):
        qcost(t, s, 0, 3)


def test_backup_examples():
    t = GameTree(S)
    (c,) = t.add_expansion(0, C, [(st_(1), False)])
    (g,) = t.add_expansion(c, C, [(st_(2), True)])
    assert t.root_cost == 0 and t.solved_root
    t = GameTree(S)
    t.add_expansion(0, C, [(st_(1), True)])
    assert (t[0].g, t[0].a) == (1, 1)
    t2 = GameTree(S)
    t2.add_expansion(0, C, [(st_(1), True), (st_(2), False)])
    assert (t2[0].g, t2[0].a) == (1, 2)


def test_tie_break_prefers_more_leaves_then_age():
    t = GameTree(S)
    t.add_expansion(0, C, [(st_(1), True), (st_(2), False)])  # 1/2
    t.add_expansion(0, C, [(st_(3), True), (st_(4), True), (st_(5), False), (st_(6), False)])  # 2/4
    assert t.best_arm(0) == 1
    t.add_expansion(0, C, [(st_(7), True), (st_(8), True), (st_(9), False), (st_(10), False)])
    assert t.best_arm(0) == 1  # same cost and size: the older arm stays


def test_goal_leaf_cannot_be_expanded_and_is_frozen():
    t, _ = fan([True, False])
    with pytest.raises(TreeUsageError):
        t.add_expansion(1, C, [(st_(9), False)])
    before = (t[1].g, t[1].a, t[1].state)
    t.add_expansion(2, C, [(st_(3), True)])
    assert (t[1].g, t[1].a, t[1].state) == before
    with pytest.raises(TreeUsageError):
        t.add_expansion(2, C, [])


def test_add_expansion_appends_arm_with_zero_count():
    t = GameTree(S)
    ids = t.add_expansion(0, C, [(st_(1), False), (st_(2), True)])
    assert ids == [1, 2] and t[0].arms[0].n_sel == 0
    assert [t[i].outcome for i in ids] == [0, 1] and t[2].is_goal


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 10**6))
def test_cached_counts_match_scratch(seed):
    t = random_tree(seed, 120)
    for nid in t.nodes:
        assert (t[nid].g, t[nid].a) == scratch_counts(t, nid)
        assert 0 <= t[nid].g <= t[nid].a and t[nid].a >= 1


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 10**6))
def test_cost_bounds_and_zero_iff_all_goal(seed):
    t = random_tree(seed, 60)
    s = select_strategy(t, 0, 0.0, mutate=False)
    for n in s.members:
        c = cost(t, s, n, exact=True)
        assert 0 <= c <= 1
        g, a = strategy_counts(t, s, n)
        assert (c == 0) == (g == a)
        if s.choice.get(n, NO_ACTION) != NO_ACTION:
            assert qcost(t, s, n, s.choice[n], exact=True) == c


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10**6))
def test_backpropagate_is_idempotent(seed):
    t = random_tree(seed, 80)
    snap = {n: (t[n].g, t[n].a, t[n].best) for n in t.nodes}
    for n in list(t.nodes):
        t.backpropagate(n)
    assert snap == {n: (t[n].g, t[n].a, t[n].best) for n in t.nodes}


def test_well_formedness_predicates_detect_each_violation():
    t = GameTree(S)
    a, b = t.add_expansion(0, C, [(st_(1), False), (st_(2), True)])
    (c,) = t.add_expansion(0, C, [(st_(3), True)])
    (d,) = t.add_expansion(a, C, [(st_(4), True)])
    good = StrategySubtree(0, {0: None, a: None, b: None, d: None}, {0: 0, a: 0})
    assert well_formed(t, good)
    assert not contains_root(t, StrategySubtree(a, {a: None, d: None}, {a: 0}))
    assert not one_control_per_or_node(t, StrategySubtree(0, {0: None, c: None}, {}))
    assert not all_outcomes_included(t, StrategySubtree(0, {0: None, a: None}, {0: 0, a: NO_ACTION}))
    assert not edges_in_tree(t, StrategySubtree(0, {0: None, c: None}, {0: 0}))
    pruned = StrategySubtree(0, {0: None, a: None, b: None}, {0: 0, a: NO_ACTION})
    assert well_formed(t, pruned, allow_no_action=True) and not well_formed(t, pruned)
