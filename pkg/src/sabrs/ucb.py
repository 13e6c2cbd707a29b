"""Bandit-driven strategy subtree selection."""

from __future__ import annotations

import math

from .tree import GameTree, Node, StrategySubtree, TreeUsageError


class NoWinningStrategy(RuntimeError):
    pass


def ucb_value(node: Node, ai: int, e: float) -> float:
    """Optimal Q-cost of an arm minus the exploration bonus.

    Unvisited arms score ``-inf`` whenever ``e > 0``.
    """
    arm = node.arms[ai]
    q = 1.0 - arm.g / arm.a
    if e == 0:
        return q
    if arm.n_sel == 0:
        return -math.inf
    return q - e * math.sqrt(2.0 * math.log(node.N) / arm.n_sel)


def _pick(node: Node, e: float) -> int:
    if e == 0:
        # same order as the cached backup, so the result realises the cached counts
        return node.best
    best, best_v = 0, ucb_value(node, 0, e)
    for i in range(1, len(node.arms)):
        v = ucb_value(node, i, e)
        if v < best_v:
            best, best_v = i, v
    return best


def select_strategy(tree: GameTree, root: int | None = None, e: float = 0.0, mutate: bool = True) -> StrategySubtree:
    """Descend from ``root`` choosing one arm per node and all of its children.

    Visit counters are bumped on every node reached and on every chosen arm
    unless ``mutate`` is false.
    """
    root = tree.root if root is None else root
    if root not in tree.nodes:
        raise TreeUsageError(f"unknown node {root}")
    st = StrategySubtree(root)
    nodes = tree.nodes
    stack = [root]
    while stack:
        n = stack.pop()
        node = nodes[n]
        st.members[n] = None
        if mutate:
            node.N += 1
        if node.is_goal or not node.arms:
            continue
        ai = _pick(node, e)
        st.choice[n] = ai
        arm = node.arms[ai]
        if mutate:
            arm.n_sel += 1
        stack.extend(reversed(arm.children))
    return st


def extract_winning(tree: GameTree, root: int | None = None) -> StrategySubtree:
    root = tree.root if root is None else root
    r = tree.nodes[root]
    if r.g != r.a:
        raise NoWinningStrategy(f"root cost is {1 - r.g / r.a:.4g}; no winning strategy in the tree")
    return select_strategy(tree, root, 0.0, mutate=False)


def root_min_q(tree: GameTree) -> float:
    """Termination test value: the best cached Q at the root, read directly."""
    return tree.nodes[tree.root].cost
