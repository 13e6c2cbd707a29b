"""Kinodynamic RRT baseline that ignores the adversary.

Each propagation keeps a single randomly drawn outcome of a nondeterministic
guard, so the tree is an ordinary RRT. The first trajectory that reaches the
goal is returned as a one-branch strategy; it is only a winning strategy if
no nondeterministic guard was crossed on the way.
"""

from __future__ import annotations

import time

import numpy as np

from .explore import ExploreParams, Pool, sample_control_duration, sample_state
from .nhs import NhsModel, is_goal, propagate
from .planner import ANYTIME, NO_PROGRESS, WINNING, PlanResult
from .tree import GameTree, StrategySubtree


def _path_strategy(tree: GameTree, leaf: int) -> StrategySubtree:
    st = StrategySubtree(tree.root)
    path = tree.path_to(leaf)
    for a, b in zip(path, path[1:]):
        st.members[a] = None
        st.choice[a] = tree.nodes[b].parent_arm
    st.members[leaf] = None
    return st


def rrt_baseline(model: NhsModel, t_max: float = 60.0, seed: int = 0, params: ExploreParams | None = None,
                 max_iterations: int | None = None) -> PlanResult:
    """Grow an RRT until a goal leaf appears or ``t_max`` seconds pass.

    ``status`` is ``winning`` only when the returned path is a winning
    strategy by itself, which the caller should still confirm by replay.
    """
    params = params or ExploreParams()
    rng = np.random.default_rng(seed)
    t0 = time.perf_counter()
    s0 = model.initial
    tree = GameTree(s0, is_goal(model, s0), seed=seed)
    pool = Pool.of(tree, model, params, [tree.root])
    it = 0
    leaf = tree.root if tree.solved_root else None
    while leaf is None and time.perf_counter() - t0 < t_max:
        if max_iterations is not None and it >= max_iterations:
            break
        it += 1
        modes = pool.modes()
        if not modes:
            break
        q = modes[int(rng.integers(len(modes)))] if len(modes) > 1 else modes[0]
        nid = pool.nearest(q, sample_state(model.modes[q], params, rng))
        c = sample_control_duration(model.modes[q], params, rng)
        _, outs = propagate(model, tree.nodes[nid].state, c, record=False)
        if not outs:
            continue
        o = outs[int(rng.integers(len(outs)))] if len(outs) > 1 else outs[0]
        ch, = tree.add_expansion(nid, c, [(o.state, o.goal)], outcome_indices=[o.target])
        if o.goal:
            leaf = ch
        else:
            pool.add(ch)
        tree.solved.clear()
    wall = time.perf_counter() - t0
    if leaf is None:
        st = StrategySubtree(tree.root, {tree.root: None})
        return PlanResult(ANYTIME if len(tree) > 1 else NO_PROGRESS, st, 1.0, it, wall, tree, it)
    st = _path_strategy(tree, leaf)
    status = WINNING if tree.solved_root else ANYTIME
    return PlanResult(status, st, tree.root_cost, it, wall, tree, it)
