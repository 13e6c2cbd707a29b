"""Sampling-based expansion of a selected strategy subtree."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .nhs import ControlInput, Mode, NhsModel, propagate
from .tree import NO_ACTION, GameTree, StrategySubtree


@dataclass
class ExploreParams:
    t_prop: float = 2.0
    goal_bias: float = 0.05
    nn_weights: dict | None = None  # mode index -> per-dimension weights
    max_nodes: int | None = None

    def __post_init__(self):
        if self.t_prop <= 0:
            raise ValueError("t_prop must be positive")
        if not 0 <= self.goal_bias < 1:
            raise ValueError("goal_bias must lie in [0, 1)")

    def weights(self, mode: Mode) -> np.ndarray:
        w = None if self.nn_weights is None else self.nn_weights.get(mode.index)
        w = mode.nn_weights if w is None else w
        w = np.asarray(w, dtype=float)
        if (w < 0).any():
            raise ValueError("nn weights must be non-negative")
        return w


def eligible(node) -> bool:
    return not node.is_goal and node.g < node.a


class _ModePool:
    __slots__ = ("w", "ids", "pos", "coords", "n")

    def __init__(self, weights, dim):
        self.w = weights
        self.ids: list[int] = []
        self.pos: dict[int, int] = {}
        self.coords = np.empty((64, dim))
        self.n = 0

    def add(self, nid, x):
        if self.n == len(self.coords):
            self.coords = np.concatenate([self.coords, np.empty_like(self.coords)])
        self.coords[self.n] = x
        self.pos[nid] = self.n
        self.ids.append(nid)
        self.n += 1

    def remove(self, nid):
        i = self.pos.pop(nid)
        last = self.n - 1
        if i != last:
            moved = self.ids[last]
            self.ids[i] = moved
            self.coords[i] = self.coords[last]
            self.pos[moved] = i
        self.ids.pop()
        self.n -= 1

    def nearest(self, x, w=None) -> tuple[int, float]:
        d2 = np.square(self.coords[: self.n] - x) @ (self.w if w is None else w)
        i = int(np.argmin(d2))
        return self.ids[i], float(d2[i])


class Pool:
    """Per-mode nearest-neighbour index over nodes eligible for expansion.

    Queries are vectorised linear scans; the pool changes on every expansion
    (new nodes, nodes whose cost reached zero), which a static k-d tree would
    have to rebuild.
    """

    def __init__(self, tree: GameTree, model: NhsModel, params: ExploreParams):
        self.tree = tree
        self.model = model
        self.params = params
        self.by_mode: dict[int, _ModePool] = {}
        self.where: dict[int, int] = {}

    @classmethod
    def of(cls, tree, model, params, ids) -> "Pool":
        pool = cls(tree, model, params)
        tree.solved.clear()  # eligibility is read fresh below
        for nid in ids:
            pool.add(nid)
        return pool

    def __len__(self):
        return len(self.where)

    def __contains__(self, nid):
        return nid in self.where

    def add(self, nid):
        node = self.tree.nodes[nid]
        if nid in self.where or not eligible(node):
            return
        q = node.state.mode
        mp = self.by_mode.get(q)
        if mp is None:
            mode = self.model.modes[q]
            mp = self.by_mode[q] = _ModePool(self.params.weights(mode), mode.dim)
        mp.add(nid, node.state.x)
        self.where[nid] = q

    def discard(self, nid):
        q = self.where.pop(nid, None)
        if q is not None:
            self.by_mode[q].remove(nid)

    def sync(self):
        """Drop nodes the tree reports as solved since the last call."""
        solved = self.tree.solved
        if solved:
            for nid in solved:
                self.discard(nid)
            solved.clear()

    def modes(self) -> list[int]:
        return sorted(q for q, mp in self.by_mode.items() if mp.n)

    def nearest(self, q, x) -> int:
        return self.by_mode[q].nearest(x)[0]

    def nearest_same_dim(self, dim, x, weights) -> int | None:
        """Nearest eligible node over every mode of dimension ``dim``."""
        best, best_d = None, np.inf
        p = np.asarray(x, dtype=float)
        w = np.asarray(weights, dtype=float)
        for q in self.modes():
            if self.model.modes[q].dim != dim:
                continue
            nid, d = self.by_mode[q].nearest(p, w)
            if d < best_d:
                best, best_d = nid, d
        return best


def sample_state(mode: Mode, params: ExploreParams, rng) -> np.ndarray:
    if params.goal_bias > 0 and mode.goal_box is not None and rng.random() < params.goal_bias:
        lo, hi = mode.goal_box
    else:
        lo, hi = mode.lo, mode.hi
    lo = np.asarray(lo)
    return lo + (np.asarray(hi) - lo) * rng.random(len(lo))


def sample_and_select(strategy: StrategySubtree, tree: GameTree, model: NhsModel, params: ExploreParams, rng,
                      pool: Pool | None = None) -> int | None:
    """Pick a mode uniformly among those with eligible nodes, then the node nearest a random sample.

    Returns ``None`` when no node of the strategy can be expanded.
    """
    if pool is None:
        pool = Pool.of(tree, model, params, list(strategy.members) + list(strategy.pool))
    modes = pool.modes()
    if not modes:
        return None
    q = modes[int(rng.integers(len(modes)))] if len(modes) > 1 else modes[0]
    s_rand = sample_state(model.modes[q], params, rng)
    return pool.nearest(q, s_rand)


def sample_control_duration(mode: Mode, params: ExploreParams, rng) -> ControlInput:
    lo = np.asarray(mode.u_lo)
    u = lo + (np.asarray(mode.u_hi) - lo) * rng.random(mode.n_ctrl)
    duration = params.t_prop * (1.0 - rng.random())  # (0, t_prop]
    return ControlInput(tuple(float(v) for v in u), float(duration))


def commit(tree: GameTree, strategy: StrategySubtree, model: NhsModel, nid: int, c: ControlInput,
           pool: Pool | None = None, outs=None) -> list[int]:
    """Propagate ``c`` from ``nid`` and insert the outcome set; ``[]`` if invalid."""
    node = tree.nodes[nid]
    if outs is None:
        _, outs = propagate(model, node.state, c, record=False)
    if not outs:
        return []
    children = tree.add_expansion(nid, c, [(o.state, o.goal) for o in outs])
    if nid in strategy.members and strategy.choice.get(nid, NO_ACTION) == NO_ACTION:
        strategy.choice[nid] = len(node.arms) - 1
        for ch in children:
            strategy.members[ch] = None
    else:
        for ch in children:
            strategy.pool[ch] = None
    if pool is not None:
        for ch in children:
            pool.add(ch)
        pool.sync()
    return children


def explore_once(tree: GameTree, strategy: StrategySubtree, model: NhsModel, params: ExploreParams, rng,
                 pool: Pool | None = None) -> StrategySubtree:
    if pool is None:
        pool = Pool.of(tree, model, params, list(strategy.members) + list(strategy.pool))
    if params.max_nodes is not None and len(tree) >= params.max_nodes:
        return strategy
    nid = sample_and_select(strategy, tree, model, params, rng, pool)
    if nid is None:
        return strategy
    mode = model.modes[tree.nodes[nid].state.mode]
    c = sample_control_duration(mode, params, rng)
    commit(tree, strategy, model, nid, c, pool)
    return strategy
