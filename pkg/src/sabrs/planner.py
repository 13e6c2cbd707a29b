"""Main synthesis loop: select a strategy, expand it k times, repeat."""

from __future__ import annotations

import logging
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .explore import ExploreParams, Pool, commit, explore_once, sample_control_duration
from .nhs import NhsModel, is_goal, propagate
from .tree import NO_ACTION, GameTree, StrategySubtree
from .ucb import extract_winning, root_min_q, select_strategy

log = logging.getLogger(__name__)

WINNING = "winning"
ANYTIME = "anytime-best"
NO_PROGRESS = "no-progress"


@dataclass
class PlannerConfig:
    k: int = 5000
    e: float = 0.0005
    t_max: float = 60.0
    warm_start: str | float = "goal"  # "off", "goal" (until first goal leaf) or seconds
    warm_start_frac: float = 0.1  # cap for "goal", as a fraction of t_max
    guided_prob: float = 0.1
    prune_prob: float = 0.05
    guided_candidates: int = 10
    explore: ExploreParams = field(default_factory=ExploreParams)
    seed: int = 0
    max_iterations: int | None = None

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.e < 0:
            raise ValueError("e must be >= 0")
        if self.t_max <= 0:
            raise ValueError("t_max must be positive")
        if not 0 <= self.guided_prob < 1 or not 0 <= self.prune_prob < 1:
            raise ValueError("guided_prob and prune_prob must lie in [0, 1)")
        if self.guided_candidates < 1:
            raise ValueError("guided_candidates must be >= 1")
        if isinstance(self.warm_start, str) and self.warm_start not in ("off", "goal"):
            self.warm_start = float(self.warm_start)

    @classmethod
    def bare(cls, **kw) -> "PlannerConfig":
        """Configuration with every extension disabled."""
        kw.setdefault("warm_start", "off")
        kw.setdefault("guided_prob", 0.0)
        kw.setdefault("prune_prob", 0.0)
        return cls(**kw)

    def to_dict(self) -> dict:
        d = asdict(self)
        return d


@dataclass
class PlanResult:
    status: str
    strategy: StrategySubtree
    root_cost: float
    iterations: int
    wall_time: float
    tree: GameTree
    expansions: int = 0
    warm_start_time: float = 0.0
    trace: list = field(default_factory=list)

    @property
    def tree_size(self) -> int:
        return len(self.tree)


def warm_start(tree: GameTree, model: NhsModel, cfg: PlannerConfig, rng, budget: float | None = None,
               stop_at_goal: bool = True) -> int:
    """Explore the whole tree before strategy selection starts.

    Runs until the first goal leaf exists (if ``stop_at_goal``) or ``budget``
    seconds pass. Returns the number of expansions attempted.
    """
    if budget is None:
        budget = cfg.warm_start_frac * cfg.t_max if cfg.warm_start == "goal" else float(cfg.warm_start)
    if budget <= 0:
        return 0
    end = time.perf_counter() + budget
    everything = StrategySubtree(tree.root, {tree.root: None})
    pool = Pool.of(tree, model, cfg.explore, list(tree.nodes))
    n = 0
    while time.perf_counter() < end:
        if stop_at_goal and tree.goal_leaves:
            break
        if tree.solved_root or not len(pool):
            break
        if cfg.explore.max_nodes is not None and len(tree) >= cfg.explore.max_nodes:
            break
        before = len(tree)
        explore_once(tree, everything, model, cfg.explore, rng, pool)
        for nid in range(before, len(tree)):
            pool.add(nid)
        n += 1
    return n


def guided_expand(tree: GameTree, strategy: StrategySubtree, model: NhsModel, cfg: PlannerConfig, rng,
                  pool: Pool | None = None) -> StrategySubtree:
    """With probability p steer along an existing goal-reaching branch, else plain exploration."""
    params = cfg.explore
    if pool is None:
        pool = Pool.of(tree, model, params, list(strategy.members) + list(strategy.pool))
    if cfg.guided_prob <= 0 or not tree.goal_leaves or rng.random() >= cfg.guided_prob:
        return explore_once(tree, strategy, model, params, rng, pool)
    if params.max_nodes is not None and len(tree) >= params.max_nodes:
        return strategy
    leaf = tree.goal_leaves[int(rng.integers(len(tree.goal_leaves)))]
    path = tree.path_to(leaf)
    if len(path) < 2:
        return explore_once(tree, strategy, model, params, rng, pool)
    i = int(rng.integers(len(path) - 1))
    wp = tree.nodes[path[i]].state
    target = np.asarray(tree.nodes[path[i + 1]].state.x)
    w = params.weights(model.modes[wp.mode])
    nid = pool.nearest_same_dim(len(wp.x), wp.x, w)
    if nid is None:
        return explore_once(tree, strategy, model, params, rng, pool)
    node = tree.nodes[nid]
    mode = model.modes[node.state.mode]
    best, best_d = None, np.inf
    for _ in range(cfg.guided_candidates):
        c = sample_control_duration(mode, params, rng)
        seg, outs = propagate(model, node.state, c, record=False)
        if not outs or len(seg.final) != len(target):
            continue
        d = float(np.square(np.asarray(seg.final) - target) @ w)
        if d < best_d:
            best, best_d = (c, outs), d
    if best is not None:
        commit(tree, strategy, model, nid, best[0], pool, outs=best[1])
    return strategy


def prune_substrategy(strategy: StrategySubtree, tree: GameTree, rng, rho: float) -> StrategySubtree:
    """Replace chosen controls by "no action" with probability ``rho``.

    The root and nodes with zero cached cost are never pruned; the tree is
    left untouched.
    """
    if rho <= 0:
        return strategy
    out = StrategySubtree(strategy.root)
    stack = [strategy.root]
    nodes = tree.nodes
    while stack:
        n = stack.pop()
        out.members[n] = None
        c = strategy.choice.get(n)
        if c is None:
            continue
        if c != NO_ACTION and n != strategy.root and nodes[n].g < nodes[n].a and rng.random() < rho:
            c = NO_ACTION
        out.choice[n] = c
        if c != NO_ACTION:
            stack.extend(reversed(nodes[n].arms[c].children))
    return out


def run(model: NhsModel, cfg: PlannerConfig | None = None) -> PlanResult:
    cfg = cfg or PlannerConfig()
    rng = np.random.default_rng(cfg.seed)
    t0 = time.perf_counter()
    deadline = t0 + cfg.t_max
    s0 = model.initial
    tree = GameTree(s0, is_goal(model, s0), seed=cfg.seed)
    params = cfg.explore

    warm_time = 0.0
    expansions = 0
    if cfg.warm_start != "off" and not tree.solved_root:
        expansions += warm_start(tree, model, cfg, rng, stop_at_goal=cfg.warm_start == "goal")
        warm_time = time.perf_counter() - t0
        log.info("warm start: %d nodes, %d goal leaves in %.2fs", len(tree), len(tree.goal_leaves), warm_time)

    trace = []
    it = 0
    while root_min_q(tree) > 0 and time.perf_counter() < deadline:
        if cfg.max_iterations is not None and it >= cfg.max_iterations:
            break
        st = select_strategy(tree, tree.root, cfg.e)
        st = prune_substrategy(st, tree, rng, cfg.prune_prob)
        pool = Pool.of(tree, model, params, list(st.members))
        for _ in range(cfg.k):
            if cfg.guided_prob > 0:
                guided_expand(tree, st, model, cfg, rng, pool)
            else:
                explore_once(tree, st, model, params, rng, pool)
            expansions += 1
            if tree.solved_root or time.perf_counter() >= deadline:
                break
        it += 1
        trace.append({"iteration": it, "time": round(time.perf_counter() - t0, 6),
                      "root_cost": tree.root_cost, "nodes": len(tree)})
        log.debug("iteration %d: root cost %.4f, %d nodes", it, tree.root_cost, len(tree))

    wall = time.perf_counter() - t0
    if tree.solved_root:
        status = WINNING
        strategy = extract_winning(tree)
    else:
        status = ANYTIME if len(tree) > 1 else NO_PROGRESS
        strategy = select_strategy(tree, tree.root, 0.0, mutate=False)
    return PlanResult(status, strategy, tree.root_cost, it, wall, tree, expansions, warm_time, trace)
