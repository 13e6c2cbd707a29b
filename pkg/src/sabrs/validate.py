"""Exhaustive-adversary replay of a strategy.

Only the model semantics are shared with the planner: the replay re-integrates
every chosen control from the initial state and decides goal membership on the
replayed states. Cached tree counts are never read.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .nhs import HybridState, NhsModel, TrajectorySegment, is_goal, propagate
from .tree import NO_ACTION, GameTree, StrategySubtree

REPLAY_TOL = 1e-6

TERM_GOAL = "goal"
TERM_INVARIANT = "invariant-violated"
TERM_EXHAUSTED = "strategy-exhausted"


class ReplayMismatch(RuntimeError):
    """Replayed state differs from the state stored in the tree."""


@dataclass
class Step:
    mode: int
    segment: TrajectorySegment
    outcome: int  # adversary choice after this segment
    node: int  # tree node the control was applied at


@dataclass
class ExecutionBranch:
    steps: list = field(default_factory=list)
    terminal: str = TERM_EXHAUSTED
    leaf: int | None = None  # tree node where the branch ended
    final: HybridState | None = None

    @property
    def end_time(self) -> float:
        return sum(st.segment.end_time for st in self.steps)

    def modes(self) -> list[int]:
        """Modes visited, consecutive repeats collapsed."""
        seq = [st.mode for st in self.steps]
        if self.final is not None:
            seq.append(self.final.mode)
        return [q for i, q in enumerate(seq) if i == 0 or q != seq[i - 1]]

    def samples(self):
        """Yield ``(time, mode, x)`` along the whole branch."""
        t0 = 0.0
        for st in self.steps:
            seg = st.segment
            for t, x in zip(seg.times, seg.states):
                yield t0 + t, st.mode, x
            t0 += seg.end_time


@dataclass
class Certificate:
    certified: bool
    branches: list
    counterexample: ExecutionBranch | None = None

    @property
    def n_branches(self) -> int:
        return len(self.branches)


def _close(a, b, tol=REPLAY_TOL) -> bool:
    return len(a) == len(b) and all(abs(p - q) <= tol for p, q in zip(a, b))


def enumerate_branches(model: NhsModel, strategy: StrategySubtree, tree: GameTree,
                       tol: float = REPLAY_TOL) -> list[ExecutionBranch]:
    """Replay ``strategy`` from the model's initial state against every adversary choice."""
    s0 = model.initial
    root = tree.nodes[strategy.root]
    if root.state.mode != s0.mode or not _close(root.state.x, s0.x, tol):
        raise ReplayMismatch(f"strategy root {strategy.root} does not hold the model's initial state")
    out = []
    # items are (node id, replayed state, steps so far) or finished branches
    stack: list = [(strategy.root, s0, [])]
    while stack:
        item = stack.pop()
        if isinstance(item, ExecutionBranch):
            out.append(item)
            continue
        nid, s, steps = item
        c = strategy.choice.get(nid, NO_ACTION) if nid in strategy.members else NO_ACTION
        if c == NO_ACTION:
            term = TERM_GOAL if is_goal(model, s) else TERM_EXHAUSTED
            out.append(ExecutionBranch(steps, term, nid, s))
            continue
        arm = tree.nodes[nid].arms[c]
        seg, outs = propagate(model, s, arm.control, record=True)
        if not outs:
            out.append(ExecutionBranch(steps + [Step(s.mode, seg, -1, nid)], TERM_INVARIANT, nid, None))
            continue
        by_outcome = {tree.nodes[ch].outcome: ch for ch in arm.children}
        pending = []
        for o in outs:
            path = steps + [Step(s.mode, seg, o.target, nid)]
            ch = by_outcome.get(o.target)
            if ch is None:
                # the adversary has a move the strategy never accounted for
                pending.append(ExecutionBranch(path, TERM_GOAL if o.goal else TERM_EXHAUSTED, None, o.state))
                continue
            stored = tree.nodes[ch].state
            if stored.mode != o.state.mode or not _close(stored.x, o.state.x, tol):
                raise ReplayMismatch(f"node {ch}: replayed state {o.state} differs from stored {stored}")
            if o.goal:
                pending.append(ExecutionBranch(path, TERM_GOAL, ch, o.state))
            else:
                pending.append((ch, o.state, path))
        stack.extend(reversed(pending))
    return out


def verify_winning(model: NhsModel, strategy: StrategySubtree, tree: GameTree) -> Certificate:
    branches = enumerate_branches(model, strategy, tree)
    bad = next((b for b in branches if b.terminal != TERM_GOAL), None)
    return Certificate(bad is None, branches, bad)


# --- audits --------------------------------------------------------------------

def mode_dwell(branch: ExecutionBranch) -> dict:
    """Total time spent in each mode along the branch."""
    d: dict = {}
    for st in branch.steps:
        d[st.mode] = d.get(st.mode, 0.0) + st.segment.end_time
    return d


def region_dwell(branch: ExecutionBranch, inside) -> float:
    """Longest contiguous stretch of replayed samples for which ``inside(x)`` holds."""
    best = 0.0
    start = None
    for t, _, x in branch.samples():
        if inside(x):
            if start is None:
                start = t
            best = max(best, t - start)
        else:
            start = None
    return best


def max_clock(branch: ExecutionBranch, dim: int) -> float:
    return max((x[dim] for _, _, x in branch.samples()), default=0.0)


def audit(model: NhsModel, cert: Certificate) -> list[dict]:
    rows = []
    for i, b in enumerate(cert.branches):
        row = {
            "branch": i,
            "terminal": b.terminal,
            "leaf": b.leaf,
            "modes": [model.modes[q].name for q in b.modes()],
            "duration": b.end_time,
            "dwell": {model.modes[q].name: t for q, t in mode_dwell(b).items()},
            "nondeterministic_transitions": sum(st.segment.nondeterministic for st in b.steps),
        }
        if model.global_clock is not None:
            row["max_global_clock"] = max_clock(b, model.global_clock)
        rows.append(row)
    return rows
