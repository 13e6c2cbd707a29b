"""AND/OR search tree, strategy subtrees and the leaf-ratio cost."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .nhs import ControlInput, HybridState

NO_ACTION = -1


class TreeUsageError(ValueError):
    pass


class Arm:
    """A control tried at a node together with its AND-children."""

    __slots__ = ("control", "n_sel", "children", "g", "a")

    def __init__(self, control: ControlInput):
        self.control = control
        self.n_sel = 0
        self.children: list[int] = []
        self.g = 0
        self.a = 0


class Node:
    __slots__ = ("id", "state", "parent", "parent_arm", "outcome", "N", "arms", "is_goal", "g", "a", "best")

    def __init__(self, nid, state, parent=None, parent_arm=None, outcome=0, is_goal=False):
        self.id = nid
        self.state: HybridState = state
        self.parent = parent
        self.parent_arm = parent_arm
        self.outcome = outcome
        self.N = 0
        self.arms: list[Arm] = []
        self.is_goal = is_goal
        self.g = 1 if is_goal else 0
        self.a = 1
        self.best = -1

    @property
    def cost(self) -> float:
        return 1.0 - self.g / self.a

    @property
    def is_leaf(self) -> bool:
        return not self.arms


def _better(g1, a1, i1, g2, a2, i2) -> bool:
    """Strict order used to pick a node's best arm: cost, then larger a, then age."""
    l, r = g1 * a2, g2 * a1  # g1/a1 vs g2/a2 without rounding
    if l != r:
        return l > r
    if a1 != a2:
        return a1 > a2
    return i1 < i2


class GameTree:
    def __init__(self, root_state: HybridState, root_goal: bool = False, seed=None):
        self.nodes: dict[int, Node] = {}
        self.root = 0
        self.seed = seed
        self.goal_leaves: list[int] = []
        self.solved: list[int] = []  # nodes whose cached cost dropped to 0, drained by callers
        self._new(root_state, None, None, 0, root_goal)

    def __len__(self):
        return len(self.nodes)

    def __getitem__(self, nid) -> Node:
        return self.nodes[nid]

    def _new(self, state, parent, arm, outcome, goal) -> int:
        nid = len(self.nodes)
        self.nodes[nid] = Node(nid, state, parent, arm, outcome, goal)
        if goal:
            self.goal_leaves.append(nid)
        return nid

    @property
    def root_cost(self) -> float:
        return self.nodes[self.root].cost

    @property
    def solved_root(self) -> bool:
        r = self.nodes[self.root]
        return r.g == r.a

    def add_expansion(self, n: int, c: ControlInput, outcomes, outcome_indices=None) -> list[int]:
        """Append control ``c`` at ``n`` with one child per outcome, then back up counts.

        ``outcomes`` is a list of ``(HybridState, goal flag)``. ``outcome_indices``
        records which adversary choice each child represents (defaults to
        0..len-1); only the single-trajectory baseline passes a partial set.
        """
        node = self.nodes[n]
        if node.is_goal:
            raise TreeUsageError(f"node {n} is a goal leaf and cannot be expanded")
        if not outcomes:
            raise TreeUsageError("an expansion needs at least one outcome")
        if outcome_indices is None:
            outcome_indices = range(len(outcomes))
        arm = Arm(c)
        ai = len(node.arms)
        node.arms.append(arm)
        for (state, goal), oi in zip(outcomes, outcome_indices):
            arm.children.append(self._new(state, n, ai, oi, bool(goal)))
        self._backup(n, ai)
        return list(arm.children)

    # -- backup ------------------------------------------------------------

    def _refresh_arm(self, node: Node, ai: int):
        arm = node.arms[ai]
        g = a = 0
        nodes = self.nodes
        for c in arm.children:
            ch = nodes[c]
            g += ch.g
            a += ch.a
        old = (arm.g, arm.a)
        arm.g, arm.a = g, a
        b = node.best
        if b == -1:
            node.best = ai
        elif b == ai:
            if _better(old[0], old[1], ai, g, a, ai):  # best arm got worse
                self._rescan(node)
        elif _better(g, a, ai, node.arms[b].g, node.arms[b].a, b):
            node.best = ai

    def _rescan(self, node: Node):
        best = 0
        arms = node.arms
        for i in range(1, len(arms)):
            if _better(arms[i].g, arms[i].a, i, arms[best].g, arms[best].a, best):
                best = i
        node.best = best

    def _backup(self, nid: int, ai: int | None):
        nodes = self.nodes
        node = nodes[nid]
        if ai is None:
            for i in range(len(node.arms)):
                self._refresh_arm(node, i)
            if node.arms:
                self._rescan(node)
        else:
            self._refresh_arm(node, ai)
        while True:
            if node.arms:
                b = node.arms[node.best]
                g, a = b.g, b.a
            else:
                g, a = (1, 1) if node.is_goal else (0, 1)
            if (g, a) == (node.g, node.a):
                return
            was_solved = node.g == node.a
            node.g, node.a = g, a
            if g == a and not was_solved:
                self.solved.append(node.id)
            if node.parent is None:
                return
            parent = nodes[node.parent]
            self._refresh_arm(parent, node.parent_arm)
            node = parent

    def backpropagate(self, nid: int) -> None:
        """Recompute ``nid`` from its children and push changes to the root."""
        if nid not in self.nodes:
            raise TreeUsageError(f"unknown node {nid}")
        self._backup(nid, None)

    # -- queries -------------------------------------------------------------

    def best_arm(self, nid: int) -> int:
        return self.nodes[nid].best

    def path_to(self, nid: int) -> list[int]:
        path = []
        while nid is not None:
            path.append(nid)
            nid = self.nodes[nid].parent
        return path[::-1]

    def arm_counts(self, nid: int, ai: int) -> tuple[int, int]:
        arm = self.nodes[nid].arms[ai]
        return arm.g, arm.a


@dataclass
class StrategySubtree:
    """One control per included OR node, every outcome per chosen control.

    ``choice`` maps member nodes to an arm index or ``NO_ACTION``; members
    absent from ``choice`` are leaves. ``pool`` holds extra nodes grown while
    exploring from this strategy; they are eligible for expansion during the
    current batch but are not part of the subtree.
    """

    root: int
    members: dict = field(default_factory=dict)
    choice: dict = field(default_factory=dict)
    pool: dict = field(default_factory=dict)

    def __contains__(self, nid):
        return nid in self.members

    def add(self, nid):
        self.members[nid] = None

    def leaves(self) -> list[int]:
        return [n for n in self.members if self.choice.get(n, NO_ACTION) == NO_ACTION]

    def copy(self) -> "StrategySubtree":
        return StrategySubtree(self.root, dict(self.members), dict(self.choice), dict(self.pool))


def strategy_counts(tree: GameTree, st: StrategySubtree, n: int) -> tuple[int, int]:
    """(goal leaves, all leaves) of the strategy below ``n``."""
    if n not in st.members:
        raise TreeUsageError(f"node {n} is not in the strategy")
    g = a = 0
    stack = [n]
    nodes = tree.nodes
    while stack:
        v = stack.pop()
        c = st.choice.get(v, NO_ACTION)
        if c == NO_ACTION:
            a += 1
            g += nodes[v].is_goal
        else:
            stack.extend(nodes[v].arms[c].children)
    return g, a


def cost(tree: GameTree, st: StrategySubtree, n: int, exact: bool = False):
    g, a = strategy_counts(tree, st, n)
    r = 1 - Fraction(g, a)
    return r if exact else float(r)


def qcost(tree: GameTree, st: StrategySubtree, n: int, ai: int, exact: bool = False):
    """Cost of taking arm ``ai`` at ``n`` then following ``st``.

    Children outside the strategy contribute their cached best counts.
    """
    node = tree.nodes[n]
    if not 0 <= ai < len(node.arms):
        raise TreeUsageError(f"node {n} has no control {ai}")
    g = a = 0
    for c in node.arms[ai].children:
        if c in st.members:
            cg, ca = strategy_counts(tree, st, c)
        else:
            cg, ca = tree.nodes[c].g, tree.nodes[c].a
        g += cg
        a += ca
    r = 1 - Fraction(g, a)
    return r if exact else float(r)


# --- subtree well-formedness -------------------------------------------------

def edges_in_tree(tree: GameTree, st: StrategySubtree) -> bool:
    """Members and the edges they use exist in the tree and hang off the root."""
    for n in st.members:
        if n not in tree.nodes:
            return False
        if n == st.root:
            continue
        p = tree.nodes[n].parent
        if p not in st.members or st.choice.get(p, NO_ACTION) != tree.nodes[n].parent_arm:
            return False
    for n, c in st.choice.items():
        if n not in st.members:
            return False
    return True


def contains_root(tree: GameTree, st: StrategySubtree) -> bool:
    return st.root == tree.root and tree.root in st.members


def one_control_per_or_node(tree: GameTree, st: StrategySubtree, allow_no_action: bool = False) -> bool:
    for n in st.members:
        node = tree.nodes[n]
        c = st.choice.get(n)
        if node.arms and not node.is_goal:
            if c is None:
                return False
            if c == NO_ACTION:
                if not allow_no_action:
                    return False
            elif not 0 <= c < len(node.arms):
                return False
        elif c is not None and c != NO_ACTION:
            return False
    return True


def all_outcomes_included(tree: GameTree, st: StrategySubtree) -> bool:
    for n, c in st.choice.items():
        if c == NO_ACTION:
            continue
        if any(ch not in st.members for ch in tree.nodes[n].arms[c].children):
            return False
    return True


def well_formed(tree: GameTree, st: StrategySubtree, allow_no_action: bool = False) -> bool:
    return (
        edges_in_tree(tree, st)
        and contains_root(tree, st)
        and one_control_per_or_node(tree, st, allow_no_action)
        and all_outcomes_included(tree, st)
    )
