"""Strategy export/import, run reports and certificates as JSON documents."""

from __future__ import annotations

import json
from pathlib import Path

from .nhs import ControlInput, HybridState, NhsModel
from .planner import PlannerConfig, PlanResult
from .tree import NO_ACTION, Arm, GameTree, Node, StrategySubtree
from .validate import Certificate, audit

FORMAT = "sabrs-strategy/1"


class ExportError(ValueError):
    pass


def strategy_document(model: NhsModel, tree: GameTree, strategy: StrategySubtree, full_tree: bool = False,
                      meta: dict | None = None) -> dict:
    """Plain-data description of the strategy (or the whole tree).

    Every exported node lists all of its controls so that choice indices stay
    valid; edges are written for controls whose children are all exported.
    """
    ids = sorted(tree.nodes) if full_tree else sorted(strategy.members)
    keep = set(ids)
    nodes, controls, edges = [], [], []
    for nid in ids:
        n = tree.nodes[nid]
        nodes.append({
            "id": nid, "mode": n.state.mode, "x": list(n.state.x), "is_goal": n.is_goal,
            "parent": n.parent, "control": n.parent_arm, "outcome": n.outcome,
        })
        for ai, arm in enumerate(n.arms):
            controls.append({"node": nid, "index": ai, "u": list(arm.control.u),
                             "duration": arm.control.duration, "N_uc": arm.n_sel})
            if arm.children and all(c in keep for c in arm.children):
                for c in arm.children:
                    edges.append({"parent": nid, "control": ai, "outcome": tree.nodes[c].outcome, "child": c})
    choice = {str(n): strategy.choice.get(n, NO_ACTION) for n in sorted(strategy.members)}
    doc = {"format": FORMAT}
    doc.update(meta or {})
    doc.update({
        "model": model.to_dict(),
        "root": strategy.root,
        "nodes": nodes,
        "controls": controls,
        "edges": edges,
        "strategy": choice,
    })
    return doc


def dumps(doc: dict) -> str:
    return json.dumps(doc, indent=1) + "\n"


def write_json(path, doc: dict) -> None:
    Path(path).write_text(dumps(doc), encoding="utf-8")


def read_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ExportError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None


def load_strategy(doc: dict) -> tuple[NhsModel, GameTree, StrategySubtree]:
    """Rebuild the model, a (partial) tree and the strategy from an export."""
    if not isinstance(doc, dict) or doc.get("format") != FORMAT:
        raise ExportError("not a strategy export")
    try:
        model = NhsModel(doc["model"])
        tree = GameTree.__new__(GameTree)
        tree.nodes = {}
        tree.root = int(doc["root"])
        tree.seed = doc.get("seed")
        tree.goal_leaves = []
        tree.solved = []
        for nd in doc["nodes"]:
            n = Node(int(nd["id"]), HybridState(int(nd["mode"]), tuple(float(v) for v in nd["x"])),
                     nd["parent"], nd["control"], int(nd["outcome"]), bool(nd["is_goal"]))
            tree.nodes[n.id] = n
            if n.is_goal:
                tree.goal_leaves.append(n.id)
        for c in sorted(doc["controls"], key=lambda c: (c["node"], c["index"])):
            node = tree.nodes[int(c["node"])]
            if int(c["index"]) != len(node.arms):
                raise ExportError(f"node {node.id}: control indices are not contiguous")
            arm = Arm(ControlInput(tuple(float(v) for v in c["u"]), float(c["duration"])))
            arm.n_sel = int(c.get("N_uc", 0))
            node.arms.append(arm)
        for e in doc["edges"]:
            tree.nodes[int(e["parent"])].arms[int(e["control"])].children.append(int(e["child"]))
        if tree.root not in tree.nodes:
            raise ExportError("root node missing")
        st = StrategySubtree(tree.root)
        for k, v in doc["strategy"].items():
            nid, ai = int(k), int(v)
            if nid not in tree.nodes:
                raise ExportError(f"strategy names unknown node {nid}")
            st.members[nid] = None
            if ai != NO_ACTION or tree.nodes[nid].arms:
                st.choice[nid] = ai
    except ExportError:
        raise
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise ExportError(f"malformed strategy export: {exc!r}") from None
    for nid, ai in list(st.choice.items()):
        if ai == NO_ACTION:
            continue
        arm = tree.nodes[nid].arms[ai] if 0 <= ai < len(tree.nodes[nid].arms) else None
        if arm is None:
            raise ExportError(f"node {nid}: chosen control {ai} does not exist")
        if any(c not in st.members for c in arm.children):
            raise ExportError(f"node {nid}: strategy is missing outcome children")
    # strategy leaves without controls are not choices
    for nid in list(st.choice):
        if not tree.nodes[nid].arms:
            del st.choice[nid]
    return model, tree, st


def run_report(model: NhsModel, cfg: PlannerConfig, result: PlanResult, cert: Certificate | None = None) -> dict:
    tree = result.tree
    depth = {}
    for nid in sorted(tree.nodes):
        p = tree.nodes[nid].parent
        depth[nid] = 0 if p is None else depth[p] + 1
    modes: dict = {}
    for n in tree.nodes.values():
        name = model.modes[n.state.mode].name
        modes[name] = modes.get(name, 0) + 1
    rep = {
        "model": model.name,
        "config": cfg.to_dict(),
        "status": result.status,
        "root_cost": result.root_cost,
        "iterations": result.iterations,
        "expansions": result.expansions,
        "wall_time": result.wall_time,
        "warm_start_time": result.warm_start_time,
        "tree": {
            "nodes": len(tree),
            "goal_leaves": len(tree.goal_leaves),
            "max_depth": max(depth.values()),
            "nodes_per_mode": modes,
        },
        "strategy_nodes": len(result.strategy.members),
        "trace": result.trace,
    }
    if cert is not None:
        rep["certified"] = cert.certified
    return rep


def certificate_document(model: NhsModel, cert: Certificate) -> dict:
    rows = audit(model, cert)
    doc = {"model": model.name, "certified": cert.certified, "n_branches": cert.n_branches, "branches": rows}
    if cert.counterexample is not None:
        i = cert.branches.index(cert.counterexample)
        doc["counterexample"] = {"branch": i, "terminal": cert.counterexample.terminal,
                                 "leaf": cert.counterexample.leaf}
    return doc
