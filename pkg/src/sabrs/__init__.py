"""Sampling-based reactive synthesis for nondeterministic hybrid systems."""

from .nhs import ControlInput, HybridState, ModelError, NhsModel, apply_jump, integrate_step, is_goal, propagate
from .planner import PlannerConfig, PlanResult, run
from .tree import GameTree, StrategySubtree, cost, qcost
from .ucb import extract_winning, select_strategy, ucb_value
from .validate import enumerate_branches, verify_winning

__all__ = [
    "ControlInput", "HybridState", "ModelError", "NhsModel", "apply_jump", "integrate_step", "is_goal",
    "propagate", "PlannerConfig", "PlanResult", "run", "GameTree", "StrategySubtree", "cost", "qcost",
    "extract_winning", "select_strategy", "ucb_value", "enumerate_branches", "verify_winning",
]
