"""Nondeterministic hybrid system models and their execution semantics."""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, NamedTuple, Sequence

import yaml

from .flows import FlowError, make_flow, make_jump
from .predicates import PredicateError, box_hull, compile_predicate

DEFAULT_H = 0.01
DEFAULT_EVENT_TOL = 1e-4

DURATION = "duration-elapsed"
GUARD = "guard"
GOAL = "goal"
INVARIANT = "invariant-violated"


class ModelError(ValueError):
    """Malformed or inconsistent model description."""


class HybridState(NamedTuple):
    mode: int
    x: tuple


class ControlInput(NamedTuple):
    u: tuple
    duration: float


class Outcome(NamedTuple):
    state: HybridState
    goal: bool
    target: int  # adversary choice: index into the guard's target list


@dataclass
class TrajectorySegment:
    mode: int
    control: ControlInput
    times: list
    states: list
    event: str
    guard: int | None = None
    nondeterministic: bool = False

    @property
    def end_time(self) -> float:
        return self.times[-1]

    @property
    def final(self) -> tuple:
        return self.states[-1]


@dataclass
class Guard:
    name: str
    trigger: Callable
    targets: list  # [(mode id, jump fn)]
    atoms: list


@dataclass
class Mode:
    index: int
    name: str
    dim: int
    n_ctrl: int
    flow: Callable
    u_lo: tuple
    u_hi: tuple
    invariant: Callable
    goal: Callable
    has_goal: bool
    guards: list
    lo: tuple
    hi: tuple
    clocks: list
    local_clocks: list
    nn_weights: tuple
    goal_box: tuple | None = None
    spec: dict = field(default_factory=dict, repr=False)


def _err(path, msg):
    return ModelError(f"{path}: {msg}")


def _vec(v, n, path, what):
    try:
        out = tuple(float(a) for a in v)
    except (TypeError, ValueError):
        raise _err(path, f"{what} must be a list of numbers") from None
    if n is not None and len(out) != n:
        raise _err(path, f"{what} has length {len(out)}, expected {n}")
    return out


class NhsModel:
    """Compiled NHS built from a plain-data document (see ``to_dict``)."""

    def __init__(self, doc: dict):
        self.doc = copy.deepcopy(doc)
        modes_doc = doc.get("modes")
        if not modes_doc:
            raise ModelError("modes: at least one mode is required")
        self.name = doc.get("name", "model")
        names = []
        for i, m in enumerate(modes_doc):
            names.append(str(m.get("name", f"q{i}")))
        if len(set(names)) != len(names):
            raise ModelError("modes: duplicate mode names")
        self.mode_index = {n: i for i, n in enumerate(names)}

        integ = doc.get("integrator") or {}
        self.h = float(integ.get("h", DEFAULT_H))
        self.event_tol = float(integ.get("event_tol", DEFAULT_EVENT_TOL))
        if self.h <= 0 or self.event_tol <= 0:
            raise ModelError("integrator: h and event_tol must be positive")
        gc = doc.get("global_clock")
        self.global_clock = None if gc is None else int(gc)

        self.modes = [self._compile_mode(i, m) for i, m in enumerate(modes_doc)]
        for mode, m in zip(self.modes, modes_doc):
            self._compile_guards(mode, m)

        init = doc.get("initial") or {}
        q0 = self._mode_ref(init.get("mode", 0), "initial.mode")
        x0 = _vec(init.get("x", []), self.modes[q0].dim, "initial.x", "state")
        self.initial = HybridState(q0, x0)
        if not self.modes[q0].invariant(x0):
            raise ModelError("initial: initial state violates its mode invariant")
        self.scene = doc.get("scene") or []

    # -- construction --------------------------------------------------------

    def _mode_ref(self, ref, path) -> int:
        if isinstance(ref, str):
            if ref not in self.mode_index:
                raise _err(path, f"unknown mode {ref!r}")
            return self.mode_index[ref]
        if isinstance(ref, bool) or not isinstance(ref, int) or not 0 <= ref < len(self.mode_index):
            raise _err(path, f"invalid mode reference {ref!r}")
        return ref

    def _compile_mode(self, i, m) -> Mode:
        path = f"modes[{i}]"
        try:
            dim = int(m["dim"])
        except (KeyError, TypeError, ValueError):
            raise _err(path, "dim is required") from None
        clocks_doc = m.get("clocks") or {}
        g_clocks = [int(c) for c in clocks_doc.get("global", [])]
        l_clocks = [int(c) for c in clocks_doc.get("local", [])]
        clocks = sorted(g_clocks + l_clocks)
        try:
            flow, n_ctrl = make_flow(m.get("flow") or {}, dim, clocks)
        except (FlowError, KeyError, TypeError) as exc:
            raise _err(f"{path}.flow", str(exc)) from None
        cb = m.get("control_box") or {}  # absent: the control is pinned to zero
        u_lo = _vec(cb.get("lo", [0.0] * n_ctrl), n_ctrl, f"{path}.control_box", "lo")
        u_hi = _vec(cb.get("hi", [0.0] * n_ctrl), n_ctrl, f"{path}.control_box", "hi")
        if any(a > b for a, b in zip(u_lo, u_hi)):
            raise _err(f"{path}.control_box", "lower bound exceeds upper bound")
        bounds = m.get("bounds") or {}
        lo = _vec(bounds.get("lo", [0.0] * dim), dim, f"{path}.bounds", "lo")
        hi = _vec(bounds.get("hi", [1.0] * dim), dim, f"{path}.bounds", "hi")
        if any(a > b for a, b in zip(lo, hi)):
            raise _err(f"{path}.bounds", "lower bound exceeds upper bound")
        if "nn_weights" in m:
            w = _vec(m["nn_weights"], dim, path, "nn_weights")
            if any(v < 0 for v in w):
                raise _err(path, "nn_weights must be non-negative")
        else:
            w = tuple(0.0 if d in clocks else 1.0 for d in range(dim))
        try:
            inv = compile_predicate(m.get("invariant"), default=True)
            goal_atoms = m.get("goal")
            goal = compile_predicate(goal_atoms, default=False)
        except PredicateError as exc:
            raise _err(path, str(exc)) from None
        goal_box = None
        if goal_atoms is not None:
            goal_box = box_hull(goal_atoms, dim, lo, hi)
        return Mode(
            index=i, name=str(m.get("name", f"q{i}")), dim=dim, n_ctrl=n_ctrl, flow=flow,
            u_lo=u_lo, u_hi=u_hi, invariant=inv, goal=goal, has_goal=goal_atoms is not None,
            guards=[], lo=lo, hi=hi, clocks=clocks, local_clocks=sorted(l_clocks),
            nn_weights=w, goal_box=goal_box, spec=m,
        )

    def _compile_guards(self, mode: Mode, m):
        for gi, g in enumerate(m.get("guards") or []):
            path = f"modes[{mode.index}].guards[{gi}]"
            try:
                trig = compile_predicate(g.get("trigger"), default=False)
            except PredicateError as exc:
                raise _err(path, str(exc)) from None
            targets = []
            for ti, t in enumerate(g.get("targets") or []):
                tpath = f"{path}.targets[{ti}]"
                q2 = self._mode_ref(t.get("mode"), f"{tpath}.mode")
                try:
                    jump, n_out = make_jump(t.get("jump"), mode.dim)
                except (FlowError, KeyError, TypeError) as exc:
                    raise _err(f"{tpath}.jump", str(exc)) from None
                if n_out != self.modes[q2].dim:
                    raise _err(f"{tpath}.jump", f"maps to dim {n_out}, target mode has dim {self.modes[q2].dim}")
                targets.append((q2, jump))
            if not targets:
                raise _err(path, "guard needs at least one target")
            mode.guards.append(Guard(str(g.get("name", f"g{gi}")), trig, targets, g.get("trigger") or []))

    # -- views ---------------------------------------------------------------

    @classmethod
    def from_dict(cls, doc: dict) -> "NhsModel":
        return cls(doc)

    @classmethod
    def load(cls, path) -> "NhsModel":
        return cls(load_document(path))

    def to_dict(self) -> dict:
        return copy.deepcopy(self.doc)

    def dump(self, path) -> None:
        Path(path).write_text(yaml.safe_dump(self.doc, sort_keys=False), encoding="utf-8")

    @property
    def edges(self) -> set:
        return {(m.index, q2) for m in self.modes for g in m.guards for q2, _ in g.targets}

    def nondeterministic_guards(self) -> list:
        return [(m.index, gi) for m in self.modes for gi, g in enumerate(m.guards) if len(g.targets) > 1]

    def relaxed(self) -> "NhsModel":
        """Deterministic relaxation: every guard keeps only its first target."""
        doc = self.to_dict()
        for m in doc["modes"]:
            for g in m.get("guards") or []:
                g["targets"] = g["targets"][:1]
        doc["name"] = f"{self.name}-relaxed"
        return NhsModel(doc)

    def mode_by_name(self, name: str) -> Mode:
        return self.modes[self.mode_index[name]]


def load_document(path) -> dict:
    text = Path(path).read_text(encoding="utf-8")
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"{path}:{mark.line + 1}:{mark.column + 1}" if mark else str(path)
        raise ModelError(f"{where}: {getattr(exc, 'problem', exc)}") from None
    if not isinstance(doc, dict):
        raise ModelError(f"{path}: top level must be a mapping")
    return doc


# --- semantics ---------------------------------------------------------------

def _rk4(f, x, u, h):
    k1 = f(x, u)
    hh = 0.5 * h
    k2 = f([a + hh * b for a, b in zip(x, k1)], u)
    k3 = f([a + hh * b for a, b in zip(x, k2)], u)
    k4 = f([a + h * b for a, b in zip(x, k3)], u)
    # (k1 + 2k2 + 2k3 + k4) / 6 keeps unit-rate clocks exact
    return tuple(
        a + h * ((b1 + 2.0 * b2 + 2.0 * b3 + b4) / 6.0)
        for a, b1, b2, b3, b4 in zip(x, k1, k2, k3, k4)
    )


def integrate_step(model: NhsModel, s: HybridState, u: Sequence[float], h: float) -> tuple:
    """One classical RK4 step of the mode flow."""
    if h <= 0:
        raise ValueError("step must be positive")
    return _rk4(model.modes[s.mode].flow, s.x, tuple(u), h)


def apply_jump(model: NhsModel, q: int, q_next: int, x: Sequence[float]) -> tuple:
    """Reset map for the ``q -> q_next`` transition, with local clocks zeroed."""
    for g in model.modes[q].guards:
        for q2, jump in g.targets:
            if q2 == q_next:
                return _jump(model, q2, jump, x)
    raise ModelError(f"no jump defined from mode {q} to mode {q_next}")


def _jump(model, q2, jump, x):
    y = jump(x)
    local = model.modes[q2].local_clocks
    if local:
        y = list(y)
        for d in local:
            y[d] = 0.0
        y = tuple(y)
    return y


def is_goal(model: NhsModel, s: HybridState) -> bool:
    return bool(model.modes[s.mode].goal(s.x))


def propagate(model: NhsModel, s: HybridState, c: ControlInput, record: bool = True):
    """Integrate control ``c`` from ``s`` until an event or the duration ends.

    Each step checks the invariant, then the goal, then guards in declaration
    order. Guards are edge-triggered: a guard already true at the start of the
    segment fires only after it has become false again. A firing guard is
    bracketed by bisection to ``model.event_tol`` seconds.

    Returns ``(segment, outcomes)``. Outcomes are empty when the trajectory is
    invalid (invariant violated before the event, or a post-jump state outside
    its target mode's invariant).
    """
    q = s.mode
    mode = model.modes[q]
    f = mode.flow
    inv = mode.invariant
    goal = mode.goal
    guards = mode.guards
    u = tuple(c.u)
    T = float(c.duration)
    h = model.h
    x = tuple(s.x)
    armed = [not g.trigger(x) for g in guards]
    times = [0.0]
    states = [x]
    n = max(1, math.ceil(T / h - 1e-9))
    t_prev = 0.0

    def seg(event, gi=None, nondet=False):
        return TrajectorySegment(q, c, times, states, event, gi, nondet)

    for k in range(1, n + 1):
        t = T if k == n else k * h
        x_new = _rk4(f, x, u, t - t_prev)
        if not inv(x_new):
            times.append(t)
            states.append(x_new)
            return seg(INVARIANT), []
        if goal(x_new):
            times.append(t)
            states.append(x_new)
            return seg(GOAL), [Outcome(HybridState(q, x_new), True, 0)]
        for gi, g in enumerate(guards):
            on = g.trigger(x_new)
            if on and armed[gi]:
                dt, x_ev = _refine(f, x, u, t - t_prev, g.trigger, model.event_tol)
                times.append(t_prev + dt)
                states.append(x_ev)
                nondet = len(g.targets) > 1
                if not inv(x_ev):
                    return seg(INVARIANT, gi, nondet), []
                outs = []
                for ti, (q2, jump) in enumerate(g.targets):
                    y = _jump(model, q2, jump, x_ev)
                    m2 = model.modes[q2]
                    if not m2.invariant(y):
                        return seg(INVARIANT, gi, nondet), []
                    outs.append(Outcome(HybridState(q2, y), bool(m2.goal(y)), ti))
                return seg(GUARD, gi, nondet), outs
            armed[gi] = not on
        x, t_prev = x_new, t
        if record:
            times.append(t)
            states.append(x_new)
    if not record:
        times.append(t_prev)
        states.append(x)
    return seg(DURATION), [Outcome(HybridState(q, x), False, 0)]


def _refine(f, x0, u, dt, trigger, tol):
    """Bisect ``(0, dt]`` for the first time the trigger holds."""
    lo, hi = 0.0, dt
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if trigger(_rk4(f, x0, u, mid)):
            hi = mid
        else:
            lo = mid
    return hi, _rk4(f, x0, u, hi)
