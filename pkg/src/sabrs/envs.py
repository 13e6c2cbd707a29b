"""Benchmark model builders.

Every builder returns an :class:`NhsModel` whose document is plain data, so
the same models ship as YAML files under ``sabrs/models``.
"""

from __future__ import annotations

import math
from pathlib import Path

from .nhs import NhsModel, load_document

MODEL_DIR = Path(__file__).parent / "models"

GLOBAL_DEADLINE = 120.0  # s, whole mission
SEARCH_DEADLINE = 10.0  # s, to search an open room
EXIT_DEADLINE = 20.0  # s, to reach the exit after the last room outcome
DRY_DWELL = 10.0  # s on the carpet before a wet robot counts as dry

PI = round(math.pi, 6)


# --- atom helpers -----------------------------------------------------------

def box(lo, hi, dims=(0, 1)):
    return {"box": {"dims": list(dims), "lo": list(lo), "hi": list(hi)}}


def outside(lo, hi, dims=(0, 1)):
    return {"not": box(lo, hi, dims)}


def cmp(dim, op, value):
    return {"cmp": {"dim": dim, "op": op, "value": value}}


def touches(lo, hi, radius, dims=(0, 1)):
    return {"disk_box": {"dims": list(dims), "radius": radius, "lo": list(lo), "hi": list(hi)}}


def inflate(lo, hi, r):
    return [lo[0] - r, lo[1] - r], [hi[0] + r, hi[1] + r]


def target(mode):
    return {"mode": mode, "jump": {"id": "identity"}}


def _scene(role, lo, hi):
    return {"kind": "box", "role": role, "lo": list(lo), "hi": list(hi)}


def _free_space(width, height, obstacles, r):
    """Centre-point invariant for a disk of radius ``r`` among box obstacles."""
    atoms = [box([r, r], [width - r, height - r])]
    for lo, hi in obstacles:
        atoms.append(outside(*inflate(lo, hi, r)))
    return atoms


# --- three-gear car ---------------------------------------------------------

GEARS = {
    # name: (v_min, v_max, accel lo, accel hi)
    "g1": (0.0, 2.5, -1.0, 1.5),
    "g2": (0.3, 2.5, -1.0, 1.0),
    "g3": (1.0, 3.5, -1.0, 0.6),
}
UPSHIFT = {"g1": 1.0, "g2": 1.5}
DOWNSHIFT = {"g2": 0.5, "g3": 1.2}
GEAR_GOAL = ([12.0, 3.0], [14.0, 7.0])
GEAR_GOAL_SPEED = 2.0
GEAR_BODY = 0.2

# obstacle boxes per environment, clutter grows with the id
GEAR_ENVS = {
    1: [([6.5, 4.2], [7.5, 5.8])],
    2: [([5.0, 2.0], [6.0, 4.6]), ([8.5, 5.4], [9.5, 8.0])],
    3: [([4.5, 0.0], [5.5, 3.8]), ([4.5, 6.2], [5.5, 10.0]), ([8.5, 3.2], [9.5, 6.8])],
    4: [([4.0, 0.0], [4.8, 4.2]), ([4.0, 5.8], [4.8, 10.0]),
        ([8.0, 2.8], [8.8, 7.2]), ([10.4, 0.0], [11.0, 2.6]), ([10.4, 7.4], [11.0, 10.0])],
}


def build_gear_car(case: int = 1, env: int = 1) -> NhsModel:
    """Three-gear second-order car that may mis-shift.

    Case 1: the 2->3 upshift may land in gear 1. Case 2 adds: the 3->1
    downshift may land in gear 2. The goal box must be entered at speed
    >= 2 m/s, which is only reachable after the 2->3 shift.
    """
    if case not in (1, 2):
        raise ValueError("case must be 1 or 2")
    if env not in GEAR_ENVS:
        raise ValueError(f"env must be one of {sorted(GEAR_ENVS)}")
    W, H = 16.0, 10.0
    obstacles = GEAR_ENVS[env]
    free = _free_space(W, H, obstacles, GEAR_BODY)
    goal = [box(*GEAR_GOAL), cmp(3, ">=", GEAR_GOAL_SPEED)]
    shifts = {
        "g1": [("upshift", cmp(3, ">=", UPSHIFT["g1"]), ["g2"])],
        "g2": [
            ("upshift", cmp(3, ">=", UPSHIFT["g2"]), ["g3", "g1"]),
            ("downshift", cmp(3, "<=", DOWNSHIFT["g2"]), ["g1"]),
        ],
        "g3": [("downshift", cmp(3, "<=", DOWNSHIFT["g3"]), ["g1", "g2"] if case == 2 else ["g1"])],
    }
    modes = []
    for name, (v_lo, v_hi, a_lo, a_hi) in GEARS.items():
        modes.append({
            "name": name,
            "dim": 4,
            "flow": {"id": "second_order_car", "params": {"v_min": v_lo, "v_max": v_hi}},
            "control_box": {"lo": [a_lo, -1.0], "hi": [a_hi, 1.0]},
            "bounds": {"lo": [0.0, 0.0, -PI, v_lo], "hi": [W, H, PI, v_hi]},
            "nn_weights": [1.0, 1.0, 0.25, 0.5],
            "invariant": free,
            "goal": goal,
            "guards": [{"name": g, "trigger": [trig], "targets": [target(t) for t in ts]}
                       for g, trig, ts in shifts[name]],
        })
    scene = [_scene("obstacle", lo, hi) for lo, hi in obstacles] + [_scene("goal", *GEAR_GOAL)]
    return NhsModel({
        "name": f"gear_case{case}_env{env}",
        "integrator": {"h": 0.05, "event_tol": 1e-4},
        "modes": modes,
        "initial": {"mode": "g1", "x": [1.0, 5.0, 0.0, 0.0]},
        "scene": scene,
        "workspace": [W, H],
    })


# --- robotic charging -------------------------------------------------------

CHARGE_R = 0.3  # footprint radius used for the puddle test
CARPET = ([6.5, 0.5], [9.5, 3.0])
CHARGER = ([8.3, 4.4], [9.5, 5.6])

CHARGING_LAYOUTS = {
    # wall with an opening; the puddle fills part (spaced) or all (cluttered) of it
    "spaced": {
        "walls": [([4.6, 0.0], [5.4, 3.0]), ([4.6, 7.0], [5.4, 10.0])],
        "puddle": ([4.6, 4.2], [5.4, 5.8]),
    },
    "cluttered": {
        "walls": [([4.6, 0.0], [5.4, 4.2]), ([4.6, 5.8], [5.4, 10.0])],
        "puddle": ([4.6, 4.2], [5.4, 5.8]),
    },
}


def build_charging(variant: str = "cluttered") -> NhsModel:
    """Car that must reach the charger dry within two minutes.

    State (x, y, heading, speed, t, t1). Touching the puddle with the inflated
    footprint may or may not wet the robot. A wet robot must stay on the
    carpet for 10 s (``drying`` mode) before it counts as dry again.
    """
    if variant not in CHARGING_LAYOUTS:
        raise ValueError(f"variant must be one of {sorted(CHARGING_LAYOUTS)}")
    lay = CHARGING_LAYOUTS[variant]
    W, H = 10.0, 10.0
    free = _free_space(W, H, lay["walls"], CHARGE_R) + [cmp(4, "<=", GLOBAL_DEADLINE)]
    base = {
        "dim": 6,
        "flow": {"id": "second_order_car", "params": {"v_min": 0.0, "v_max": 1.0}},
        "clocks": {"global": [4], "local": [5]},
        "control_box": {"lo": [-1.0, -1.5], "hi": [1.0, 1.5]},
        "bounds": {"lo": [0.0, 0.0, -PI, 0.0, 0.0, 0.0], "hi": [W, H, PI, 1.0, GLOBAL_DEADLINE, 15.0]},
        "nn_weights": [1.0, 1.0, 0.25, 0.25, 0.0, 0.0],
    }
    dry = dict(base, name="dry", invariant=free, goal=[box(*CHARGER)], guards=[
        {"name": "puddle", "trigger": [touches(*lay["puddle"], CHARGE_R)], "targets": [target("dry"), target("wet")]},
    ])
    wet = dict(base, name="wet", invariant=free, guards=[
        {"name": "carpet", "trigger": [box(*CARPET)], "targets": [target("drying")]},
    ])
    drying = dict(base, name="drying", invariant=free + [box(*CARPET)],
                  nn_weights=[1.0, 1.0, 0.25, 0.25, 0.0, 0.5], guards=[
        {"name": "dried", "trigger": [cmp(5, ">=", DRY_DWELL)], "targets": [target("dry")]},
    ])
    scene = ([_scene("obstacle", lo, hi) for lo, hi in lay["walls"]]
             + [_scene("puddle", *lay["puddle"]), _scene("carpet", *CARPET), _scene("goal", *CHARGER)])
    return NhsModel({
        "name": f"charging_{variant}",
        "integrator": {"h": 0.05, "event_tol": 1e-4},
        "global_clock": 4,
        "modes": [dry, wet, drying],
        "initial": {"mode": "dry", "x": [1.5, 5.0, 0.0, 0.0, 0.0, 0.0]},
        "scene": scene,
        "workspace": [W, H],
    })


# --- search and rescue ------------------------------------------------------

RESCUE_ROOMS = [
    # room walls, door (gap in the walls), observation area, human area
    {
        "walls": [([5.8, 6.0], [6.2, 7.4]), ([5.8, 8.6], [6.2, 10.0]), ([5.8, 5.8], [10.0, 6.2])],
        "door": ([5.8, 7.4], [6.2, 8.6]),
        "observe": ([4.4, 7.4], [5.2, 8.6]),
        "human": ([7.0, 7.3], [8.4, 8.7]),
    },
    {
        "walls": [([5.8, 0.0], [6.2, 1.4]), ([5.8, 2.6], [6.2, 4.0]), ([5.8, 3.8], [10.0, 4.2])],
        "door": ([5.8, 1.4], [6.2, 2.6]),
        "observe": ([4.4, 1.4], [5.2, 2.6]),
        "human": ([7.0, 1.3], [8.4, 2.7]),
    },
    {
        "walls": [([0.0, 6.8], [1.4, 7.2]), ([2.6, 6.8], [4.2, 7.2]), ([3.8, 7.2], [4.2, 10.0])],
        "door": ([1.4, 6.8], [2.6, 7.2]),
        "observe": ([1.4, 5.6], [2.6, 6.4]),
        "human": ([1.2, 8.0], [2.8, 9.4]),
    },
]
RESCUE_EXIT = ([0.2, 3.6], [1.4, 5.2])
RESCUE_START = [2.5, 4.4, 0.0, 0.0, 0.0, 0.0]
RESCUE_R = 0.2

HYPOTHESES = {
    # per room: (door may be blocked, human may be inside)
    "all": lambda n: [(True, True)] * n,
    "two": lambda n: [(True, i < 2) for i in range(n)],
}


def build_search_rescue(n_rooms: int = 1, hypothesis="all") -> NhsModel:
    """Building search with unknown door and human states.

    For room i the modes are ``search_i`` (door found open), ``human_i``
    (goal), ``blocked_i`` and ``clear_i`` (door blocked / nobody inside).
    The last two move on to the next room's observation area, or to the
    exit after the final room (``done`` is the goal). ``hypothesis`` is
    "all", "two" (a human can only be in the first two rooms) or an explicit
    list of ``(door unknown, human possible)`` pairs.
    """
    if not 1 <= n_rooms <= len(RESCUE_ROOMS):
        raise ValueError(f"n_rooms must be in 1..{len(RESCUE_ROOMS)}")
    if isinstance(hypothesis, str):
        if hypothesis not in HYPOTHESES:
            raise ValueError(f"hypothesis must be one of {sorted(HYPOTHESES)} or a list")
        hyp = HYPOTHESES[hypothesis](n_rooms)
        tag = hypothesis
    else:
        hyp = [tuple(h) for h in hypothesis]
        tag = "custom"
    if len(hyp) != n_rooms:
        raise ValueError("one hypothesis per room is required")

    W, H = 10.0, 10.0
    rooms = RESCUE_ROOMS[:n_rooms]
    walls = [w for r in rooms for w in r["walls"]]
    free = _free_space(W, H, walls, RESCUE_R) + [cmp(4, "<=", GLOBAL_DEADLINE)]
    base = {
        "dim": 6,
        "flow": {"id": "second_order_car", "params": {"v_min": 0.0, "v_max": 1.5}},
        "clocks": {"global": [4], "local": [5]},
        "control_box": {"lo": [-1.0, -1.5], "hi": [1.0, 1.5]},
        "bounds": {"lo": [0.0, 0.0, -PI, 0.0, 0.0, 0.0], "hi": [W, H, PI, 1.5, GLOBAL_DEADLINE, EXIT_DEADLINE]},
        "nn_weights": [1.0, 1.0, 0.25, 0.25, 0.0, 0.0],
    }

    def observe_guard(i):
        door_unknown, _ = hyp[i]
        outs = [target(f"search_{i + 1}")] + ([target(f"blocked_{i + 1}")] if door_unknown else [])
        return {"name": f"observe_{i + 1}", "trigger": [box(*rooms[i]["observe"])], "targets": outs}

    exit_guard = {"name": "exit", "trigger": [box(*RESCUE_EXIT)], "targets": [target("done")]}
    modes = [dict(base, name="start", invariant=free, guards=[observe_guard(0)])]
    for i, room in enumerate(rooms):
        k = i + 1
        _, human_possible = hyp[i]
        found = [target(f"human_{k}")] if human_possible else []
        modes.append(dict(base, name=f"search_{k}", invariant=free + [cmp(5, "<=", SEARCH_DEADLINE)], guards=[
            {"name": f"search_{k}", "trigger": [box(*room["human"])], "targets": found + [target(f"clear_{k}")]},
        ]))
        if human_possible:
            modes.append(dict(base, name=f"human_{k}", invariant=free, goal=[]))
        last = k == n_rooms
        after_inv = free + ([cmp(5, "<=", EXIT_DEADLINE)] if last else [])
        after_guards = [exit_guard] if last else [observe_guard(i + 1)]
        if hyp[i][0]:
            modes.append(dict(base, name=f"blocked_{k}", invariant=after_inv + [outside(*inflate(*room["door"], RESCUE_R))],
                              guards=after_guards))
        modes.append(dict(base, name=f"clear_{k}", invariant=after_inv, guards=after_guards))
    modes.append(dict(base, name="done", invariant=free, goal=[]))

    scene = [_scene("obstacle", lo, hi) for lo, hi in walls]
    for r in rooms:
        scene += [_scene("door", *r["door"]), _scene("observe", *r["observe"]), _scene("human", *r["human"])]
    scene.append(_scene("goal", *RESCUE_EXIT))
    return NhsModel({
        "name": f"rescue_{n_rooms}room_{tag}",
        "integrator": {"h": 0.05, "event_tol": 1e-4},
        "global_clock": 4,
        "modes": modes,
        "initial": {"mode": "start", "x": list(RESCUE_START)},
        "scene": scene,
        "workspace": [W, H],
    })


# --- small fixtures ---------------------------------------------------------

def build_point_robot(walled: bool = False) -> NhsModel:
    """Single-mode planar double integrator; ``walled`` encloses the goal."""
    goal = ([8.0, 8.0], [9.0, 9.0])
    obstacles = []
    if walled:
        obstacles = [([7.0, 7.0], [10.0, 7.5]), ([7.0, 7.5], [7.5, 10.0])]
    mode = {
        "name": "free",
        "dim": 4,
        "flow": {"id": "double_integrator", "params": {"axes": 2}},
        "control_box": {"lo": [-1.0, -1.0], "hi": [1.0, 1.0]},
        "bounds": {"lo": [0.0, 0.0, -1.5, -1.5], "hi": [10.0, 10.0, 1.5, 1.5]},
        "nn_weights": [1.0, 1.0, 0.3, 0.3],
        "invariant": _free_space(10.0, 10.0, obstacles, 0.0) + [
            box([-1.5, -1.5], [1.5, 1.5], dims=(2, 3))],
        "goal": [box(*goal)],
    }
    scene = [_scene("obstacle", lo, hi) for lo, hi in obstacles] + [_scene("goal", *goal)]
    return NhsModel({
        "name": "point_walled" if walled else "point_robot",
        "integrator": {"h": 0.05, "event_tol": 1e-4},
        "modes": [mode],
        "initial": {"mode": "free", "x": [1.0, 1.0, 0.0, 0.0]},
        "scene": scene,
        "workspace": [10.0, 10.0],
    })


# --- registry ---------------------------------------------------------------

BUILDERS = {
    **{f"gear_case{c}_env{e}": (build_gear_car, (c, e)) for c in (1, 2) for e in GEAR_ENVS},
    "charging_spaced": (build_charging, ("spaced",)),
    "charging_cluttered": (build_charging, ("cluttered",)),
    "rescue_1room": (build_search_rescue, (1, "all")),
    "rescue_2room": (build_search_rescue, (2, "all")),
    "rescue_3room_all": (build_search_rescue, (3, "all")),
    "rescue_3room_two": (build_search_rescue, (3, "two")),
    "point_robot": (build_point_robot, (False,)),
    "point_walled": (build_point_robot, (True,)),
}


def model_names() -> list[str]:
    return sorted(BUILDERS)


def build(name: str) -> NhsModel:
    fn, args = BUILDERS[name]
    return fn(*args)


def load_model(ref) -> NhsModel:
    """Resolve a built-in model name, a shipped file stem or a file path."""
    ref = str(ref)
    if ref in BUILDERS:
        shipped = MODEL_DIR / f"{ref}.yaml"
        return NhsModel(load_document(shipped)) if shipped.exists() else build(ref)
    return NhsModel.load(ref)


def write_models(directory=MODEL_DIR) -> list[Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    out = []
    for name in model_names():
        p = directory / f"{name}.yaml"
        build(name).dump(p)
        out.append(p)
    return out
