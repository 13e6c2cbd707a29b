"""Built-in flow and jump registries.

Flows are referenced from model files by id. Each factory receives the flow
``params`` and returns ``(f, n_base, n_ctrl)`` where ``f(x, u)`` gives the
derivative of the first ``n_base`` state components. Unit-rate clock
components are appended by the model and never handled here.
"""

from __future__ import annotations

import math


class FlowError(ValueError):
    pass


def single_integrator(params):
    n = int(params.get("n", 1))
    gain = float(params.get("gain", 1.0))

    def f(x, u):
        return [gain * ui for ui in u]

    return f, n, n


def double_integrator(params):
    # positions then velocities; acceleration input per axis
    k = int(params.get("axes", 1))

    def f(x, u):
        return list(x[k:2 * k]) + list(u)

    return f, 2 * k, k


def second_order_car(params):
    """(x, y, heading, speed) driven by (acceleration, turn rate).

    With ``v_min``/``v_max`` the speed saturates instead of leaving the band,
    which models a drivetrain that cannot over-speed or reverse.
    """
    v_lo = params.get("v_min")
    v_hi = params.get("v_max")
    v_lo = -math.inf if v_lo is None else float(v_lo)
    v_hi = math.inf if v_hi is None else float(v_hi)
    cos, sin = math.cos, math.sin

    def f(x, u):
        v = x[3]
        a = u[0]
        if (a > 0.0 and v >= v_hi) or (a < 0.0 and v <= v_lo):
            a = 0.0
        th = x[2]
        return [v * cos(th), v * sin(th), u[1], a]

    return f, 4, 2


def linear(params):
    A = [[float(v) for v in row] for row in params["A"]]
    B = [[float(v) for v in row] for row in params.get("B", [[0.0]] * len(A))]
    n = len(A)
    if any(len(row) != n for row in A) or len(B) != n:
        raise FlowError("linear: A must be n x n and B must have n rows")
    m = len(B[0])

    def f(x, u):
        return [
            sum(a * xj for a, xj in zip(A[i], x)) + sum(b * uj for b, uj in zip(B[i], u))
            for i in range(n)
        ]

    return f, n, m


def stationary(params):
    n = int(params.get("n", 0))
    m = int(params.get("m", 1))
    zeros = [0.0] * n

    def f(x, u):
        return list(zeros)

    return f, n, m


FLOWS = {
    "single_integrator": single_integrator,
    "double_integrator": double_integrator,
    "second_order_car": second_order_car,
    "linear": linear,
    "stationary": stationary,
}


def make_flow(spec, dim: int, clocks) -> tuple:
    """Full-state derivative function for a mode plus its control dimension."""
    fid = spec.get("id")
    if fid not in FLOWS:
        raise FlowError(f"unknown flow id {fid!r}")
    base, n_base, n_ctrl = FLOWS[fid](spec.get("params") or {})
    clocks = sorted(clocks)
    if clocks != list(range(n_base, n_base + len(clocks))):
        raise FlowError("clock dimensions must directly follow the flow's state dimensions")
    if n_base + len(clocks) != dim:
        raise FlowError(f"flow {fid!r} covers {n_base} dims + {len(clocks)} clocks, mode has dim {dim}")
    if not clocks:
        return base, n_ctrl
    ones = [1.0] * len(clocks)

    def f(x, u):
        return base(x, u) + ones

    return f, n_ctrl


# --- jumps -------------------------------------------------------------------

def _identity(params, n_in):
    sets = {int(k): float(v) for k, v in (params.get("set") or {}).items()}
    if not sets:
        return (lambda x: tuple(x)), n_in

    def j(x):
        y = list(x)
        for d, v in sets.items():
            y[d] = v
        return tuple(y)

    return j, n_in


def _projection(params, n_in):
    keep = [int(i) for i in params["keep"]]
    if any(i < 0 or i >= n_in for i in keep):
        raise FlowError("projection: index out of range")
    return (lambda x: tuple(x[i] for i in keep)), len(keep)


JUMPS = {
    "identity": _identity,
    "projection": _projection,
}


def make_jump(spec, n_in: int):
    spec = spec or {"id": "identity"}
    jid = spec.get("id", "identity")
    if jid not in JUMPS:
        raise FlowError(f"unknown jump id {jid!r}")
    return JUMPS[jid](spec.get("params") or {}, n_in)
