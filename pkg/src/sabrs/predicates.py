"""Declarative state predicates used for invariants, guards and goals.

A predicate is a conjunction of atoms. Each atom is a one-key mapping:

    {"box": {"dims": [0, 1], "lo": [0, 0], "hi": [1, 1]}}
    {"circle": {"dims": [0, 1], "center": [2, 2], "radius": 0.5}}
    {"halfplane": {"dims": [0, 1], "coeffs": [1, -1], "bound": 0}}   # a.x <= b
    {"cmp": {"dim": 4, "op": "<=", "value": 120}}
    {"disk_box": {"dims": [0, 1], "radius": 0.3, "lo": [..], "hi": [..]}}
    {"not": <atom>}

``disk_box`` holds when the disk of the given radius centred at the projected
point intersects the box; it is how inflated robot footprints are tested
against regions.

An empty conjunction is true. ``compile_predicate(None)`` yields the constant
``default`` (true for invariants, false for goals).
"""

from __future__ import annotations

import math
import operator
from typing import Callable, Sequence

StateFn = Callable[[Sequence[float]], bool]

_OPS = {
    "<=": operator.le,
    "<": operator.lt,
    ">=": operator.ge,
    ">": operator.gt,
}


class PredicateError(ValueError):
    pass


def _box(spec):
    dims = list(spec["dims"])
    lo = [float(v) for v in spec["lo"]]
    hi = [float(v) for v in spec["hi"]]
    if not (len(dims) == len(lo) == len(hi)):
        raise PredicateError("box: dims/lo/hi length mismatch")
    if any(a > b for a, b in zip(lo, hi)):
        raise PredicateError("box: lo > hi")
    if len(dims) == 2:
        (i, j), (lx, ly), (hx, hy) = dims, lo, hi
        return lambda x: lx <= x[i] <= hx and ly <= x[j] <= hy
    triples = list(zip(dims, lo, hi))
    return lambda x: all(a <= x[d] <= b for d, a, b in triples)


def _circle(spec):
    i, j = spec["dims"]
    cx, cy = (float(v) for v in spec["center"])
    r2 = float(spec["radius"]) ** 2
    return lambda x: (x[i] - cx) ** 2 + (x[j] - cy) ** 2 <= r2


def _halfplane(spec):
    pairs = list(zip(spec["dims"], (float(c) for c in spec["coeffs"])))
    b = float(spec["bound"])
    return lambda x: sum(c * x[d] for d, c in pairs) <= b


def _cmp(spec):
    d = int(spec["dim"])
    op = spec["op"]
    if op not in _OPS:
        raise PredicateError(f"cmp: unknown operator {op!r}")
    fn = _OPS[op]
    v = float(spec["value"])
    return lambda x: fn(x[d], v)


def _disk_box(spec):
    i, j = spec["dims"]
    lx, ly = (float(v) for v in spec["lo"])
    hx, hy = (float(v) for v in spec["hi"])
    r2 = float(spec["radius"]) ** 2

    def f(x):
        px, py = x[i], x[j]
        dx = lx - px if px < lx else (px - hx if px > hx else 0.0)
        dy = ly - py if py < ly else (py - hy if py > hy else 0.0)
        return dx * dx + dy * dy <= r2

    return f


_ATOMS = {
    "box": _box,
    "circle": _circle,
    "halfplane": _halfplane,
    "cmp": _cmp,
    "disk_box": _disk_box,
}


def compile_atom(atom) -> StateFn:
    if not isinstance(atom, dict) or len(atom) != 1:
        raise PredicateError(f"atom must be a single-key mapping, got {atom!r}")
    (kind, spec), = atom.items()
    if kind == "not":
        inner = compile_atom(spec)
        return lambda x: not inner(x)
    if kind not in _ATOMS:
        raise PredicateError(f"unknown atom kind {kind!r}")
    try:
        return _ATOMS[kind](spec)
    except (KeyError, TypeError) as exc:
        raise PredicateError(f"{kind}: malformed atom ({exc})") from exc


def compile_predicate(atoms, default: bool = True) -> StateFn:
    if atoms is None:
        return (lambda x: True) if default else (lambda x: False)
    if isinstance(atoms, dict):
        atoms = [atoms]
    fns = [compile_atom(a) for a in atoms]
    if not fns:
        return lambda x: True
    if len(fns) == 1:
        return fns[0]

    def conj(x):
        for f in fns:
            if not f(x):
                return False
        return True

    return conj


def atom_dims(atom) -> list[int]:
    """State indices an atom reads."""
    (kind, spec), = atom.items()
    if kind == "not":
        return atom_dims(spec)
    if kind == "cmp":
        return [int(spec["dim"])]
    return [int(d) for d in spec["dims"]]


def box_hull(atoms, dim: int, lo: Sequence[float], hi: Sequence[float]):
    """Tightest axis-aligned box implied by the positive box/cmp atoms.

    Starts from ``[lo, hi]`` and intersects with every un-negated ``box`` and
    ``cmp`` atom. Used to draw goal-biased samples; other atom kinds are
    ignored, so the result over-approximates the region.
    """
    blo = [float(v) for v in lo]
    bhi = [float(v) for v in hi]
    for atom in atoms or []:
        (kind, spec), = atom.items()
        if kind == "box":
            for d, a, b in zip(spec["dims"], spec["lo"], spec["hi"]):
                blo[d] = max(blo[d], float(a))
                bhi[d] = min(bhi[d], float(b))
        elif kind == "cmp":
            d, v = int(spec["dim"]), float(spec["value"])
            if spec["op"] in ("<=", "<"):
                bhi[d] = min(bhi[d], v)
            else:
                blo[d] = max(blo[d], v)
    if any(a > b for a, b in zip(blo, bhi)) or any(math.isinf(v) for v in blo + bhi):
        return None
    return blo, bhi
