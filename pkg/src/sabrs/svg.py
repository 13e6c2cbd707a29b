"""Static SVG drawing of the execution branches of a strategy."""

from __future__ import annotations

import json
from xml.sax.saxutils import escape

from .nhs import NhsModel
from .validate import ExecutionBranch

PALETTE = ["#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf", "#bcbd22", "#7f7f7f"]
FILL = {
    "obstacle": "#222222",
    "puddle": "#6fa8dc",
    "carpet": "#b7b7b7",
    "goal": "#93c47d",
    "human": "#c9a0dc",
    "door": "#999999",
    "observe": "#fff2cc",
}
SCALE = 60.0


def _workspace(model: NhsModel):
    ws = model.doc.get("workspace")
    if ws:
        return float(ws[0]), float(ws[1])
    m = model.modes[model.initial.mode]
    return m.hi[0], m.hi[1]


def render(model: NhsModel, branches: list[ExecutionBranch], title: str = "") -> str:
    """One polyline per branch; segments that end in a nondeterministic
    transition are drawn red and dotted."""
    W, H = _workspace(model)
    s = SCALE

    def pt(x, y):
        return f"{x * s:.2f},{(H - y) * s:.2f}"

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W * s:.0f}" height="{H * s:.0f}" '
        f'viewBox="0 0 {W * s:.0f} {H * s:.0f}">',
        f"<metadata>{escape(json.dumps({'model': model.name, 'branches': len(branches)}))}</metadata>",
    ]
    if title:
        out.append(f"<title>{escape(title)}</title>")
    out.append(f'<rect x="0" y="0" width="{W * s:.0f}" height="{H * s:.0f}" fill="white" stroke="black"/>')
    for item in model.scene:
        if item.get("kind") != "box":
            continue
        (x0, y0), (x1, y1) = item["lo"], item["hi"]
        role = item.get("role", "obstacle")
        out.append(
            f'<rect class="{escape(role)}" x="{x0 * s:.2f}" y="{(H - y1) * s:.2f}" width="{(x1 - x0) * s:.2f}" '
            f'height="{(y1 - y0) * s:.2f}" fill="{FILL.get(role, "#dddddd")}" fill-opacity="0.8"/>')
    for i, b in enumerate(branches):
        color = PALETTE[i % len(PALETTE)]
        out.append(f'<g class="branch" data-terminal="{b.terminal}">')
        for st in b.steps:
            pts = " ".join(pt(x[0], x[1]) for x in st.segment.states)
            if st.segment.nondeterministic:
                out.append(f'<polyline class="nondeterministic" points="{pts}" fill="none" stroke="red" '
                           f'stroke-width="2" stroke-dasharray="2,4"/>')
            else:
                out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="2"/>')
        out.append("</g>")
    x0 = model.initial.x
    out.append(f'<circle cx="{x0[0] * s:.2f}" cy="{(H - x0[1]) * s:.2f}" r="5" fill="black"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
