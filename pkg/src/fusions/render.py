"""Static SVG figures drawn from the geometry section of a report."""
from __future__ import annotations

import math

WIDTH = 640
PAD = 20
FILLS = ["#dbe9f6", "#f6e3db", "#e2f2dc", "#efe0f3", "#f7f1d0", "#dff3f1", "#f2dfe6", "#e6e6e6"]


def _num(v):
    return f"{v:.3f}".rstrip("0").rstrip(".")


def svg(geometry: dict) -> str:
    """SVG of box, cells, sites and atoms. A pure function of the dict."""
    (x0, y0), (x1, y1) = geometry["box"]
    if len(geometry["box"][0]) != 2:
        raise ValueError("SVG output is 2D only")
    s = (WIDTH - 2 * PAD) / (x1 - x0)
    H = (y1 - y0) * s + 2 * PAD

    def X(x):
        return PAD + (x - x0) * s

    def Y(y):
        return H - PAD - (y - y0) * s

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{_num(H)}" '
           f'viewBox="0 0 {WIDTH} {_num(H)}">']
    out.append(f'<rect x="{_num(X(x0))}" y="{_num(Y(y1))}" width="{_num((x1 - x0) * s)}" '
               f'height="{_num((y1 - y0) * s)}" fill="white" stroke="black" stroke-width="1.5"/>')
    for k, poly in enumerate(geometry.get("cells", [])):
        if len(poly) < 3:
            continue
        pts = " ".join(f"{_num(X(x))},{_num(Y(y))}" for x, y in poly)
        out.append(f'<polygon class="cell" points="{pts}" fill="{FILLS[k % len(FILLS)]}" '
                   f'stroke="#444" stroke-width="1"/>')
    for x, y, v in geometry.get("flow", []):
        r = s * geometry.get("spacing", 0.05) / 2
        out.append(f'<rect class="flow" x="{_num(X(x) - r)}" y="{_num(Y(y) - r)}" width="{_num(2 * r)}" '
                   f'height="{_num(2 * r)}" fill="#c0392b" fill-opacity="{_num(min(1.0, v))}"/>')
    for x, y in geometry.get("sites", []):
        out.append(f'<path class="site" d="M{_num(X(x) - 4)},{_num(Y(y))}h8M{_num(X(x))},{_num(Y(y) - 4)}v8" '
                   f'stroke="#555" stroke-width="1.5"/>')
    atoms = geometry.get("atoms", [])
    top = max((m for _, _, m in atoms), default=1.0) or 1.0
    for x, y, m in atoms:
        r = 3 + 9 * math.sqrt(m / top)
        out.append(f'<circle class="atom" cx="{_num(X(x))}" cy="{_num(Y(y))}" r="{_num(r)}" fill="#1f4e79"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
