"""SVG rendering of environments and planned trajectories."""

from __future__ import annotations

from .environment import Environment

_CELL = 60
_PALETTE = ["#f4b183", "#9dc3e6", "#a9d18e", "#ffd966", "#c9a0dc",
            "#f08f90", "#8fd8d2", "#d9b38c"]
_ROBOT_COLORS = ["#c00000", "#0048a0", "#207520", "#7030a0", "#b05000"]


def _layout(env: Environment):
    if env.coords:
        return {c: env.coords[c] for c in env.cells if c in env.coords}
    # fall back to a row of cells
    return {c: (i, 0) for i, c in enumerate(env.cells)}


def _label_color(env: Environment):
    groups = sorted({tuple(sorted(s)) for s in env.labels.values() if s})
    return {g: _PALETTE[i % len(_PALETTE)] for i, g in enumerate(groups)}


def render_svg(env: Environment, plan=None) -> str:
    """Draw the environment and, optionally, a plan's robot trajectories."""
    pos = _layout(env)
    colors = _label_color(env)
    xs = [p[0] for p in pos.values()]
    ys = [p[1] for p in pos.values()]
    x0, y0 = min(xs), min(ys)
    width = (max(xs) - x0 + 1) * _CELL + 20
    height = (max(ys) - y0 + 1) * _CELL + 20

    def corner(cell):
        x, y = pos[cell]
        return 10 + (x - x0) * _CELL, 10 + (y - y0) * _CELL

    def center(cell):
        cx, cy = corner(cell)
        return cx + _CELL / 2, cy + _CELL / 2

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
           f'height="{height}" viewBox="0 0 {width} {height}">',
           f'<rect width="{width}" height="{height}" fill="white"/>']
    for cell in env.cells:
        if cell not in pos:
            continue
        x, y = corner(cell)
        labs = tuple(sorted(env.labels[cell]))
        fill = colors.get(labs, "#ffffff")
        out.append(f'<rect x="{x}" y="{y}" width="{_CELL}" height="{_CELL}" '
                   f'fill="{fill}" stroke="#555"/>')
        text = cell + ("" if not labs else f" [{'+'.join(labs)}]")
        out.append(f'<text x="{x + 4}" y="{y + 14}" font-size="10" '
                   f'font-family="sans-serif">{text}</text>')
    for a, b in env.adjacency:
        if a in pos and b in pos:
            (ax, ay), (bx, by) = center(a), center(b)
            out.append(f'<line x1="{ax}" y1="{ay}" x2="{bx}" y2="{by}" '
                       f'stroke="#bbb" stroke-width="1"/>')
    for r, cell in enumerate(env.robot_cells):
        cx, cy = center(cell)
        color = _ROBOT_COLORS[r % len(_ROBOT_COLORS)]
        out.append(f'<circle cx="{cx}" cy="{cy}" r="9" fill="{color}"/>')
        out.append(f'<text x="{cx - 4}" y="{cy + 4}" font-size="10" fill="white" '
                   f'font-family="sans-serif">{r + 1}</text>')
    if plan is not None:
        path = [tuple(p) for p in plan.prefix] + [tuple(p) for p in plan.suffix]
        nrobots = len(env.robot_cells)
        for r in range(nrobots):
            pts = [center(step[r]) for step in path if step[r] in pos]
            if len(pts) < 2:
                continue
            color = _ROBOT_COLORS[r % len(_ROBOT_COLORS)]
            d = " ".join(f"{x:.1f},{y:.1f}" for x, y in pts)
            out.append(f'<polyline points="{d}" fill="none" stroke="{color}" '
                       f'stroke-width="2.5" stroke-opacity="0.7"/>')
            ex, ey = pts[-1]
            out.append(f'<circle cx="{ex}" cy="{ey}" r="4" fill="{color}"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
