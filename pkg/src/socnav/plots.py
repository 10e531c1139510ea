"""Hand-written SVG output: episode trajectories and training reward curves."""
from __future__ import annotations

import math
from typing import Sequence
from xml.sax.saxutils import escape

from .sim import EpisodeLog, Scenario

PALETTE = ("#d62728", "#1f77b4", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf")


def _star(cx: float, cy: float, r: float) -> str:
    pts = []
    for k in range(10):
        rad = r if k % 2 == 0 else 0.45 * r
        a = -math.pi / 2 + k * math.pi / 5
        pts.append(f"{cx + rad * math.cos(a):.4f},{cy + rad * math.sin(a):.4f}")
    return " ".join(pts)


def trajectory_svg(log: EpisodeLog, scenario: Scenario, size: int = 640, margin: float = 0.5) -> str:
    """Obstacles in grey, per-agent colored paths, start squares and star-shaped goals."""
    # clip the view to the region where agents actually move
    ax = [a.p.x for a in scenario.agents] + [a.goal.x for a in scenario.agents] + [r[2] for r in log.rows]
    ay = [a.p.y for a in scenario.agents] + [a.goal.y for a in scenario.agents] + [r[3] for r in log.rows]
    x0, x1 = min(ax) - 2 * margin, max(ax) + 2 * margin
    y0, y1 = min(ay) - 2 * margin, max(ay) + 2 * margin
    span = max(x1 - x0, y1 - y0)
    scale = size / span

    def tx(x):
        return (x - x0) * scale

    def ty(y):
        return size - (y - y0) * scale

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">',
        f'<title>{escape(log.scenario)} / {escape(log.mode)} / seed {log.seed}</title>',
        f'<rect x="0" y="0" width="{size}" height="{size}" fill="white"/>',
        f'<clipPath id="view"><rect x="0" y="0" width="{size}" height="{size}"/></clipPath>',
        '<g clip-path="url(#view)">',
    ]
    for o in scenario.obstacles:
        pts = " ".join(f"{tx(v.x):.2f},{ty(v.y):.2f}" for v in o.vertices)
        out.append(f'<polygon points="{pts}" fill="#888888" stroke="#444444" stroke-width="1"/>')
    for i, a in enumerate(scenario.agents):
        col = PALETTE[i % len(PALETTE)]
        traj = log.trajectory(i)
        if len(traj):
            pts = " ".join(f"{tx(x):.2f},{ty(y):.2f}" for x, y in traj)
            out.append(f'<polyline points="{pts}" fill="none" stroke="{col}" stroke-width="2"/>')
            end = traj[-1]
            out.append(f'<circle cx="{tx(end[0]):.2f}" cy="{ty(end[1]):.2f}" r="{a.r_safe * scale:.2f}" '
                       f'fill="none" stroke="{col}" stroke-width="1.5"/>')
        s = 0.15 * scale
        out.append(f'<rect x="{tx(a.p.x) - s / 2:.2f}" y="{ty(a.p.y) - s / 2:.2f}" width="{s:.2f}" height="{s:.2f}" '
                   f'fill="none" stroke="{col}" stroke-width="1.5"/>')
        out.append(f'<polygon points="{_star(tx(a.goal.x), ty(a.goal.y), 0.12 * scale)}" fill="{col}"/>')
    out.append("</g>")
    legend = ", ".join(f"{i}:{o}" for i, o in enumerate(log.outcomes))
    out.append(f'<text x="6" y="16" font-family="monospace" font-size="11">{escape(legend)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def curves_svg(iterations: Sequence[int], ex: Sequence[float], cur: Sequence[float], width: int = 720, height: int = 300) -> str:
    """Two stacked panels: external reward (top) and curiosity reward (bottom) against iteration."""
    panel_h = (height - 40) / 2
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        '<rect x="0" y="0" width="100%" height="100%" fill="white"/>',
    ]
    for k, (label, ys, col) in enumerate((("external reward", ex, "#1f77b4"), ("curiosity reward", cur, "#d62728"))):
        top = 10 + k * (panel_h + 20)
        pts = [(x, y) for x, y in zip(iterations, ys) if y == y]  # drop NaN
        out.append(f'<rect x="50" y="{top:.1f}" width="{width - 60}" height="{panel_h:.1f}" fill="none" stroke="#999"/>')
        out.append(f'<text x="56" y="{top + 14:.1f}" font-family="sans-serif" font-size="12">{label}</text>')
        if len(pts) >= 2:
            xa, xb = pts[0][0], pts[-1][0]
            ya, yb = min(p[1] for p in pts), max(p[1] for p in pts)
            yb = yb if yb > ya else ya + 1.0
            xb = xb if xb > xa else xa + 1

            def px(x):
                return 50 + (x - xa) / (xb - xa) * (width - 60)

            def py(y):
                return top + panel_h - (y - ya) / (yb - ya) * panel_h

            poly = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in pts)
            out.append(f'<polyline points="{poly}" fill="none" stroke="{col}" stroke-width="1.5"/>')
            out.append(f'<text x="4" y="{top + 10:.1f}" font-family="sans-serif" font-size="10">{yb:.3g}</text>')
            out.append(f'<text x="4" y="{top + panel_h:.1f}" font-family="sans-serif" font-size="10">{ya:.3g}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
