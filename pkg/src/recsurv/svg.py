"""Standalone SVG renderings: survival step curves and residual scatter plots.

Output is plain text with fixed number formatting so identical inputs give
byte-identical files.
"""

from __future__ import annotations

from typing import Mapping, Sequence
from xml.sax.saxutils import escape

import numpy as np

from .data import CATEGORIES
from .nonparametric import SurvivalCurve

PALETTE = ("#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")
WIDTH, HEIGHT = 640, 420
LEFT, RIGHT, TOP, BOTTOM = 60, 150, 40, 50


def _n(v: float) -> str:
    return format(float(v), ".6g")


class _Frame:
    def __init__(self, x_range, y_range):
        self.x0, self.x1 = x_range
        self.y0, self.y1 = y_range
        self.w = WIDTH - LEFT - RIGHT
        self.h = HEIGHT - TOP - BOTTOM

    def x(self, v):
        return LEFT + (v - self.x0) / (self.x1 - self.x0) * self.w

    def y(self, v):
        return TOP + (1.0 - (v - self.y0) / (self.y1 - self.y0)) * self.h


def _axes(frame: _Frame, title, xlabel, ylabel, xticks, yticks) -> list[str]:
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{_n(WIDTH / 2)}" y="20" text-anchor="middle" font-size="14">{escape(title)}</text>',
        f'<line x1="{LEFT}" y1="{_n(frame.y(frame.y0))}" x2="{_n(LEFT + frame.w)}" '
        f'y2="{_n(frame.y(frame.y0))}" stroke="black"/>',
        f'<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{_n(TOP + frame.h)}" stroke="black"/>',
    ]
    for t in xticks:
        px = _n(frame.x(t))
        out.append(f'<line x1="{px}" y1="{_n(TOP + frame.h)}" x2="{px}" '
                   f'y2="{_n(TOP + frame.h + 5)}" stroke="black"/>')
        out.append(f'<text x="{px}" y="{_n(TOP + frame.h + 18)}" text-anchor="middle">{_n(t)}</text>')
    for t in yticks:
        py = _n(frame.y(t))
        out.append(f'<line x1="{LEFT - 5}" y1="{py}" x2="{LEFT}" y2="{py}" stroke="black"/>')
        out.append(f'<text x="{LEFT - 8}" y="{py}" text-anchor="end" '
                   f'dominant-baseline="middle">{_n(t)}</text>')
    out.append(f'<text x="{_n(LEFT + frame.w / 2)}" y="{HEIGHT - 10}" '
               f'text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text x="15" y="{_n(TOP + frame.h / 2)}" text-anchor="middle" '
               f'transform="rotate(-90 15 {_n(TOP + frame.h / 2)})">{escape(ylabel)}</text>')
    return out


def _legend(labels: Sequence[str]) -> list[str]:
    out = []
    for i, lab in enumerate(labels):
        y = TOP + 10 + 18 * i
        x = WIDTH - RIGHT + 15
        out.append(f'<line x1="{x}" y1="{y}" x2="{x + 20}" y2="{y}" '
                   f'stroke="{PALETTE[i % len(PALETTE)]}" stroke-width="2"/>')
        out.append(f'<text x="{x + 26}" y="{y}" dominant-baseline="middle">{escape(lab)}</text>')
    return out


def step_path(curve: SurvivalCurve, frame: _Frame, t_end: float) -> str:
    """Right-continuous step path starting at S(0) = 1."""
    pts = [(0.0, 1.0)]
    level = 1.0
    for t, s in zip(curve.time, curve.estimate):
        pts.append((t, level))
        pts.append((t, s))
        level = s
    pts.append((t_end, level))
    return " ".join(f"{'M' if i == 0 else 'L'}{_n(frame.x(x))},{_n(frame.y(y))}"
                    for i, (x, y) in enumerate(pts))


def survival_svg(curves: Mapping[str, SurvivalCurve], title: str = "Survival curves",
                 xlabel: str = "Years", ylabel: str = "Survival probability") -> str:
    t_max = max([c.max_time for c in curves.values()] + [1.0])
    frame = _Frame((0.0, t_max * 1.05), (0.0, 1.0))
    step = 4 if t_max > 8 else 1
    out = _axes(frame, title, xlabel, ylabel, np.arange(0, t_max + 1e-9, step),
                (0, 0.25, 0.5, 0.75, 1.0))
    for i, (name, c) in enumerate(curves.items()):
        out.append(f'<path d="{step_path(c, frame, t_max * 1.05)}" fill="none" '
                   f'stroke="{PALETTE[i % len(PALETTE)]}" stroke-width="2"/>')
    out += _legend(list(curves))
    out.append("</svg>")
    return "\n".join(out) + "\n"


def residual_svg(residuals: Sequence[tuple], title: str = "Pearson residuals by category") -> str:
    """Residuals jittered deterministically within one column per category."""
    cats = [c for c in CATEGORIES if any(r[1] == c for r in residuals)]
    vals = np.array([r[2] for r in residuals], dtype=float)
    lim = float(np.ceil(np.max(np.abs(vals)))) if len(vals) else 1.0
    frame = _Frame((0.5, len(cats) + 0.5), (-lim, lim))
    out = _axes(frame, title, "Category", "Pearson residual", [], np.linspace(-lim, lim, 5))
    for j, c in enumerate(cats, start=1):
        out.append(f'<text x="{_n(frame.x(j))}" y="{_n(TOP + frame.h + 18)}" '
                   f'text-anchor="middle">{c}</text>')
        members = [r for r in residuals if r[1] == c]
        for i, r in enumerate(members):
            offset = ((i * 0.618034) % 1.0 - 0.5) * 0.6
            out.append(f'<circle cx="{_n(frame.x(j + offset))}" cy="{_n(frame.y(r[2]))}" r="1.5" '
                       f'fill="{PALETTE[(j - 1) % len(PALETTE)]}" fill-opacity="0.5"/>')
    out.append(f'<line x1="{LEFT}" y1="{_n(frame.y(0))}" x2="{_n(LEFT + frame.w)}" '
               f'y2="{_n(frame.y(0))}" stroke="gray" stroke-dasharray="4 3"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
