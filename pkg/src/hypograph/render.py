"""Deterministic text renderings: SVG conditional histograms and DOT motifs."""
from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

from hypograph.graph import EnvironmentDescriptor, canonical_environment, canonical_text
from hypograph.hypothesis import HistogramPair

WIDTH, HEIGHT = 640, 400
LEFT, RIGHT, TOP, BOTTOM = 70, 20, 60, 60
TRUE_COLOR = "#d62728"
FALSE_COLOR = "#1f77b4"


def _f(x: float) -> str:
    return f"{x:.2f}"


def _tick(x: float) -> str:
    return f"{x:.3g}"


def render_histogram_svg(
    h: HistogramPair,
    caption: str = "",
    xlabel: str = "target",
    true_label: str = "present",
    false_label: str = "absent",
) -> str:
    """Two overlaid series, each normalized to its own group size.

    Bars show the fraction of the group falling in each bin so that a small
    group stays visible next to a large one; the legend gives raw counts.
    """
    n1 = int(h.counts_true.sum())
    n0 = int(h.counts_false.sum())
    frac_true = h.counts_true / n1 if n1 else np.zeros(h.n_bins)
    frac_false = h.counts_false / n0 if n0 else np.zeros(h.n_bins)
    peak = float(max(frac_true.max(initial=0.0), frac_false.max(initial=0.0))) or 1.0
    plot_w = WIDTH - LEFT - RIGHT
    plot_h = HEIGHT - TOP - BOTTOM
    bar_w = plot_w / h.n_bins

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
    ]
    lines = [caption] if caption else []
    if h.degenerate:
        lines.append("all targets equal: single bin")
    for k, text in enumerate(lines):
        out.append(f'<text x="{LEFT}" y="{20 + 16 * k}">{escape(text)}</text>')
    for fracs, color, cls in ((frac_false, FALSE_COLOR, "absent"), (frac_true, TRUE_COLOR, "present")):
        out.append(f'<g class="{cls}" fill="{color}" fill-opacity="0.5">')
        for b, v in enumerate(fracs):
            if v <= 0:
                continue
            bh = plot_h * float(v) / peak
            x = LEFT + b * bar_w
            y = TOP + plot_h - bh
            out.append(f'<rect x="{_f(x)}" y="{_f(y)}" width="{_f(bar_w)}" height="{_f(bh)}"/>')
        out.append("</g>")
    x0, y0 = LEFT, TOP + plot_h
    out.append(f'<line x1="{x0}" y1="{y0}" x2="{x0 + plot_w}" y2="{y0}" stroke="black"/>')
    out.append(f'<line x1="{x0}" y1="{TOP}" x2="{x0}" y2="{y0}" stroke="black"/>')
    lo, hi = float(h.edges[0]), float(h.edges[-1])
    ticks = [lo] if lo == hi else list(np.linspace(lo, hi, 5))
    for t in ticks:
        x = x0 + (0.0 if hi == lo else (t - lo) / (hi - lo) * plot_w)
        out.append(f'<line x1="{_f(x)}" y1="{y0}" x2="{_f(x)}" y2="{y0 + 5}" stroke="black"/>')
        out.append(f'<text x="{_f(x)}" y="{y0 + 18}" text-anchor="middle">{_tick(t)}</text>')
    for k in range(3):
        v = peak * k / 2
        y = y0 - plot_h * k / 2
        out.append(f'<text x="{x0 - 6}" y="{_f(y + 4)}" text-anchor="end">{_tick(v)}</text>')
    out.append(f'<text x="{x0 + plot_w / 2:.1f}" y="{HEIGHT - 15}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(
        f'<text x="15" y="{TOP + plot_h / 2:.1f}" text-anchor="middle" '
        f'transform="rotate(-90 15 {TOP + plot_h / 2:.1f})">fraction of group</text>'
    )
    lx = WIDTH - RIGHT - 170
    for k, (color, label, n) in enumerate(((TRUE_COLOR, true_label, f"n1={n1}"), (FALSE_COLOR, false_label, f"n0={n0}"))):
        y = TOP + 16 * k
        out.append(f'<rect x="{lx}" y="{y}" width="12" height="12" fill="{color}" fill-opacity="0.5"/>')
        out.append(f'<text x="{lx + 18}" y="{y + 10}">{escape(label)} ({n})</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _quote(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def render_subgraph_dot(env: EnvironmentDescriptor, name: str = "motif") -> str:
    """Undirected DOT graph in canonical node order; the root is filled."""
    env = canonical_environment(env)
    out = [
        f"graph {_quote(name)} {{",
        f"  label={_quote(canonical_text(env))};",
        "  node [shape=circle];",
    ]
    for i, nl in enumerate(env.nodes):
        extra = ", style=filled, fillcolor=gold, penwidth=2" if i == env.root else ""
        out.append(f"  n{i} [label={_quote(nl.display())}{extra}];")
    for u, v, e in env.edges:
        out.append(f"  n{u} -- n{v} [label={_quote(e.kind)}];")
    out.append("}")
    return "\n".join(out) + "\n"


__all__ = ["render_histogram_svg", "render_subgraph_dot"]
