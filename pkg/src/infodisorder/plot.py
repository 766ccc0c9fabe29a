"""Standalone SVG line charts of virality against network polarisation."""

from __future__ import annotations

from collections import defaultdict
from pathlib import Path
from typing import Sequence
from xml.sax.saxutils import escape

from .harness import read_csv_rows

WIDTH, HEIGHT = 640, 420
MARGIN_LEFT, MARGIN_RIGHT, MARGIN_TOP, MARGIN_BOTTOM = 60, 190, 30, 50
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
           "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf")
REFERENCE_LEVEL = 0.5


def _label(theta: float, sa_delay: int | None, p_o: float) -> str:
    agent = "no Super-Agent" if sa_delay is None else f"sa-delay={sa_delay}"
    text = f"θ={theta:.3f}, {agent}"
    if p_o:
        text += f", P_O={p_o:g}"
    return text


def render_svg(series: dict, title: str = "Average virality") -> str:
    plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT
    plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM

    def sx(x: float) -> float:
        return MARGIN_LEFT + x * plot_w

    def sy(y: float) -> float:
        return MARGIN_TOP + (1.0 - y) * plot_h

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{MARGIN_LEFT + plot_w / 2:.1f}" y="18" text-anchor="middle" '
        f'font-size="14">{escape(title)}</text>',
    ]
    # axes and ticks
    out.append(f'<g class="axes" stroke="black" fill="none">'
               f'<line x1="{sx(0):.1f}" y1="{sy(0):.1f}" x2="{sx(1):.1f}" y2="{sy(0):.1f}"/>'
               f'<line x1="{sx(0):.1f}" y1="{sy(0):.1f}" x2="{sx(0):.1f}" y2="{sy(1):.1f}"/></g>')
    for i in range(6):
        v = i / 5
        out.append(f'<line x1="{sx(v):.1f}" y1="{sy(0):.1f}" x2="{sx(v):.1f}" y2="{sy(0) + 5:.1f}" stroke="black"/>')
        out.append(f'<text x="{sx(v):.1f}" y="{sy(0) + 18:.1f}" text-anchor="middle">{v:.1f}</text>')
        out.append(f'<line x1="{sx(0) - 5:.1f}" y1="{sy(v):.1f}" x2="{sx(0):.1f}" y2="{sy(v):.1f}" stroke="black"/>')
        out.append(f'<text x="{sx(0) - 8:.1f}" y="{sy(v) + 4:.1f}" text-anchor="end">{v:.1f}</text>')
    out.append(f'<text x="{MARGIN_LEFT + plot_w / 2:.1f}" y="{HEIGHT - 12}" text-anchor="middle">P_N</text>')
    out.append(f'<text x="16" y="{MARGIN_TOP + plot_h / 2:.1f}" text-anchor="middle" '
               f'transform="rotate(-90 16 {MARGIN_TOP + plot_h / 2:.1f})">Virality</text>')
    out.append(f'<line class="reference" x1="{sx(0):.1f}" y1="{sy(REFERENCE_LEVEL):.1f}" '
               f'x2="{sx(1):.1f}" y2="{sy(REFERENCE_LEVEL):.1f}" stroke="gray" stroke-dasharray="6 4"/>')

    for idx, (key, points) in enumerate(series.items()):
        colour = PALETTE[idx % len(PALETTE)]
        pts = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in points)
        label = escape(_label(*key))
        out.append(f'<polyline class="series" data-label="{label}" points="{pts}" '
                   f'fill="none" stroke="{colour}" stroke-width="2"/>')
        ly = MARGIN_TOP + 10 + 18 * idx
        lx = WIDTH - MARGIN_RIGHT + 15
        out.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 20}" y2="{ly}" stroke="{colour}" stroke-width="2"/>')
        out.append(f'<text class="legend" x="{lx + 26}" y="{ly + 4}">{label}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def plot_virality(csv_paths: Sequence[str | Path], out_path: str | Path,
                  title: str = "Average virality") -> Path:
    """One polyline per (theta, sa_delay, p_o) series found in the CSVs."""
    if not csv_paths:
        raise ValueError("no CSV files given")
    series: dict[tuple, list[tuple[float, float]]] = defaultdict(list)
    for path in csv_paths:
        for row in read_csv_rows(path):
            key = (row["theta"], row["sa_delay"], row["p_o"])
            series[key].append((row["p_n"], row["virality"]))
    grids = {tuple(sorted(x for x, _ in pts)) for pts in series.values()}
    if len(grids) > 1:
        raise ValueError("CSV series do not share a common P_N grid")
    for pts in series.values():
        pts.sort()
        for x, y in pts:
            if not (0.0 <= x <= 1.0 and 0.0 <= y <= 1.0):
                raise ValueError(f"point ({x}, {y}) outside the unit plot range")
    ordered = dict(sorted(series.items(), key=lambda kv: (kv[0][0], kv[0][1] or -1, kv[0][2])))
    out_path = Path(out_path)
    out_path.write_text(render_svg(ordered, title), encoding="utf-8")
    return out_path
