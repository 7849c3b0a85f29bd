"""Minimal SVG line plots, no plotting dependency.

Good enough for a rank-CDF chart: axes, ticks, one polyline per series,
a small legend. Output is deterministic text so re-runs byte-match.
"""

from __future__ import annotations

WIDTH = 640
HEIGHT = 440
MARGIN_LEFT = 64
MARGIN_RIGHT = 24
MARGIN_TOP = 40
MARGIN_BOTTOM = 56

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b")


def _fmt(value: float) -> str:
    return f"{value:.2f}"


def line_plot(series, title: str, xlabel: str, ylabel: str,
              y_max: float = 1.0) -> str:
    """Render series = [(label, [(x, y), ...]), ...] to SVG text.
    X is treated as a small positive integer axis (ranks)."""
    if not series or not any(points for _, points in series):
        raise ValueError("line_plot needs at least one non-empty series")
    x_max = max(x for _, points in series for x, _ in points)
    x_min = min(x for _, points in series for x, _ in points)
    if x_max == x_min:
        x_max = x_min + 1
    plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT
    plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM

    def sx(x):
        return MARGIN_LEFT + (x - x_min) / (x_max - x_min) * plot_w

    def sy(y):
        return MARGIN_TOP + (1.0 - y / y_max) * plot_h

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" '
        f'height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2:.1f}" y="24" text-anchor="middle" '
        f'font-family="sans-serif" font-size="16">{title}</text>',
    ]
    # axes
    x0, y0 = MARGIN_LEFT, HEIGHT - MARGIN_BOTTOM
    x1, y1 = WIDTH - MARGIN_RIGHT, MARGIN_TOP
    parts.append(f'<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" '
                 f'stroke="black"/>')
    parts.append(f'<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" '
                 f'stroke="black"/>')
    # y ticks at 0, .25, .5, .75, 1
    for i in range(5):
        yv = y_max * i / 4
        py = sy(yv)
        parts.append(f'<line x1="{x0 - 4}" y1="{py:.1f}" x2="{x0}" '
                     f'y2="{py:.1f}" stroke="black"/>')
        parts.append(f'<text x="{x0 - 8}" y="{py + 4:.1f}" '
                     f'text-anchor="end" font-family="sans-serif" '
                     f'font-size="11">{_fmt(yv)}</text>')
        if i:
            parts.append(f'<line x1="{x0}" y1="{py:.1f}" x2="{x1}" '
                         f'y2="{py:.1f}" stroke="#dddddd"/>')
    # x ticks on integers, thinned to at most 12 labels
    step = max(1, round((x_max - x_min) / 10))
    x = x_min
    while x <= x_max:
        px = sx(x)
        parts.append(f'<line x1="{px:.1f}" y1="{y0}" x2="{px:.1f}" '
                     f'y2="{y0 + 4}" stroke="black"/>')
        parts.append(f'<text x="{px:.1f}" y="{y0 + 18}" '
                     f'text-anchor="middle" font-family="sans-serif" '
                     f'font-size="11">{x}</text>')
        x += step
    parts.append(f'<text x="{(x0 + x1) / 2:.1f}" y="{HEIGHT - 16}" '
                 f'text-anchor="middle" font-family="sans-serif" '
                 f'font-size="13">{xlabel}</text>')
    parts.append(f'<text x="18" y="{(y0 + y1) / 2:.1f}" '
                 f'text-anchor="middle" font-family="sans-serif" '
                 f'font-size="13" transform="rotate(-90 18 '
                 f'{(y0 + y1) / 2:.1f})">{ylabel}</text>')
    # series
    for i, (label, points) in enumerate(series):
        color = PALETTE[i % len(PALETTE)]
        coords = " ".join(f"{sx(x):.1f},{sy(y):.1f}" for x, y in points)
        parts.append(f'<polyline points="{coords}" fill="none" '
                     f'stroke="{color}" stroke-width="2"/>')
        ly = MARGIN_TOP + 16 + 18 * i
        lx = x0 + 16
        parts.append(f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 24}" '
                     f'y2="{ly - 4}" stroke="{color}" stroke-width="2"/>')
        parts.append(f'<text x="{lx + 30}" y="{ly}" '
                     f'font-family="sans-serif" font-size="12">'
                     f'{label}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def write_line_plot(path, series, title: str, xlabel: str,
                    ylabel: str) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(line_plot(series, title, xlabel, ylabel))
