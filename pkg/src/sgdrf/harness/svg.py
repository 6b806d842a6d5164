"""Minimal static SVG line charts: mean lines with a shaded +-sd band.

CSV files are the record of a run; these plots are a convenience and use no
plotting library. Axes switch to log scale when every value is positive and
the values span more than a decade.
"""

from __future__ import annotations

import math
from html import escape

WIDTH, HEIGHT = 640, 420
MARGIN = {"left": 80, "right": 20, "top": 20, "bottom": 60}
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f")


def _use_log(values) -> bool:
    vals = [v for v in values if math.isfinite(v)]
    return bool(vals) and min(vals) > 0 and max(vals) / min(vals) > 10


class _Axis:
    def __init__(self, values, lo_px, hi_px):
        vals = [v for v in values if math.isfinite(v)]
        self.log = _use_log(vals)
        f = math.log10 if self.log else float
        lo, hi = (min(map(f, vals)), max(map(f, vals))) if vals else (0.0, 1.0)
        if hi == lo:
            lo, hi = lo - 0.5, hi + 0.5
        self.lo, self.hi, self.lo_px, self.hi_px = lo, hi, lo_px, hi_px

    def __call__(self, v: float) -> float:
        if self.log:
            v = math.log10(v) if v > 0 else self.lo
        return self.lo_px + (v - self.lo) / (self.hi - self.lo) * (self.hi_px - self.lo_px)

    def ticks(self, count: int = 5) -> list[float]:
        if self.log:
            return [10.0**k for k in range(math.ceil(self.lo), math.floor(self.hi) + 1)] or [10**self.lo]
        step = (self.hi - self.lo) / (count - 1)
        return [self.lo + i * step for i in range(count)]


def line_chart(series, x_label: str = "", y_label: str = "") -> str:
    """``series`` is a list of ``(label, xs, means, sds)``."""
    xs_all = [x for _, xs, _, _ in series for x in xs]
    ys_all = [v for _, _, m, s in series for v in (*m, *(a - b for a, b in zip(m, s)), *(a + b for a, b in zip(m, s)))]
    if _use_log([m for _, _, ms, _ in series for m in ms]):
        ys_all = [v for v in ys_all if v > 0]
    x_ax = _Axis(xs_all, MARGIN["left"], WIDTH - MARGIN["right"])
    y_ax = _Axis(ys_all, HEIGHT - MARGIN["bottom"], MARGIN["top"])
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
    ]
    x0, x1 = MARGIN["left"], WIDTH - MARGIN["right"]
    y0, y1 = HEIGHT - MARGIN["bottom"], MARGIN["top"]
    out.append(f'<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>')
    out.append(f'<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>')
    for t in x_ax.ticks():
        px = x_ax(t)
        out.append(f'<line x1="{px:.1f}" y1="{y0}" x2="{px:.1f}" y2="{y0 + 5}" stroke="black"/>')
        out.append(f'<text x="{px:.1f}" y="{y0 + 18}" text-anchor="middle">{t:.3g}</text>')
    for t in y_ax.ticks():
        py = y_ax(t)
        out.append(f'<line x1="{x0 - 5}" y1="{py:.1f}" x2="{x0}" y2="{py:.1f}" stroke="black"/>')
        out.append(f'<text x="{x0 - 8}" y="{py + 4:.1f}" text-anchor="end">{t:.3g}</text>')
    out.append(f'<text x="{(x0 + x1) / 2}" y="{HEIGHT - 15}" text-anchor="middle">{escape(x_label)}</text>')
    out.append(
        f'<text x="15" y="{(y0 + y1) / 2}" text-anchor="middle" '
        f'transform="rotate(-90 15 {(y0 + y1) / 2})">{escape(y_label)}</text>'
    )
    for i, (label, xs, means, sds) in enumerate(series):
        color = PALETTE[i % len(PALETTE)]
        upper = [(x_ax(x), y_ax(m + s)) for x, m, s in zip(xs, means, sds)]
        lower = [(x_ax(x), y_ax(m - s if m - s > 0 or not y_ax.log else m)) for x, m, s in zip(xs, means, sds)]
        band = " ".join(f"{a:.1f},{b:.1f}" for a, b in upper + lower[::-1])
        out.append(f'<polygon points="{band}" fill="{color}" fill-opacity="0.2" stroke="none"/>')
        line = " ".join(f"{x_ax(x):.1f},{y_ax(m):.1f}" for x, m in zip(xs, means))
        out.append(f'<polyline points="{line}" fill="none" stroke="{color}" stroke-width="2"/>')
        for x, m in zip(xs, means):
            out.append(f'<circle cx="{x_ax(x):.1f}" cy="{y_ax(m):.1f}" r="3" fill="{color}"/>')
        out.append(
            f'<text x="{x1 - 5}" y="{y1 + 15 * (i + 1)}" text-anchor="end" fill="{color}">{escape(label)}</text>'
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"
