"""Minimal hand-emitted SVG line charts.

No plotting stack: output is a fixed 800x600 viewBox with 10-tick axes, a
6-color palette and a legend, rendered with fixed-precision coordinates so
files are byte-stable across platforms (modulo the generator comment line).
"""

from __future__ import annotations

import math
from typing import Dict, List, Sequence, Tuple

GENERATOR_COMMENT = "<!-- generated by covpost chart v1 -->"

WIDTH, HEIGHT = 800, 600
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 80, 170, 50, 60
PLOT_W = WIDTH - MARGIN_L - MARGIN_R
PLOT_H = HEIGHT - MARGIN_T - MARGIN_B
N_TICKS = 10

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")

Series = Dict[str, Sequence[Tuple[float, float]]]


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _tick_label(v: float) -> str:
    return f"{v:.4g}"


def _ranges(series: Series, log_x: bool) -> Tuple[float, float, float, float]:
    xs = [x for pts in series.values() for x, _ in pts]
    ys = [y for pts in series.values() for _, y in pts]
    if not xs:
        raise ValueError("chart needs at least one data point")
    x_lo, x_hi = min(xs), max(xs)
    y_lo, y_hi = min(ys), max(ys)
    if log_x and x_lo <= 0:
        raise ValueError("log-x chart needs positive x values")
    if x_lo == x_hi:
        x_lo, x_hi = x_lo - 1.0, x_hi + 1.0
    pad = 0.05 * (y_hi - y_lo) if y_hi > y_lo else max(0.05 * abs(y_hi), 0.5)
    y_lo, y_hi = min(0.0, y_lo) if y_lo >= 0 else y_lo - pad, y_hi + pad
    return x_lo, x_hi, y_lo, y_hi


def line_chart(
    series: Series,
    title: str,
    x_label: str,
    y_label: str,
    log_x: bool = False,
) -> str:
    """Render named (x, y) series to an SVG document string."""
    x_lo, x_hi, y_lo, y_hi = _ranges(series, log_x)

    def sx(x: float) -> float:
        if log_x:
            t = (math.log(x) - math.log(x_lo)) / (math.log(x_hi) - math.log(x_lo))
        else:
            t = (x - x_lo) / (x_hi - x_lo)
        return MARGIN_L + t * PLOT_W

    def sy(y: float) -> float:
        t = (y - y_lo) / (y_hi - y_lo)
        return MARGIN_T + (1.0 - t) * PLOT_H

    out: List[str] = []
    out.append('<?xml version="1.0" encoding="UTF-8"?>')
    out.append(GENERATOR_COMMENT)
    out.append(
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {WIDTH} {HEIGHT}" '
        f'width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif">'
    )
    out.append(f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>')
    out.append(
        f'<text x="{WIDTH // 2}" y="28" text-anchor="middle" font-size="18">{_esc(title)}</text>'
    )

    # axes box
    out.append(
        f'<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{PLOT_W}" height="{PLOT_H}" '
        'fill="none" stroke="#333333" stroke-width="1"/>'
    )

    # ticks and grid
    for i in range(N_TICKS + 1):
        t = i / N_TICKS
        if log_x:
            xv = math.exp(math.log(x_lo) + t * (math.log(x_hi) - math.log(x_lo)))
        else:
            xv = x_lo + t * (x_hi - x_lo)
        px = _fmt(sx(xv))
        out.append(
            f'<line x1="{px}" y1="{MARGIN_T + PLOT_H}" x2="{px}" y2="{MARGIN_T + PLOT_H + 5}" '
            'stroke="#333333"/>'
        )
        out.append(
            f'<text x="{px}" y="{MARGIN_T + PLOT_H + 20}" text-anchor="middle" '
            f'font-size="11">{_tick_label(xv)}</text>'
        )
        yv = y_lo + t * (y_hi - y_lo)
        py = _fmt(sy(yv))
        out.append(
            f'<line x1="{MARGIN_L - 5}" y1="{py}" x2="{MARGIN_L}" y2="{py}" stroke="#333333"/>'
        )
        out.append(
            f'<text x="{MARGIN_L - 9}" y="{py}" text-anchor="end" dominant-baseline="middle" '
            f'font-size="11">{_tick_label(yv)}</text>'
        )
        if 0 < i < N_TICKS:
            out.append(
                f'<line x1="{MARGIN_L}" y1="{py}" x2="{MARGIN_L + PLOT_W}" y2="{py}" '
                'stroke="#dddddd" stroke-width="0.5"/>'
            )

    out.append(
        f'<text x="{MARGIN_L + PLOT_W / 2:.0f}" y="{HEIGHT - 14}" text-anchor="middle" '
        f'font-size="13">{_esc(x_label)}</text>'
    )
    out.append(
        f'<text x="20" y="{MARGIN_T + PLOT_H / 2:.0f}" text-anchor="middle" font-size="13" '
        f'transform="rotate(-90 20 {MARGIN_T + PLOT_H / 2:.0f})">{_esc(y_label)}</text>'
    )

    # polylines
    for k, (name, pts) in enumerate(series.items()):
        color = PALETTE[k % len(PALETTE)]
        coords = " ".join(f"{_fmt(sx(x))},{_fmt(sy(y))}" for x, y in pts)
        out.append(
            f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="2"/>'
        )
        for x, y in pts:
            out.append(
                f'<circle cx="{_fmt(sx(x))}" cy="{_fmt(sy(y))}" r="3" fill="{color}"/>'
            )

    # legend
    lx = MARGIN_L + PLOT_W + 12
    for k, name in enumerate(series.keys()):
        color = PALETTE[k % len(PALETTE)]
        ly = MARGIN_T + 14 + 22 * k
        out.append(
            f'<line x1="{lx}" y1="{ly}" x2="{lx + 24}" y2="{ly}" stroke="{color}" stroke-width="2"/>'
        )
        out.append(
            f'<text x="{lx + 30}" y="{ly + 4}" font-size="12">{_esc(name)}</text>'
        )

    out.append("</svg>")
    return "\n".join(out) + "\n"


def _esc(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def write_chart(path, series: Series, title: str, x_label: str, y_label: str, log_x: bool = False) -> None:
    with open(path, "w") as fh:
        fh.write(line_chart(series, title, x_label, y_label, log_x=log_x))
