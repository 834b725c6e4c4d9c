"""Tiny dependency-free SVG line charts for curve outputs."""

from __future__ import annotations

import numpy as np

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b", "#e377c2")


def _ticks(lo: float, hi: float, n: int = 5):
    if hi <= lo:
        hi = lo + 1.0
    return np.linspace(lo, hi, n)


def line_chart(path, series, title: str = "", xlabel: str = "",
               ylabel: str = "", size=(640, 420)) -> None:
    """Write an SVG line chart.

    ``series`` is a list of (label, x, y) with array-likes of equal
    length; NaNs break the polyline.
    """
    w, h = size
    ml, mr, mt, mb = 62, 16, 34, 46  # margins
    pw, ph = w - ml - mr, h - mt - mb

    xs = [np.asarray(x, dtype=float) for _, x, _ in series]
    ys = [np.asarray(y, dtype=float) for _, _, y in series]
    finite_x = np.concatenate([x[np.isfinite(x)] for x in xs]) \
        if xs else np.array([0.0])
    finite_y = np.concatenate([y[np.isfinite(y)] for y in ys]) \
        if ys else np.array([0.0])
    if finite_x.size == 0:
        finite_x = np.array([0.0, 1.0])
    if finite_y.size == 0:
        finite_y = np.array([0.0, 1.0])
    x0, x1 = float(finite_x.min()), float(finite_x.max())
    y0, y1 = float(finite_y.min()), float(finite_y.max())
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y1 = y0 + 1.0
    pad = 0.04 * (y1 - y0)
    y0, y1 = y0 - pad, y1 + pad

    def px(x):
        return ml + (x - x0) / (x1 - x0) * pw

    def py(y):
        return mt + ph - (y - y0) / (y1 - y0) * ph

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" '
        f'viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="11">',
        f'<rect width="{w}" height="{h}" fill="white"/>',
        f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" '
        f'stroke="#444"/>',
    ]
    if title:
        parts.append(f'<text x="{w / 2:.1f}" y="20" text-anchor="middle" '
                     f'font-size="14">{title}</text>')
    for tx in _ticks(x0, x1):
        parts.append(f'<line x1="{px(tx):.1f}" y1="{mt + ph}" '
                     f'x2="{px(tx):.1f}" y2="{mt + ph + 4}" stroke="#444"/>')
        parts.append(f'<text x="{px(tx):.1f}" y="{mt + ph + 17}" '
                     f'text-anchor="middle">{tx:.4g}</text>')
    for ty in _ticks(y0, y1):
        parts.append(f'<line x1="{ml - 4}" y1="{py(ty):.1f}" x2="{ml}" '
                     f'y2="{py(ty):.1f}" stroke="#444"/>')
        parts.append(f'<text x="{ml - 7}" y="{py(ty) + 4:.1f}" '
                     f'text-anchor="end">{ty:.4g}</text>')
    if xlabel:
        parts.append(f'<text x="{ml + pw / 2:.1f}" y="{h - 10}" '
                     f'text-anchor="middle">{xlabel}</text>')
    if ylabel:
        parts.append(f'<text x="16" y="{mt + ph / 2:.1f}" text-anchor="middle" '
                     f'transform="rotate(-90 16 {mt + ph / 2:.1f})">'
                     f'{ylabel}</text>')

    for k, (label, x, y) in enumerate(series):
        color = PALETTE[k % len(PALETTE)]
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        run = []
        chunks = []
        for xi, yi in zip(x, y):
            if np.isfinite(xi) and np.isfinite(yi):
                run.append(f"{px(xi):.2f},{py(yi):.2f}")
            elif run:
                chunks.append(run)
                run = []
        if run:
            chunks.append(run)
        for run in chunks:
            parts.append(f'<polyline points="{" ".join(run)}" fill="none" '
                         f'stroke="{color}" stroke-width="1.5"/>')
        if label:
            ly = mt + 14 + 15 * k
            parts.append(f'<line x1="{ml + 8}" y1="{ly - 4}" x2="{ml + 28}" '
                         f'y2="{ly - 4}" stroke="{color}" stroke-width="2"/>')
            parts.append(f'<text x="{ml + 33}" y="{ly}">{label}</text>')
    parts.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(parts) + "\n")
