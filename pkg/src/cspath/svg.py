"""
Minimal SVG writers: mean curves with a +-1 std band, grid heatmaps and a
sampling-path overlay. Output is deterministic plain markup.
"""

from __future__ import annotations

import numpy as np

PALETTE = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b")


def _fmt(x):
    return f"{x:.2f}"


def _ticks(lo, hi, n=5):
    if hi == lo:
        return [lo]
    return list(np.linspace(lo, hi, n))


def band_chart(series, xlabel, ylabel, title="", width=480, height=320):
    """``series``: list of (label, x, mean, std) with equal-length arrays."""
    pad_l, pad_r, pad_t, pad_b = 60, 20, 30, 45
    xs = np.concatenate([np.asarray(s[1], float) for s in series]) if series else np.zeros(1)
    lo_y = [np.asarray(m, float) - np.asarray(sd, float) for _, _, m, sd in series]
    hi_y = [np.asarray(m, float) + np.asarray(sd, float) for _, _, m, sd in series]
    ys = np.concatenate(lo_y + hi_y) if series else np.zeros(1)
    x0, x1 = float(xs.min()), float(xs.max())
    y0, y1 = float(ys.min()), float(ys.max())
    if x1 == x0:
        x0, x1 = x0 - 1, x1 + 1
    if y1 == y0:
        y0, y1 = y0 - 1, y1 + 1
    pw, ph = width - pad_l - pad_r, height - pad_t - pad_b

    def X(x):
        return pad_l + (x - x0) / (x1 - x0) * pw

    def Y(y):
        return pad_t + (1 - (y - y0) / (y1 - y0)) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
           f'<rect width="{width}" height="{height}" fill="white"/>']
    if title:
        out.append(f'<text x="{width / 2:.1f}" y="18" text-anchor="middle" font-size="13">{title}</text>')
    out.append(f'<rect x="{pad_l}" y="{pad_t}" width="{pw}" height="{ph}" fill="none" stroke="black"/>')
    for t in _ticks(x0, x1):
        out.append(f'<text x="{_fmt(X(t))}" y="{pad_t + ph + 15}" text-anchor="middle">{t:.3g}</text>')
    for t in _ticks(y0, y1):
        out.append(f'<text x="{pad_l - 5}" y="{_fmt(Y(t) + 4)}" text-anchor="end">{t:.3g}</text>')
    out.append(f'<text x="{pad_l + pw / 2:.1f}" y="{height - 8}" text-anchor="middle">{xlabel}</text>')
    out.append(f'<text x="14" y="{pad_t + ph / 2:.1f}" text-anchor="middle" '
               f'transform="rotate(-90 14 {pad_t + ph / 2:.1f})">{ylabel}</text>')
    for i, (label, x, m, sd) in enumerate(series):
        color = PALETTE[i % len(PALETTE)]
        x, m, sd = (np.asarray(a, float) for a in (x, m, sd))
        order = np.argsort(x, kind="stable")
        x, m, sd = x[order], m[order], sd[order]
        upper = " ".join(f"{_fmt(X(a))},{_fmt(Y(b))}" for a, b in zip(x, m + sd))
        lower = " ".join(f"{_fmt(X(a))},{_fmt(Y(b))}" for a, b in zip(x[::-1], (m - sd)[::-1]))
        out.append(f'<polygon points="{upper} {lower}" fill="{color}" fill-opacity="0.2" stroke="none"/>')
        line = " ".join(f"{_fmt(X(a))},{_fmt(Y(b))}" for a, b in zip(x, m))
        out.append(f'<polyline points="{line}" fill="none" stroke="{color}" stroke-width="2"/>')
        for a, b in zip(x, m):
            out.append(f'<circle cx="{_fmt(X(a))}" cy="{_fmt(Y(b))}" r="2.5" fill="{color}"/>')
        ly = pad_t + 12 + 14 * i
        out.append(f'<line x1="{pad_l + pw - 90}" y1="{ly}" x2="{pad_l + pw - 75}" y2="{ly}" '
                   f'stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{pad_l + pw - 70}" y="{ly + 4}">{label}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _gray(v):
    g = int(round(255 * min(max(v, 0.0), 1.0)))
    return f"#{g:02x}{g:02x}{g:02x}"


def heatmap(grid, cell=10, path=None, marks=None):
    """Grayscale grid render (values in [0, 1]); optional path polyline on top."""
    grid = np.asarray(grid, float)
    rows, cols = grid.shape
    w, h = cols * cell, rows * cell
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">']
    for r in range(rows):
        for c in range(cols):
            out.append(f'<rect x="{c * cell}" y="{r * cell}" width="{cell}" height="{cell}" '
                       f'fill="{_gray(grid[r, c])}"/>')
    if marks is not None:
        for r, c in marks:
            out.append(f'<rect x="{c * cell + 1}" y="{r * cell + 1}" width="{cell - 2}" '
                       f'height="{cell - 2}" fill="none" stroke="#d62728"/>')
    if path:
        pts = " ".join(f"{c * cell + cell / 2:.1f},{r * cell + cell / 2:.1f}" for r, c in path)
        out.append(f'<polyline points="{pts}" fill="none" stroke="#1f77b4" stroke-width="2"/>')
        r, c = path[0]
        out.append(f'<circle cx="{c * cell + cell / 2:.1f}" cy="{r * cell + cell / 2:.1f}" '
                   f'r="{cell / 3:.1f}" fill="#2ca02c"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def path_overlay(grid_rows, grid_cols, path, cell=10):
    """Sampling path drawn over an empty grid."""
    return heatmap(np.ones((grid_rows, grid_cols)), cell, path=list(path), marks=list(path))
