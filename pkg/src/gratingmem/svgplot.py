"""Bare SVG line plots (polylines plus axes) for desk checks."""
from __future__ import annotations

import numpy as np

WIDTH, HEIGHT, PAD = 640, 420, 60


def _ticks(lo, hi, n=5):
    return np.linspace(lo, hi, n)


def line_plot(x, series, xlabel="", ylabel="", title=""):
    """``series`` maps a label to a y array sharing ``x``. Returns SVG text."""
    x = np.asarray(x, dtype=float)
    ys = {k: np.asarray(v, dtype=float) for k, v in series.items()}
    x0, x1 = float(x.min()), float(x.max())
    allv = np.concatenate(list(ys.values())) if ys else np.zeros(1)
    y0, y1 = float(min(allv.min(), 0.0)), float(allv.max())
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y1 = y0 + 1.0
    sx = lambda v: PAD + (v - x0) / (x1 - x0) * (WIDTH - 2 * PAD)
    sy = lambda v: HEIGHT - PAD - (v - y0) / (y1 - y0) * (HEIGHT - 2 * PAD)

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}">']
    out.append(f'<line x1="{PAD}" y1="{HEIGHT - PAD}" x2="{WIDTH - PAD}" y2="{HEIGHT - PAD}" stroke="black"/>')
    out.append(f'<line x1="{PAD}" y1="{PAD}" x2="{PAD}" y2="{HEIGHT - PAD}" stroke="black"/>')
    for t in _ticks(x0, x1):
        out.append(f'<text x="{sx(t):.1f}" y="{HEIGHT - PAD + 16}" font-size="10" '
                   f'text-anchor="middle">{t:.3g}</text>')
    for t in _ticks(y0, y1):
        out.append(f'<text x="{PAD - 6}" y="{sy(t):.1f}" font-size="10" '
                   f'text-anchor="end">{t:.3g}</text>')
    out.append(f'<text x="{WIDTH / 2}" y="{HEIGHT - 12}" font-size="12" text-anchor="middle">{xlabel}</text>')
    out.append(f'<text x="14" y="{HEIGHT / 2}" font-size="12" text-anchor="middle" '
               f'transform="rotate(-90 14 {HEIGHT / 2})">{ylabel}</text>')
    if title:
        out.append(f'<text x="{WIDTH / 2}" y="20" font-size="13" text-anchor="middle">{title}</text>')
    colors = ["black", "crimson", "steelblue", "darkgreen"]
    for i, (label, y) in enumerate(ys.items()):
        # thin long traces so the file stays small
        step = max(1, len(x) // 2000)
        pts = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(x[::step], y[::step]))
        out.append(f'<polyline fill="none" stroke="{colors[i % len(colors)]}" points="{pts}"/>')
        out.append(f'<text x="{WIDTH - PAD}" y="{PAD + 14 * i}" font-size="11" text-anchor="end" '
                   f'fill="{colors[i % len(colors)]}">{label}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
