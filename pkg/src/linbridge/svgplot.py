"""Minimal SVG line charts, written without a plotting dependency."""

from xml.sax.saxutils import escape

import numpy as np

__all__ = ["line_chart"]

COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")
WIDTH, HEIGHT = 640, 420
MARGIN = dict(left=70, right=20, top=40, bottom=55)


def _ticks(lo, hi, count=5):
    if hi == lo:
        return [lo]
    step = 10 ** np.floor(np.log10((hi - lo) / count))
    for mult in (1, 2, 5, 10):
        if (hi - lo) / (step * mult) <= count:
            step *= mult
            break
    first = int(np.ceil(lo / step))
    last = int(np.floor(hi / step))
    return [k * step + 0.0 for k in range(first, last + 1)]


def _limits(arrays):
    lo = min(float(np.min(a)) for a in arrays)
    hi = max(float(np.max(a)) for a in arrays)
    if hi == lo:
        lo, hi = lo - 1.0, hi + 1.0
    pad = 0.05 * (hi - lo)
    return lo - pad, hi + pad


def line_chart(series, path, title="", xlabel="", ylabel=""):
    """Write an SVG chart.

    ``series`` is a list of dicts with keys ``x``, ``y`` and optionally
    ``label`` and ``dashed``.
    """
    x0, x1 = _limits([s["x"] for s in series])
    y0, y1 = _limits([s["y"] for s in series])
    pw = WIDTH - MARGIN["left"] - MARGIN["right"]
    ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]

    def sx(v):
        return MARGIN["left"] + (v - x0) / (x1 - x0) * pw

    def sy(v):
        return MARGIN["top"] + (y1 - v) / (y1 - y0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<rect x="{MARGIN["left"]}" y="{MARGIN["top"]}" width="{pw}" height="{ph}" '
        'fill="none" stroke="black"/>',
    ]
    for v in _ticks(x0, x1):
        X = sx(v)
        out.append(f'<line x1="{X:.2f}" y1="{MARGIN["top"] + ph}" x2="{X:.2f}" y2="{MARGIN["top"] + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{X:.2f}" y="{MARGIN["top"] + ph + 18}" text-anchor="middle">{v:.3g}</text>')
    for v in _ticks(y0, y1):
        Y = sy(v)
        out.append(f'<line x1="{MARGIN["left"] - 5}" y1="{Y:.2f}" x2="{MARGIN["left"]}" y2="{Y:.2f}" stroke="black"/>')
        out.append(f'<text x="{MARGIN["left"] - 8}" y="{Y + 4:.2f}" text-anchor="end">{v:.3g}</text>')
    for i, s in enumerate(series):
        color = COLORS[i % len(COLORS)]
        pts = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(s["x"], s["y"]))
        dash = ' stroke-dasharray="6,4"' if s.get("dashed") else ""
        out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.2"{dash}/>')
        if s.get("label"):
            ly = MARGIN["top"] + 16 * (i + 1)
            lx = MARGIN["left"] + pw - 150
            out.append(f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 20}" y2="{ly - 4}" stroke="{color}"{dash}/>')
            out.append(f'<text x="{lx + 26}" y="{ly}">{escape(s["label"])}</text>')
    out.append(f'<text x="{WIDTH / 2}" y="22" text-anchor="middle" font-size="15">{escape(title)}</text>')
    out.append(f'<text x="{MARGIN["left"] + pw / 2}" y="{HEIGHT - 12}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(
        f'<text x="18" y="{MARGIN["top"] + ph / 2}" text-anchor="middle" '
        f'transform="rotate(-90 18 {MARGIN["top"] + ph / 2})">{escape(ylabel)}</text>'
    )
    out.append("</svg>")
    with open(path, "w") as f:
        f.write("\n".join(out) + "\n")
