"""Report figures: a dependency-free SVG line chart and matplotlib PNGs.

``emit_svg`` writes a log-scale line chart as plain SVG (one polyline per
series) so trajectory plots need no plotting stack; the CLI report path
additionally renders the same series to PNG via matplotlib.
"""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

import numpy as np

__all__ = ["emit_svg", "save_png"]

_COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]

_W, _H = 720, 480
_ML, _MR, _MT, _MB = 70, 20, 40, 50


def _clean_series(series):
    """Drop non-finite points and floor non-positive values for the log axis."""
    cleaned = []
    positives = []
    for label, xs, ys in series:
        xs = np.asarray(xs, dtype=float)
        ys = np.asarray(ys, dtype=float)
        keep = np.isfinite(xs) & np.isfinite(ys)
        xs, ys = xs[keep], ys[keep]
        cleaned.append([label, xs, ys])
        positives.extend(ys[ys > 0].tolist())
    floor = (min(positives) if positives else 1.0) / 10.0
    for item in cleaned:
        item[2] = np.maximum(item[2], floor)
    return cleaned


def emit_svg(series, path, title: str = "", xlabel: str = "k",
             ylabel: str = "") -> None:
    """Write ``series`` (label, x, y triples) as a log-scale SVG line chart."""
    series = _clean_series(series)
    if not series or all(s[1].size == 0 for s in series):
        raise ValueError("emit_svg needs at least one non-empty series")

    x_lo = min(float(s[1].min()) for s in series if s[1].size)
    x_hi = max(float(s[1].max()) for s in series if s[1].size)
    y_lo = min(float(s[2].min()) for s in series if s[2].size)
    y_hi = max(float(s[2].max()) for s in series if s[2].size)
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    ly_lo, ly_hi = math.log10(y_lo), math.log10(y_hi)
    if ly_hi == ly_lo:
        ly_hi = ly_lo + 1.0

    def sx(x):
        return _ML + (x - x_lo) / (x_hi - x_lo) * (_W - _ML - _MR)

    def sy(y):
        ly = math.log10(y)
        return _H - _MB - (ly - ly_lo) / (ly_hi - ly_lo) * (_H - _MT - _MB)

    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}">',
        f'<rect x="0" y="0" width="{_W}" height="{_H}" fill="white"/>',
        f'<line x1="{_ML}" y1="{_H - _MB}" x2="{_W - _MR}" y2="{_H - _MB}" '
        'stroke="black" stroke-width="1"/>',
        f'<line x1="{_ML}" y1="{_MT}" x2="{_ML}" y2="{_H - _MB}" '
        'stroke="black" stroke-width="1"/>',
    ]
    if title:
        parts.append(f'<text x="{_W / 2:.1f}" y="24" text-anchor="middle" '
                     f'font-size="15">{escape(title)}</text>')
    parts.append(f'<text x="{(_ML + _W - _MR) / 2:.1f}" y="{_H - 12}" '
                 f'text-anchor="middle" font-size="13">{escape(xlabel)}</text>')
    if ylabel:
        parts.append(f'<text x="16" y="{(_MT + _H - _MB) / 2:.1f}" '
                     f'text-anchor="middle" font-size="13" '
                     f'transform="rotate(-90 16 {(_MT + _H - _MB) / 2:.1f})">'
                     f'{escape(ylabel)}</text>')

    for xv in np.linspace(x_lo, x_hi, 5):
        px = sx(xv)
        parts.append(f'<line x1="{px:.1f}" y1="{_H - _MB}" x2="{px:.1f}" '
                     f'y2="{_H - _MB + 5}" stroke="black" stroke-width="1"/>')
        parts.append(f'<text x="{px:.1f}" y="{_H - _MB + 18}" '
                     f'text-anchor="middle" font-size="11">{xv:g}</text>')
    decades = np.arange(math.floor(ly_lo), math.ceil(ly_hi) + 1)
    step = max(1, int(math.ceil(len(decades) / 10)))
    for e in decades[::step]:
        if not (ly_lo <= e <= ly_hi):
            continue
        py = sy(10.0 ** e)
        parts.append(f'<line x1="{_ML - 5}" y1="{py:.1f}" x2="{_ML}" '
                     f'y2="{py:.1f}" stroke="black" stroke-width="1"/>')
        parts.append(f'<text x="{_ML - 8}" y="{py + 4:.1f}" text-anchor="end" '
                     f'font-size="11">1e{int(e)}</text>')

    for idx, (label, xs, ys) in enumerate(series):
        color = _COLORS[idx % len(_COLORS)]
        pts = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in zip(xs, ys))
        parts.append(f'<polyline fill="none" stroke="{color}" '
                     f'stroke-width="1.5" points="{pts}"/>')
        ly_pos = _MT + 14 + 16 * idx
        parts.append(f'<line x1="{_W - _MR - 130}" y1="{ly_pos - 4}" '
                     f'x2="{_W - _MR - 104}" y2="{ly_pos - 4}" '
                     f'stroke="{color}" stroke-width="2"/>')
        parts.append(f'<text x="{_W - _MR - 98}" y="{ly_pos}" font-size="12">'
                     f'{escape(str(label))}</text>')

    parts.append("</svg>")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(parts) + "\n")


def save_png(series, path, title: str = "", xlabel: str = "k",
             ylabel: str = "") -> None:
    """Render the same series as a matplotlib semilog-y PNG."""
    import matplotlib
    matplotlib.use("Agg", force=False)
    import matplotlib.pyplot as plt

    series = _clean_series(series)
    fig, ax = plt.subplots(figsize=(7.2, 4.8))
    for label, xs, ys in series:
        ax.semilogy(xs, ys, label=str(label), linewidth=1.2)
    ax.set_xlabel(xlabel)
    if ylabel:
        ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    ax.legend(loc="best")
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
