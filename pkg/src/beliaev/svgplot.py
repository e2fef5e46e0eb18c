"""Minimal static SVG line plots (linear or log axes), no plotting runtime."""

from __future__ import annotations

import math
from typing import Sequence
from xml.sax.saxutils import escape

_COLOURS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")
_W, _H = 640, 420
_LEFT, _RIGHT, _TOP, _BOTTOM = 70, 20, 30, 50


def _transform(values, log):
    out = []
    for v in values:
        if v is None or not math.isfinite(v) or (log and v <= 0):
            out.append(None)
        else:
            out.append(math.log10(v) if log else float(v))
    return out


def _span(vals):
    good = [v for v in vals if v is not None]
    if not good:
        return 0.0, 1.0
    lo, hi = min(good), max(good)
    if hi == lo:
        pad = abs(lo) * 0.05 or 0.5
        return lo - pad, hi + pad
    return lo, hi


def _fmt(v, log):
    return f"1e{v:g}" if log else f"{v:.3g}"


def line_plot(x: Sequence[float], series: dict, title: str = "", xlabel: str = "",
              ylabel: str = "", logx: bool = False, logy: bool = False) -> str:
    """Return an SVG document plotting each named y series against x."""
    tx = _transform(x, logx)
    ty = {name: _transform(ys, logy) for name, ys in series.items()}
    x0, x1 = _span(tx)
    y0, y1 = _span([v for ys in ty.values() for v in ys])
    pw, ph = _W - _LEFT - _RIGHT, _H - _TOP - _BOTTOM

    def px(v):
        return _LEFT + (v - x0) / (x1 - x0) * pw

    def py(v):
        return _TOP + ph - (v - y0) / (y1 - y0) * ph

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
             f'viewBox="0 0 {_W} {_H}" font-family="sans-serif" font-size="11">',
             f'<rect x="0" y="0" width="{_W}" height="{_H}" fill="white"/>',
             f'<rect x="{_LEFT}" y="{_TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>']
    for i in range(5):
        xv = x0 + (x1 - x0) * i / 4
        yv = y0 + (y1 - y0) * i / 4
        parts.append(f'<text x="{px(xv):.2f}" y="{_TOP + ph + 15}" text-anchor="middle">'
                     f'{escape(_fmt(xv, logx))}</text>')
        parts.append(f'<text x="{_LEFT - 5}" y="{py(yv) + 4:.2f}" text-anchor="end">'
                     f'{escape(_fmt(yv, logy))}</text>')
    parts.append(f'<text x="{_LEFT + pw / 2}" y="{_H - 10}" text-anchor="middle">{escape(xlabel)}</text>')
    parts.append(f'<text x="15" y="{_TOP + ph / 2}" text-anchor="middle" '
                 f'transform="rotate(-90 15 {_TOP + ph / 2})">{escape(ylabel)}</text>')
    parts.append(f'<text x="{_LEFT + pw / 2}" y="18" text-anchor="middle">{escape(title)}</text>')
    for j, (name, ys) in enumerate(ty.items()):
        colour = _COLOURS[j % len(_COLOURS)]
        pts = [f"{px(a):.2f},{py(b):.2f}" for a, b in zip(tx, ys) if a is not None and b is not None]
        if pts:
            parts.append(f'<polyline fill="none" stroke="{colour}" stroke-width="1.5" '
                         f'points="{" ".join(pts)}"/>')
        parts.append(f'<text x="{_LEFT + 8}" y="{_TOP + 14 + 13 * j}" fill="{colour}">{escape(name)}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
