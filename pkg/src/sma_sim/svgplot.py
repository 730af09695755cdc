"""Tiny deterministic SVG line/error-bar plots (no plotting dependency)."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence
from xml.sax.saxutils import escape

import numpy as np

WIDTH, HEIGHT = 640, 400
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 80, 130, 40, 55
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


@dataclass(frozen=True)
class Series:
    label: str
    x: Sequence[float]
    y: Sequence[float]
    yerr: Optional[Sequence[float]] = None
    markers: bool = False


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _nice_ticks(lo: float, hi: float, count: int = 5) -> list:
    if hi <= lo:
        hi = lo + (abs(lo) if lo else 1.0)
    raw = (hi - lo) / count
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=10 * mag)
    start = math.ceil(lo / step - 1e-9) * step
    ticks = []
    t = start
    while t <= hi + 1e-9 * step:
        ticks.append(round(t, 12))
        t += step
    return ticks


def line_plot(series: Sequence[Series], title: str, xlabel: str, ylabel: str) -> str:
    """Render ``series`` into an SVG document string."""
    xs = np.concatenate([np.asarray(s.x, float) for s in series])
    lows = [np.asarray(s.y, float) - (np.asarray(s.yerr, float) if s.yerr is not None else 0) for s in series]
    highs = [np.asarray(s.y, float) + (np.asarray(s.yerr, float) if s.yerr is not None else 0) for s in series]
    x0, x1 = float(xs.min()), float(xs.max())
    y0, y1 = float(min(v.min() for v in lows)), float(max(v.max() for v in highs))
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    pad = 0.05 * (y1 - y0) if y1 > y0 else max(abs(y0) * 0.1, 1e-12)
    y0, y1 = y0 - pad, y1 + pad
    pw = WIDTH - MARGIN_L - MARGIN_R
    ph = HEIGHT - MARGIN_T - MARGIN_B

    def px(x):
        return MARGIN_L + (x - x0) / (x1 - x0) * pw

    def py(y):
        return MARGIN_T + (1.0 - (y - y0) / (y1 - y0)) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2:.2f}" y="24" text-anchor="middle" font-size="15" font-family="sans-serif">{escape(title)}</text>',
        f'<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    for t in _nice_ticks(x0, x1):
        out.append(f'<line x1="{_fmt(px(t))}" y1="{MARGIN_T + ph}" x2="{_fmt(px(t))}" y2="{MARGIN_T + ph + 5}" stroke="black"/>')
        out.append(
            f'<text x="{_fmt(px(t))}" y="{MARGIN_T + ph + 18}" text-anchor="middle" font-size="11" '
            f'font-family="sans-serif">{t:.6g}</text>'
        )
    for t in _nice_ticks(y0, y1):
        out.append(f'<line x1="{MARGIN_L - 5}" y1="{_fmt(py(t))}" x2="{MARGIN_L}" y2="{_fmt(py(t))}" stroke="black"/>')
        out.append(
            f'<text x="{MARGIN_L - 8}" y="{_fmt(py(t) + 4)}" text-anchor="end" font-size="11" '
            f'font-family="sans-serif">{t:.6g}</text>'
        )
    out.append(
        f'<text x="{MARGIN_L + pw / 2:.2f}" y="{HEIGHT - 12}" text-anchor="middle" font-size="13" '
        f'font-family="sans-serif">{escape(xlabel)}</text>'
    )
    out.append(
        f'<text x="18" y="{MARGIN_T + ph / 2:.2f}" text-anchor="middle" font-size="13" font-family="sans-serif" '
        f'transform="rotate(-90 18 {MARGIN_T + ph / 2:.2f})">{escape(ylabel)}</text>'
    )
    for i, s in enumerate(series):
        color = COLORS[i % len(COLORS)]
        x = np.asarray(s.x, float)
        y = np.asarray(s.y, float)
        pts = " ".join(f"{_fmt(px(a))},{_fmt(py(b))}" for a, b in zip(x, y))
        out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        if s.markers:
            for a, b in zip(x, y):
                out.append(f'<circle cx="{_fmt(px(a))}" cy="{_fmt(py(b))}" r="3" fill="{color}"/>')
        if s.yerr is not None:
            for a, b, e in zip(x, y, np.asarray(s.yerr, float)):
                xa = _fmt(px(a))
                out.append(f'<line x1="{xa}" y1="{_fmt(py(b - e))}" x2="{xa}" y2="{_fmt(py(b + e))}" stroke="{color}"/>')
        ly = MARGIN_T + 14 + 18 * i
        lx = MARGIN_L + pw + 10
        out.append(f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 20}" y2="{ly - 4}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{lx + 25}" y="{ly}" font-size="12" font-family="sans-serif">{escape(s.label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
