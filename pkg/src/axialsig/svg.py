"""Minimal deterministic SVG line plots.

Coordinates are printed with three decimals and elements are written in a
fixed order, so the same data always produce the same bytes.
"""
from __future__ import annotations

from dataclasses import dataclass
from xml.sax.saxutils import escape

import numpy as np

W, H = 640, 420
ML, MR, MT, MB = 70, 20, 40, 55
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e")


class PlotError(ValueError):
    pass


@dataclass
class Series:
    name: str
    x: np.ndarray
    y: np.ndarray
    dashed: bool = False
    markers: bool = False


def _ticks(lo: float, hi: float, count: int = 5):
    if hi <= lo:
        hi = lo + 1.0
    return [lo + (hi - lo) * t / (count - 1) for t in range(count)]


def _fmt(v: float) -> str:
    return f"{v:.3f}"


def render_svg(series, title: str = "", xlabel: str = "", ylabel: str = "",
               logx: bool = False, logy: bool = False) -> str:
    """Line plot of one or more series; log axes plot log10 of the data."""
    if not series or all(len(s.x) == 0 for s in series):
        raise PlotError("nothing to plot")
    tx = (lambda v: np.log10(v)) if logx else (lambda v: v)
    ty = (lambda v: np.log10(v)) if logy else (lambda v: v)
    pts = []
    for s in series:
        x = np.asarray(s.x, dtype=float)
        y = np.asarray(s.y, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            X, Y = tx(x), ty(y)
        ok = np.isfinite(X) & np.isfinite(Y)
        pts.append((s, X[ok], Y[ok]))
    allx = np.concatenate([p[1] for p in pts])
    ally = np.concatenate([p[2] for p in pts])
    if allx.size == 0:
        raise PlotError("no finite points to plot")
    x0, x1 = float(allx.min()), float(allx.max())
    y0, y1 = float(ally.min()), float(ally.max())
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    pad = 0.04 * (y1 - y0)
    y0, y1 = y0 - pad, y1 + pad

    def px(v):
        return ML + (v - x0) / (x1 - x0) * (W - ML - MR)

    def py(v):
        return H - MB - (v - y0) / (y1 - y0) * (H - MT - MB)

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">',
           f'<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>',
           f'<text x="{W / 2:.3f}" y="22.000" text-anchor="middle" font-size="15" '
           f'font-family="sans-serif">{escape(title)}</text>']
    # axes and ticks
    out.append(f'<line x1="{ML}" y1="{H - MB}" x2="{W - MR}" y2="{H - MB}" stroke="black"/>')
    out.append(f'<line x1="{ML}" y1="{MT}" x2="{ML}" y2="{H - MB}" stroke="black"/>')
    for v in _ticks(x0, x1):
        lab = f"1e{v:.2f}" if logx else f"{v:.3g}"
        out.append(f'<line x1="{_fmt(px(v))}" y1="{H - MB}" x2="{_fmt(px(v))}" y2="{H - MB + 5}" stroke="black"/>')
        out.append(f'<text x="{_fmt(px(v))}" y="{H - MB + 18}" text-anchor="middle" font-size="11" '
                   f'font-family="sans-serif">{lab}</text>')
    for v in _ticks(y0, y1):
        lab = f"1e{v:.2f}" if logy else f"{v:.3g}"
        out.append(f'<line x1="{ML - 5}" y1="{_fmt(py(v))}" x2="{ML}" y2="{_fmt(py(v))}" stroke="black"/>')
        out.append(f'<text x="{ML - 8}" y="{_fmt(py(v) + 4)}" text-anchor="end" font-size="11" '
                   f'font-family="sans-serif">{lab}</text>')
    out.append(f'<text x="{(ML + W - MR) / 2:.3f}" y="{H - 12}" text-anchor="middle" font-size="12" '
               f'font-family="sans-serif">{escape(xlabel)}</text>')
    out.append(f'<text x="16" y="{(MT + H - MB) / 2:.3f}" text-anchor="middle" font-size="12" '
               f'font-family="sans-serif" transform="rotate(-90 16 {(MT + H - MB) / 2:.3f})">{escape(ylabel)}</text>')
    for idx, (s, X, Y) in enumerate(pts):
        color = COLORS[idx % len(COLORS)]
        if X.size:
            coords = " ".join(f"{_fmt(px(a))},{_fmt(py(b))}" for a, b in zip(X, Y))
            dash = ' stroke-dasharray="6,4"' if s.dashed else ""
            out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5"{dash} points="{coords}"/>')
            if s.markers:
                for a, b in zip(X, Y):
                    out.append(f'<circle cx="{_fmt(px(a))}" cy="{_fmt(py(b))}" r="2" fill="{color}"/>')
        ly = MT + 14 + 16 * idx
        out.append(f'<line x1="{W - MR - 150}" y1="{ly}" x2="{W - MR - 130}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{W - MR - 125}" y="{ly + 4}" font-size="11" font-family="sans-serif">{escape(s.name)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def fitted_line(xs, slope: float, intercept: float) -> np.ndarray:
    """exp(intercept) * x^slope, the power law behind a log-log fit."""
    xs = np.asarray(xs, dtype=float)
    return np.exp(intercept) * xs ** slope


def reference_slope_line(xs, ys, slope: float) -> np.ndarray:
    """Power law with the given slope anchored at the first data point."""
    xs = np.asarray(xs, dtype=float)
    return ys[0] * (xs / xs[0]) ** slope if len(xs) else xs

