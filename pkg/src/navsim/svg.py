"""Self-contained SVG figures: world geometry with paths, and signal panels."""
from __future__ import annotations

import math
from xml.sax.saxutils import escape

import numpy as np

PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2"]


def _fmt(v: float) -> str:
    return f"{v:.4g}"


def trajectory_svg(geometry: dict, paths=(), starts=(), goals=(), size: int = 600) -> str:
    """Top view (first two coordinates) of the workspace.

    ``geometry`` has ``r_W``, ``obstacles`` as ``[cx, cy, radius]`` rows and
    optionally ``outlines`` (closed polylines, e.g. star boundaries).
    """
    R = float(geometry["r_W"])
    pad = 0.05 * R
    scale = size / (2 * (R + pad))

    def px(p):
        return (p[0] + R + pad) * scale, (R + pad - p[1]) * scale

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
           f'viewBox="0 0 {size} {size}">',
           '<rect width="100%" height="100%" fill="white"/>']
    cx, cy = px((0.0, 0.0))
    out.append(f'<circle class="workspace" cx="{_fmt(cx)}" cy="{_fmt(cy)}" r="{_fmt(R * scale)}" '
               'fill="none" stroke="black" stroke-width="1.5"/>')
    for c0, c1, r in geometry.get("obstacles", []):
        x, y = px((c0, c1))
        out.append(f'<circle class="obstacle" cx="{_fmt(x)}" cy="{_fmt(y)}" r="{_fmt(r * scale)}" '
                   'fill="#888" fill-opacity="0.6" stroke="#333"/>')
    for line in geometry.get("outlines", []):
        pts = " ".join(f"{_fmt(a)},{_fmt(b)}" for a, b in (px(p) for p in line))
        out.append(f'<polygon class="obstacle-outline" points="{pts}" fill="#888" fill-opacity="0.6" '
                   'stroke="#333"/>')
    for k, path in enumerate(paths):
        path = np.asarray(path, dtype=float)
        if len(path) == 0:
            continue
        # thin very long paths to keep files small; endpoints kept
        step = max(1, len(path) // 4000)
        idx = list(range(0, len(path), step))
        if idx[-1] != len(path) - 1:
            idx.append(len(path) - 1)
        pts = " ".join(f"{_fmt(a)},{_fmt(b)}" for a, b in (px(path[i]) for i in idx))
        out.append(f'<polyline class="path" points="{pts}" fill="none" stroke="{PALETTE[k % len(PALETTE)]}" '
                   'stroke-width="1.5"/>')
    for p in starts:
        x, y = px(p)
        out.append(f'<circle class="start" cx="{_fmt(x)}" cy="{_fmt(y)}" r="4" fill="#2ca02c"/>')
    for p in goals:
        x, y = px(p)
        out.append(f'<rect class="goal" x="{_fmt(x - 4)}" y="{_fmt(y - 4)}" width="8" height="8" fill="#d62728"/>')
    out.append("</svg>")
    return "\n".join(out)


def signals_svg(t, series: dict, title: str = "", width: int = 700, panel_height: int = 160) -> str:
    """One panel per named signal (each value may be a 1-D array or a list of
    arrays drawn together) against time ``t``."""
    t = np.asarray(t, dtype=float)
    names = list(series)
    height = panel_height * max(len(names), 1) + 30
    left, right, top = 70, 20, 30
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}">',
           '<rect width="100%" height="100%" fill="white"/>']
    if title:
        out.append(f'<text x="{width / 2}" y="18" text-anchor="middle" font-size="14">{escape(title)}</text>')
    t0, t1 = (float(t[0]), float(t[-1])) if len(t) else (0.0, 1.0)
    if t1 <= t0:
        t1 = t0 + 1.0
    for k, name in enumerate(names):
        ys = series[name]
        if isinstance(ys, np.ndarray) and ys.ndim == 1:
            ys = [ys]
        ys = [np.asarray(y, dtype=float) for y in ys]
        finite = np.concatenate([y[np.isfinite(y)] for y in ys]) if ys else np.zeros(0)
        lo, hi = (float(finite.min()), float(finite.max())) if finite.size else (0.0, 1.0)
        if hi <= lo:
            hi = lo + 1.0
        y_top = top + k * panel_height
        h = panel_height - 40
        out.append(f'<g class="panel" data-name="{escape(name)}" data-ymin="{lo!r}" data-ymax="{hi!r}">')
        out.append(f'<rect x="{left}" y="{y_top}" width="{width - left - right}" height="{h}" fill="none" '
                   'stroke="#999"/>')
        out.append(f'<text x="8" y="{y_top + h / 2}" font-size="11">{escape(name)}</text>')
        out.append(f'<text x="{left - 4}" y="{y_top + 10}" font-size="9" text-anchor="end">{_fmt(hi)}</text>')
        out.append(f'<text x="{left - 4}" y="{y_top + h}" font-size="9" text-anchor="end">{_fmt(lo)}</text>')
        out.append(f'<text x="{width - right}" y="{y_top + h + 14}" font-size="9" text-anchor="end">'
                   f't = {_fmt(t1)} s</text>')
        for j, y in enumerate(ys):
            if len(y) == 0:
                continue
            step = max(1, len(y) // 3000)
            idx = np.arange(0, len(y), step)
            xs = left + (t[idx] - t0) / (t1 - t0) * (width - left - right)
            yy = y_top + h - (y[idx] - lo) / (hi - lo) * h
            keep = np.isfinite(yy)
            pts = " ".join(f"{_fmt(a)},{_fmt(b)}" for a, b in zip(xs[keep], yy[keep]))
            out.append(f'<polyline class="signal" points="{pts}" fill="none" '
                       f'stroke="{PALETTE[j % len(PALETTE)]}" stroke-width="1.2"/>')
        out.append("</g>")
    out.append("</svg>")
    return "\n".join(out)


def star_outline(center, shape, count: int = 256):
    a = 2 * math.pi * np.arange(count) / count
    dirs = np.column_stack([np.cos(a), np.sin(a)])
    return [list(np.asarray(center)[:2] + shape.radius(d) * d) for d in dirs]
