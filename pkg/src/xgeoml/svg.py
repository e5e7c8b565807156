"""Dependency-free SVG figures: coefficient heatmaps and bandwidth curves."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence
from xml.sax.saxutils import escape

import numpy as np

PALETTE = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
           "#e377c2", "#7f7f7f", "#bcbd22", "#17becf")


def _rgb(hex_color: str) -> np.ndarray:
    h = hex_color.lstrip("#")
    return np.array([int(h[k:k + 2], 16) for k in (0, 2, 4)], dtype=float)


def ramp_color(t: float, low: str, high: str) -> str:
    c = np.rint(_rgb(low) + (_rgb(high) - _rgb(low)) * min(max(t, 0.0), 1.0)).astype(int)
    return "#{:02x}{:02x}{:02x}".format(*c)


@dataclass
class HeatmapSpec:
    values: Sequence[float]
    coords: np.ndarray
    ids: Sequence[str] | None = None
    low: str = "#fff5eb"
    high: str = "#7f2704"
    title: str = ""
    cell_px: float = 12.0


def _spacing(v: np.ndarray) -> float:
    u = np.unique(v)
    if u.size < 2:
        return 1.0
    return float(np.min(np.diff(u)))


def render_heatmap(spec: HeatmapSpec) -> str:
    """One square cell per point, coloured on a linear ramp between the field's min and max."""
    values = np.asarray(spec.values, dtype=float)
    coords = np.asarray(spec.coords, dtype=float)
    if values.size == 0:
        raise ValueError("empty field")
    bad = ~np.isfinite(values)
    if bad.any():
        ids = spec.ids if spec.ids is not None else [str(i) for i in range(values.size)]
        raise ValueError("non-finite values at ids: " + ", ".join(str(ids[i]) for i in np.flatnonzero(bad)))
    lo, hi = float(values.min()), float(values.max())
    span = hi - lo
    sx, sy = _spacing(coords[:, 0]), _spacing(coords[:, 1])
    px = spec.cell_px
    x0, y1 = coords[:, 0].min(), coords[:, 1].max()
    width = (coords[:, 0].max() - x0) / sx * px + px
    height = (y1 - coords[:, 1].min()) / sy * px + px
    top = 24.0
    legend_y = top + height + 10
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width + 20:.1f}" height="{legend_y + 40:.1f}">',
           f'<text x="10" y="16" font-size="12">{escape(spec.title)}</text>']
    for (cx, cy), v in zip(coords, values):
        t = (v - lo) / span if span > 0 else 0.0
        x = 10 + (cx - x0) / sx * px
        y = top + (y1 - cy) / sy * px
        out.append(f'<rect x="{x:.2f}" y="{y:.2f}" width="{px:.2f}" height="{px:.2f}" '
                   f'fill="{ramp_color(t, spec.low, spec.high)}" data-value="{v!r}"/>')
    out.append('<defs><linearGradient id="ramp">'
               f'<stop offset="0" stop-color="{spec.low}"/><stop offset="1" stop-color="{spec.high}"/>'
               '</linearGradient></defs>')
    out.append(f'<rect class="legend" x="10" y="{legend_y:.1f}" width="{min(width, 200):.1f}" height="10" fill="url(#ramp)"/>')
    out.append(f'<text class="legend-min" x="10" y="{legend_y + 24:.1f}" font-size="10">{lo:.4g}</text>')
    out.append(f'<text class="legend-max" x="{10 + min(width, 200):.1f}" y="{legend_y + 24:.1f}" '
               f'font-size="10" text-anchor="end">{hi:.4g}</text>')
    out.append("</svg>\n")
    return "\n".join(out)


def render_curves(series: Mapping[str, tuple[Sequence[float], Sequence[float]]], title: str = "",
                  xlabel: str = "bandwidth", ylabel: str = "LOO R2", width: float = 640, height: float = 360) -> str:
    """Line chart with one polyline per series; NaN points break nothing, they are skipped."""
    pts = [(np.asarray(x, float), np.asarray(y, float)) for x, y in series.values()]
    xs = np.concatenate([x for x, _ in pts]) if pts else np.zeros(1)
    ys = np.concatenate([y for _, y in pts]) if pts else np.zeros(1)
    ys = ys[np.isfinite(ys)]
    xmin, xmax = float(xs.min()), float(xs.max())
    ymin, ymax = (float(ys.min()), float(ys.max())) if ys.size else (0.0, 1.0)
    if xmax == xmin:
        xmax = xmin + 1.0
    if ymax == ymin:
        ymax = ymin + 1.0
    L, R, T, B = 60.0, 160.0, 30.0, 40.0
    pw, ph = width - L - R, height - T - B

    def sx(x):
        return L + (x - xmin) / (xmax - xmin) * pw

    def sy(y):
        return T + (ymax - y) / (ymax - ymin) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0f}" height="{height:.0f}">',
           f'<text x="{L}" y="18" font-size="13">{escape(title)}</text>',
           f'<rect x="{L}" y="{T}" width="{pw}" height="{ph}" fill="none" stroke="#444"/>',
           f'<text x="{L + pw / 2}" y="{height - 8}" font-size="11" text-anchor="middle">{escape(xlabel)}</text>',
           f'<text x="14" y="{T + ph / 2}" font-size="11" transform="rotate(-90 14 {T + ph / 2})" '
           f'text-anchor="middle">{escape(ylabel)}</text>',
           f'<text x="{L - 4}" y="{T + 4}" font-size="10" text-anchor="end">{ymax:.3g}</text>',
           f'<text x="{L - 4}" y="{T + ph}" font-size="10" text-anchor="end">{ymin:.3g}</text>',
           f'<text x="{L}" y="{T + ph + 14}" font-size="10">{xmin:.4g}</text>',
           f'<text x="{L + pw}" y="{T + ph + 14}" font-size="10" text-anchor="end">{xmax:.4g}</text>']
    for k, (label, (x, y)) in enumerate(series.items()):
        color = PALETTE[k % len(PALETTE)]
        x, y = np.asarray(x, float), np.asarray(y, float)
        ok = np.isfinite(y)
        path = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(x[ok], y[ok]))
        out.append(f'<polyline class="series" data-label="{escape(label)}" points="{path}" '
                   f'fill="none" stroke="{color}" stroke-width="1.5"/>')
        ly = T + 14 * k + 8
        out.append(f'<line x1="{L + pw + 10}" y1="{ly}" x2="{L + pw + 28}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{L + pw + 32}" y="{ly + 4}" font-size="10">{escape(label)}</text>')
    out.append("</svg>\n")
    return "\n".join(out)


def render_panels(panels: Mapping[str, Mapping[str, tuple[Sequence[float], Sequence[float]]]],
                  cols: int = 3, width: float = 420, height: float = 280, **kw) -> str:
    """Grid of curve charts, one panel per mapping entry (e.g. kernel kind x bandwidth mode)."""
    rows = max(1, -(-len(panels) // cols))
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{cols * width:.0f}" height="{rows * height:.0f}">']
    for k, (title, series) in enumerate(panels.items()):
        x, y = (k % cols) * width, (k // cols) * height
        inner = render_curves(series, title=title, width=width, height=height, **kw)
        inner = inner.replace('<svg xmlns="http://www.w3.org/2000/svg"', f'<svg class="panel" x="{x:.0f}" y="{y:.0f}"', 1)
        out.append(inner.rstrip("\n"))
    out.append("</svg>\n")
    return "\n".join(out)
