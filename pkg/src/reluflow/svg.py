"""Minimal deterministic SVG charts (line charts and heatmaps).

Hand-rolled on purpose: output bytes depend only on the input data, so
re-running a command with the same seed reproduces figures exactly.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

__all__ = ["line_chart", "heatmap"]

_W, _H = 640, 420
_ML, _MR, _MT, _MB = 70, 20, 40, 50
_PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]


def _fmt(v: float) -> str:
    return f"{v:.6g}"


def _finite(values) -> np.ndarray:
    a = np.asarray(values, dtype=float).ravel()
    return a[np.isfinite(a)]


def _axis_range(vals: np.ndarray) -> tuple[float, float]:
    if vals.size == 0:
        return 0.0, 1.0
    lo, hi = float(vals.min()), float(vals.max())
    if lo == hi:
        pad = 1.0 if lo == 0 else abs(lo) * 0.1
        return lo - pad, hi + pad
    return lo, hi


def line_chart(
    x,
    series: dict[str, np.ndarray],
    path: str | Path,
    title: str = "",
    log_y: bool = False,
) -> Path:
    """Write a multi-series line chart; returns the output path."""
    if not series:
        raise ValueError("no series to plot")
    x = np.asarray(x, dtype=float)
    plot_series = {}
    for name, y in series.items():
        y = np.asarray(y, dtype=float)
        if y.shape != x.shape:
            raise ValueError(f"series {name!r} length mismatch")
        if log_y:
            y = np.where(y > 0, y, np.nan)
            y = np.log10(y)
        plot_series[name] = y

    xlo, xhi = _axis_range(_finite(x))
    ylo, yhi = _axis_range(_finite(np.concatenate(list(plot_series.values()))))
    iw, ih = _W - _ML - _MR, _H - _MT - _MB

    def sx(v):
        return _ML + (v - xlo) / (xhi - xlo) * iw

    def sy(v):
        return _MT + (yhi - v) / (yhi - ylo) * ih

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<text x="{_W // 2}" y="24" text-anchor="middle" font-family="sans-serif" '
        f'font-size="14">{title}</text>',
        f'<line x1="{_ML}" y1="{_MT + ih}" x2="{_ML + iw}" y2="{_MT + ih}" '
        f'stroke="black"/>',
        f'<line x1="{_ML}" y1="{_MT}" x2="{_ML}" y2="{_MT + ih}" stroke="black"/>',
    ]
    for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
        xv = xlo + frac * (xhi - xlo)
        yv = ylo + frac * (yhi - ylo)
        ylabel = _fmt(10**yv) if log_y else _fmt(yv)
        parts.append(
            f'<text x="{_fmt(sx(xv))}" y="{_H - 28}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="10">{_fmt(xv)}</text>'
        )
        parts.append(
            f'<text x="{_ML - 6}" y="{_fmt(sy(yv) + 3)}" text-anchor="end" '
            f'font-family="sans-serif" font-size="10">{ylabel}</text>'
        )
    for idx, (name, y) in enumerate(plot_series.items()):
        color = _PALETTE[idx % len(_PALETTE)]
        pts = [
            f"{_fmt(sx(xv))},{_fmt(sy(yv))}"
            for xv, yv in zip(x, y)
            if math.isfinite(yv)
        ]
        if pts:
            parts.append(
                f'<polyline fill="none" stroke="{color}" stroke-width="1.5" '
                f'points="{" ".join(pts)}"/>'
            )
        ly = _MT + 14 + 14 * idx
        parts.append(
            f'<line x1="{_ML + iw - 130}" y1="{ly - 4}" x2="{_ML + iw - 110}" '
            f'y2="{ly - 4}" stroke="{color}" stroke-width="2"/>'
        )
        parts.append(
            f'<text x="{_ML + iw - 105}" y="{ly}" font-family="sans-serif" '
            f'font-size="11">{name}</text>'
        )
    parts.append("</svg>")
    out = Path(path)
    out.write_text("\n".join(parts) + "\n")
    return out


def _color(v: float) -> str:
    """Two-anchor gradient (dark blue -> yellow); NaN renders gray."""
    if not math.isfinite(v):
        return "#bbbbbb"
    v = min(max(v, 0.0), 1.0)
    lo = (33, 56, 121)
    hi = (247, 221, 76)
    rgb = tuple(round(a + v * (b - a)) for a, b in zip(lo, hi))
    return f"#{rgb[0]:02x}{rgb[1]:02x}{rgb[2]:02x}"


def heatmap(
    values,
    row_labels,
    col_labels,
    path: str | Path,
    title: str = "",
    row_name: str = "",
    col_name: str = "",
) -> Path:
    """Write a labeled heatmap of a 2-d array; returns the output path."""
    vals = np.asarray(values, dtype=float)
    if vals.ndim != 2:
        raise ValueError("heatmap needs a 2-d array")
    nr, nc = vals.shape
    if nr != len(row_labels) or nc != len(col_labels):
        raise ValueError("label counts must match the value grid")
    finite = _finite(vals)
    lo, hi = _axis_range(finite)
    iw, ih = _W - _ML - _MR, _H - _MT - _MB
    cw, ch = iw / nc, ih / nr
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<text x="{_W // 2}" y="24" text-anchor="middle" font-family="sans-serif" '
        f'font-size="14">{title}</text>',
    ]
    for i in range(nr):
        for j in range(nc):
            v = vals[i, j]
            norm = (v - lo) / (hi - lo) if hi > lo and math.isfinite(v) else v
            x0, y0 = _ML + j * cw, _MT + i * ch
            parts.append(
                f'<rect x="{_fmt(x0)}" y="{_fmt(y0)}" width="{_fmt(cw)}" '
                f'height="{_fmt(ch)}" fill="{_color(norm)}" stroke="white"/>'
            )
            label = _fmt(v) if math.isfinite(v) else "n/a"
            parts.append(
                f'<text x="{_fmt(x0 + cw / 2)}" y="{_fmt(y0 + ch / 2 + 4)}" '
                f'text-anchor="middle" font-family="sans-serif" font-size="10" '
                f'fill="white">{label}</text>'
            )
    for i, lab in enumerate(row_labels):
        parts.append(
            f'<text x="{_ML - 8}" y="{_fmt(_MT + i * ch + ch / 2 + 4)}" '
            f'text-anchor="end" font-family="sans-serif" font-size="11">{lab}</text>'
        )
    for j, lab in enumerate(col_labels):
        parts.append(
            f'<text x="{_fmt(_ML + j * cw + cw / 2)}" y="{_H - 30}" '
            f'text-anchor="middle" font-family="sans-serif" font-size="11">{lab}</text>'
        )
    if row_name:
        parts.append(
            f'<text x="14" y="{_MT + ih / 2}" font-family="sans-serif" '
            f'font-size="12" transform="rotate(-90 14 {_MT + ih / 2})" '
            f'text-anchor="middle">{row_name}</text>'
        )
    if col_name:
        parts.append(
            f'<text x="{_ML + iw / 2}" y="{_H - 8}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="12">{col_name}</text>'
        )
    parts.append("</svg>")
    out = Path(path)
    out.write_text("\n".join(parts) + "\n")
    return out
