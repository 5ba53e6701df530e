"""Dependency-free SVG polyline charts for trace visualization."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")

PANEL_W = 360
PANEL_H = 240
MARGIN_L = 52
MARGIN_R = 12
MARGIN_T = 28
MARGIN_B = 36


@dataclass
class Series:
    label: str
    x: np.ndarray
    y: np.ndarray


@dataclass
class Panel:
    title: str
    xlabel: str
    ylabel: str
    series: list[Series] = field(default_factory=list)


def _bounds(values: np.ndarray) -> tuple[float, float]:
    finite = values[np.isfinite(values)]
    if finite.size == 0:
        return 0.0, 1.0
    lo, hi = float(finite.min()), float(finite.max())
    if hi == lo:
        pad = max(abs(hi), 1.0) * 0.05
        return lo - pad, hi + pad
    pad = (hi - lo) * 0.05
    return lo - pad, hi + pad


def _ticks(lo: float, hi: float, count: int = 5) -> list[float]:
    return [lo + (hi - lo) * i / (count - 1) for i in range(count)]


def _panel_svg(panel: Panel, x_off: int, y_off: int) -> list[str]:
    xs = np.concatenate([s.x for s in panel.series]) if panel.series else np.zeros(1)
    ys = np.concatenate([s.y for s in panel.series]) if panel.series else np.zeros(1)
    x_lo, x_hi = _bounds(xs)
    y_lo, y_hi = _bounds(ys)
    plot_w = PANEL_W - MARGIN_L - MARGIN_R
    plot_h = PANEL_H - MARGIN_T - MARGIN_B

    def to_px(x: float, y: float) -> tuple[float, float]:
        px = MARGIN_L + (x - x_lo) / (x_hi - x_lo) * plot_w
        py = MARGIN_T + (1.0 - (y - y_lo) / (y_hi - y_lo)) * plot_h
        return px, py

    out = [f'<g transform="translate({x_off},{y_off})">']
    out.append(
        f'<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{plot_w}" height="{plot_h}" '
        'fill="none" stroke="#888" stroke-width="1"/>'
    )
    out.append(
        f'<text x="{PANEL_W / 2}" y="16" text-anchor="middle" font-size="12" '
        f'font-family="sans-serif">{panel.title}</text>'
    )
    for tx in _ticks(x_lo, x_hi):
        px, _ = to_px(tx, y_lo)
        out.append(
            f'<line x1="{px:.1f}" y1="{MARGIN_T + plot_h}" x2="{px:.1f}" '
            f'y2="{MARGIN_T + plot_h + 4}" stroke="#888"/>'
        )
        out.append(
            f'<text x="{px:.1f}" y="{MARGIN_T + plot_h + 16}" text-anchor="middle" '
            f'font-size="9" font-family="sans-serif">{tx:.3g}</text>'
        )
    for ty in _ticks(y_lo, y_hi):
        _, py = to_px(x_lo, ty)
        out.append(f'<line x1="{MARGIN_L - 4}" y1="{py:.1f}" x2="{MARGIN_L}" y2="{py:.1f}" stroke="#888"/>')
        out.append(
            f'<text x="{MARGIN_L - 6}" y="{py + 3:.1f}" text-anchor="end" font-size="9" '
            f'font-family="sans-serif">{ty:.3g}</text>'
        )
    out.append(
        f'<text x="{MARGIN_L + plot_w / 2}" y="{PANEL_H - 6}" text-anchor="middle" '
        f'font-size="10" font-family="sans-serif">{panel.xlabel}</text>'
    )
    out.append(
        f'<text x="12" y="{MARGIN_T + plot_h / 2}" text-anchor="middle" font-size="10" '
        f'font-family="sans-serif" transform="rotate(-90 12 {MARGIN_T + plot_h / 2})">{panel.ylabel}</text>'
    )
    for idx, series in enumerate(panel.series):
        color = PALETTE[idx % len(PALETTE)]
        mask = np.isfinite(series.x) & np.isfinite(series.y)
        pts = " ".join(
            f"{px:.2f},{py:.2f}"
            for px, py in (to_px(float(x), float(y)) for x, y in zip(series.x[mask], series.y[mask]))
        )
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.2" points="{pts}"/>')
        out.append(
            f'<text x="{PANEL_W - MARGIN_R - 4}" y="{MARGIN_T + 12 + 11 * idx}" text-anchor="end" '
            f'font-size="9" font-family="sans-serif" fill="{color}">{series.label}</text>'
        )
    out.append("</g>")
    return out


def render_grid(panels: list[Panel], n_cols: int, path) -> None:
    """Write a grid of polyline panels as one standalone SVG file."""
    n_rows = (len(panels) + n_cols - 1) // n_cols
    width, height = n_cols * PANEL_W, n_rows * PANEL_H
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]
    for idx, panel in enumerate(panels):
        parts.extend(_panel_svg(panel, (idx % n_cols) * PANEL_W, (idx // n_cols) * PANEL_H))
    parts.append("</svg>")
    with open(path, "w") as handle:
        handle.write("\n".join(parts) + "\n")


def oblique_projection(xyz: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Project 3D points to the plotting plane (cabinet projection)."""
    factor = 0.35
    px = xyz[:, 0] + factor * xyz[:, 1]
    py = xyz[:, 2] + factor * xyz[:, 1]
    return px, py
