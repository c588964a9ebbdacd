"""Tiny SVG writer for traces and rasters (for eyeballing, not publication)."""
from __future__ import annotations

from pathlib import Path

import numpy as np

W, H, PAD = 800, 300, 40
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e")


def _scale(x, lo, hi, a, b):
    span = hi - lo if hi > lo else 1.0
    return a + (np.asarray(x, float) - lo) / span * (b - a)


def _frame(title: str, body: list[str]) -> str:
    return "\n".join([
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
        f'viewBox="0 0 {W} {H}">',
        f'<rect width="{W}" height="{H}" fill="white"/>',
        f'<text x="{PAD}" y="{PAD - 15}" font-family="sans-serif" font-size="14">{title}</text>',
        f'<rect x="{PAD}" y="{PAD}" width="{W - 2 * PAD}" height="{H - 2 * PAD}" '
        'fill="none" stroke="#888"/>',
        *body, "</svg>", ""])


def traces_svg(path, series: dict[str, tuple[np.ndarray, np.ndarray]], title: str = "") -> None:
    """One polyline per named (t, v) series on shared axes."""
    ts = np.concatenate([s[0] for s in series.values()])
    vs = np.concatenate([s[1] for s in series.values()])
    body = []
    for n, (name, (t, v)) in enumerate(series.items()):
        x = _scale(t, ts.min(), ts.max(), PAD, W - PAD)
        y = _scale(v, vs.min(), vs.max(), H - PAD, PAD)
        pts = " ".join(f"{a:.1f},{b:.1f}" for a, b in zip(x, y))
        col = COLORS[n % len(COLORS)]
        body.append(f'<polyline fill="none" stroke="{col}" stroke-width="1" points="{pts}"/>')
        body.append(f'<text x="{W - PAD - 120}" y="{PAD + 15 * (n + 1)}" fill="{col}" '
                    f'font-family="sans-serif" font-size="12">{name}</text>')
    Path(path).write_text(_frame(title, body))


def raster_svg(path, times: np.ndarray, neurons: np.ndarray, n_neurons: int, sim_ms: float,
               is_exc: np.ndarray | None = None, title: str = "") -> None:
    x = _scale(times, 0.0, sim_ms, PAD, W - PAD)
    y = _scale(neurons, 0, max(n_neurons - 1, 1), H - PAD, PAD)
    body = []
    for xi, yi, i in zip(x, y, neurons):
        col = COLORS[0] if is_exc is None or is_exc[i] else COLORS[1]
        body.append(f'<circle cx="{xi:.1f}" cy="{yi:.1f}" r="0.8" fill="{col}"/>')
    Path(path).write_text(_frame(title, body))
