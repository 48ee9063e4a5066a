"""Minimal SVG emitters for scatter plots and histograms.

Only what the benchmark artifacts need; no external plotting dependency.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import numpy as np

W, H, PAD = 480, 360, 45


def _scale(vals: np.ndarray, lo: float, hi: float, out_lo: float, out_hi: float) -> np.ndarray:
    span = hi - lo if hi > lo else 1.0
    return out_lo + (vals - lo) / span * (out_hi - out_lo)


def _frame(title: str, xlabel: str, ylabel: str) -> list[str]:
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
        f'viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="11">',
        f'<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>',
        f'<rect x="{PAD}" y="{PAD}" width="{W - 2 * PAD}" height="{H - 2 * PAD}" '
        'fill="none" stroke="black"/>',
        f'<text x="{W / 2}" y="18" text-anchor="middle" font-size="13">{title}</text>',
        f'<text x="{W / 2}" y="{H - 8}" text-anchor="middle">{xlabel}</text>',
        f'<text x="14" y="{H / 2}" text-anchor="middle" '
        f'transform="rotate(-90 14 {H / 2})">{ylabel}</text>',
    ]


def scatter_svg(path: str | Path, x: Sequence[float], y: Sequence[float],
                labels: Sequence[str] | None = None, title: str = "",
                xlabel: str = "", ylabel: str = "") -> None:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    parts = _frame(title, xlabel, ylabel)
    if x.size:
        xs = _scale(x, float(x.min()), float(x.max()), PAD + 8, W - PAD - 8)
        ys = _scale(y, float(y.min()), float(y.max()), H - PAD - 8, PAD + 8)
        for i in range(x.size):
            parts.append(f'<circle cx="{xs[i]:.1f}" cy="{ys[i]:.1f}" r="3" fill="steelblue"/>')
            if labels is not None:
                parts.append(
                    f'<text x="{xs[i] + 4:.1f}" y="{ys[i] - 4:.1f}">{labels[i]}</text>')
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n", newline="\n")


def histogram_svg(path: str | Path, values: Sequence[float], bins: int = 20,
                  marks: Sequence[tuple[float, str]] | None = None, title: str = "",
                  xlabel: str = "", ylabel: str = "count") -> None:
    values = np.asarray(values, dtype=float)
    counts, edges = np.histogram(values, bins=bins)
    parts = _frame(title, xlabel, ylabel)
    lo, hi = float(edges[0]), float(edges[-1])
    if marks:
        lo = min(lo, min(m for m, _ in marks))
        hi = max(hi, max(m for m, _ in marks))
    top = max(int(counts.max()), 1)
    for k, c in enumerate(counts):
        x0 = _scale(np.array([edges[k]]), lo, hi, PAD, W - PAD)[0]
        x1 = _scale(np.array([edges[k + 1]]), lo, hi, PAD, W - PAD)[0]
        hgt = (H - 2 * PAD) * c / top
        parts.append(
            f'<rect x="{x0:.1f}" y="{H - PAD - hgt:.1f}" width="{x1 - x0:.1f}" '
            f'height="{hgt:.1f}" fill="lightgray" stroke="gray"/>')
    for value, label in marks or ():
        xv = _scale(np.array([value]), lo, hi, PAD, W - PAD)[0]
        parts.append(f'<line x1="{xv:.1f}" y1="{PAD}" x2="{xv:.1f}" y2="{H - PAD}" '
                     'stroke="firebrick"/>')
        if label:
            parts.append(f'<text x="{xv + 2:.1f}" y="{PAD + 10}">{label}</text>')
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n", newline="\n")
