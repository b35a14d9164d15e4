"""CSV and SVG emission for signal dumps and agreement plots.

SVG output is a bare polyline (plus scatter circles for Bland-Altman),
so results stay diffable and free of imaging dependencies.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

SVG_W, SVG_H, SVG_PAD = 640, 360, 40


def write_csv(path: Path | str, header: list[str], rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(repr(v) if isinstance(v, float) else str(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def _scale(values: np.ndarray, lo: float, hi: float, out_lo: float, out_hi: float) -> np.ndarray:
    if hi == lo:
        return np.full_like(values, (out_lo + out_hi) / 2.0, dtype=float)
    return out_lo + (values - lo) / (hi - lo) * (out_hi - out_lo)


def write_line_svg(path: Path | str, xs, ys, title: str = "") -> None:
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    px = _scale(xs, xs.min(), xs.max(), SVG_PAD, SVG_W - SVG_PAD)
    py = _scale(ys, ys.min(), ys.max(), SVG_H - SVG_PAD, SVG_PAD)
    points = " ".join(f"{x:.2f},{y:.2f}" for x, y in zip(px, py))
    Path(path).write_text(
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{SVG_W}" height="{SVG_H}">\n'
        f"  <title>{title}</title>\n"
        f'  <rect width="{SVG_W}" height="{SVG_H}" fill="white"/>\n'
        f'  <polyline points="{points}" fill="none" stroke="black" stroke-width="1"/>\n'
        "</svg>\n"
    )


def write_scatter_svg(
    path: Path | str, xs, ys, hlines: list[float] | None = None, title: str = ""
) -> None:
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    all_y = np.concatenate([ys, np.asarray(hlines or [], dtype=float)])
    y_lo, y_hi = all_y.min(), all_y.max()
    px = _scale(xs, xs.min(), xs.max(), SVG_PAD, SVG_W - SVG_PAD)
    py = _scale(ys, y_lo, y_hi, SVG_H - SVG_PAD, SVG_PAD)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{SVG_W}" height="{SVG_H}">',
        f"  <title>{title}</title>",
        f'  <rect width="{SVG_W}" height="{SVG_H}" fill="white"/>',
    ]
    for line_y in hlines or []:
        sy = _scale(np.array([line_y]), y_lo, y_hi, SVG_H - SVG_PAD, SVG_PAD)[0]
        parts.append(
            f'  <line x1="{SVG_PAD}" y1="{sy:.2f}" x2="{SVG_W - SVG_PAD}" y2="{sy:.2f}" '
            'stroke="gray" stroke-dasharray="4"/>'
        )
    for x, y in zip(px, py):
        parts.append(f'  <circle cx="{x:.2f}" cy="{y:.2f}" r="3" fill="black"/>')
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n")
