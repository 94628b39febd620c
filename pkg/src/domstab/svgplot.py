"""Minimal deterministic SVG charts.

Writes self-contained SVG text directly; output depends only on the data
passed in, so repeated runs are byte-identical.  One <path> element per
curve, one <circle> per scatter point.  Non-finite curve values split the
path into separate segments instead of being drawn.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

__all__ = ["Curve", "curve_chart"]

_WIDTH = 640
_HEIGHT = 420
_MARGIN_LEFT = 64
_MARGIN_RIGHT = 16
_MARGIN_TOP = 36
_MARGIN_BOTTOM = 48
_PALETTE = ("#1f6fb2", "#c44e52", "#55a868", "#8172b2", "#ccb974")

_PREAMBLE = (
    '<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" '
    'viewBox="0 0 {w} {h}">\n'
    '<rect width="{w}" height="{h}" fill="white"/>\n'
)
_POSTAMBLE = "</svg>\n"


@dataclass(frozen=True)
class Curve:
    label: str
    x: Sequence[float]
    y: Sequence[float]


def _finite(values) -> list[float]:
    return [float(v) for v in values if math.isfinite(float(v))]


def _bounds(curves: Sequence[Curve], points: Sequence[tuple[float, float]]):
    xs: list[float] = []
    ys: list[float] = []
    for curve in curves:
        xs.extend(_finite(curve.x))
        ys.extend(_finite(curve.y))
    for px, py in points:
        if math.isfinite(px) and math.isfinite(py):
            xs.append(float(px))
            ys.append(float(py))
    if not xs or not ys:
        xs, ys = [0.0, 1.0], [0.0, 1.0]
    x_lo, x_hi = min(xs), max(xs)
    y_lo, y_hi = min(ys), max(ys)
    if x_hi == x_lo:
        x_lo, x_hi = x_lo - 0.5, x_hi + 0.5
    if y_hi == y_lo:
        y_lo, y_hi = y_lo - 0.5, y_hi + 0.5
    x_pad = 0.05 * (x_hi - x_lo)
    y_pad = 0.05 * (y_hi - y_lo)
    return x_lo - x_pad, x_hi + x_pad, y_lo - y_pad, y_hi + y_pad


def curve_chart(
    title: str,
    curves: Sequence[Curve],
    points: Sequence[tuple[float, float]] = (),
    x_label: str = "dominance",
    y_label: str = "change rate",
) -> str:
    """Render curves plus a scatter overlay as an SVG string."""
    x_lo, x_hi, y_lo, y_hi = _bounds(curves, points)
    plot_w = _WIDTH - _MARGIN_LEFT - _MARGIN_RIGHT
    plot_h = _HEIGHT - _MARGIN_TOP - _MARGIN_BOTTOM

    def sx(x: float) -> float:
        return _MARGIN_LEFT + (x - x_lo) / (x_hi - x_lo) * plot_w

    def sy(y: float) -> float:
        return _MARGIN_TOP + (y_hi - y) / (y_hi - y_lo) * plot_h

    parts = [_PREAMBLE.format(w=_WIDTH, h=_HEIGHT)]
    parts.append(
        f'<text x="{_WIDTH / 2:.1f}" y="20" text-anchor="middle" '
        f'font-family="sans-serif" font-size="14">{_escape(title)}</text>\n'
    )

    # axes box and ticks
    parts.append(
        f'<rect x="{_MARGIN_LEFT}" y="{_MARGIN_TOP}" width="{plot_w}" '
        f'height="{plot_h}" fill="none" stroke="#444" stroke-width="1"/>\n'
    )
    for i in range(5):
        frac = i / 4
        x_val = x_lo + frac * (x_hi - x_lo)
        y_val = y_lo + frac * (y_hi - y_lo)
        px = sx(x_val)
        py = sy(y_val)
        parts.append(
            f'<line x1="{px:.2f}" y1="{_MARGIN_TOP + plot_h}" x2="{px:.2f}" '
            f'y2="{_MARGIN_TOP + plot_h + 4}" stroke="#444"/>\n'
            f'<text x="{px:.2f}" y="{_MARGIN_TOP + plot_h + 18}" '
            f'text-anchor="middle" font-family="sans-serif" font-size="11">'
            f"{x_val:.3g}</text>\n"
        )
        parts.append(
            f'<line x1="{_MARGIN_LEFT - 4}" y1="{py:.2f}" x2="{_MARGIN_LEFT}" '
            f'y2="{py:.2f}" stroke="#444"/>\n'
            f'<text x="{_MARGIN_LEFT - 8}" y="{py + 4:.2f}" text-anchor="end" '
            f'font-family="sans-serif" font-size="11">{y_val:.3g}</text>\n'
        )
    parts.append(
        f'<text x="{_MARGIN_LEFT + plot_w / 2:.1f}" y="{_HEIGHT - 10}" '
        f'text-anchor="middle" font-family="sans-serif" font-size="12">'
        f"{_escape(x_label)}</text>\n"
    )
    parts.append(
        f'<text x="16" y="{_MARGIN_TOP + plot_h / 2:.1f}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="12" '
        f'transform="rotate(-90 16 {_MARGIN_TOP + plot_h / 2:.1f})">'
        f"{_escape(y_label)}</text>\n"
    )

    # zero line when it is inside the frame
    if y_lo < 0.0 < y_hi:
        zero_y = sy(0.0)
        parts.append(
            f'<line x1="{_MARGIN_LEFT}" y1="{zero_y:.2f}" '
            f'x2="{_MARGIN_LEFT + plot_w}" y2="{zero_y:.2f}" '
            f'stroke="#bbb" stroke-dasharray="4 3"/>\n'
        )

    for index, curve in enumerate(curves):
        color = _PALETTE[index % len(_PALETTE)]
        path = _path_data(curve, sx, sy)
        if path:
            parts.append(
                f'<path d="{path}" fill="none" stroke="{color}" stroke-width="1.5"/>\n'
            )
        legend_y = _MARGIN_TOP + 14 + 14 * index
        parts.append(
            f'<text x="{_MARGIN_LEFT + 8}" y="{legend_y}" fill="{color}" '
            f'font-family="sans-serif" font-size="11">{_escape(curve.label)}</text>\n'
        )

    for px, py in points:
        if math.isfinite(px) and math.isfinite(py):
            parts.append(
                f'<circle cx="{sx(px):.2f}" cy="{sy(py):.2f}" r="3" '
                f'fill="#333" fill-opacity="0.6"/>\n'
            )

    parts.append(_POSTAMBLE)
    return "".join(parts)


def _path_data(curve: Curve, sx, sy) -> str:
    chunks = []
    pen_down = False
    for x, y in zip(curve.x, curve.y):
        x, y = float(x), float(y)
        if not (math.isfinite(x) and math.isfinite(y)):
            pen_down = False
            continue
        command = "L" if pen_down else "M"
        chunks.append(f"{command} {sx(x):.2f} {sy(y):.2f}")
        pen_down = True
    return " ".join(chunks)


def _escape(text: str) -> str:
    return (
        text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
    )
