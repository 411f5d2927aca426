"""Minimal static SVG line charts (no plotting dependency)."""

from __future__ import annotations

from html import escape
from pathlib import Path

_W, _H, _PAD = 480, 360, 50


def line_chart(series, path, *, title="", xlabel="", ylabel="", diagonal=False) -> Path:
    """Write ``series`` (mapping name -> list of (x, y)) as an SVG file."""
    xs = [x for pts in series.values() for x, _ in pts]
    ys = [y for pts in series.values() for _, y in pts]
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    if x1 == x0:
        x1 = x0 + 1
    if y1 == y0:
        y1 = y0 + 1

    def sx(x):
        return _PAD + (x - x0) / (x1 - x0) * (_W - 2 * _PAD)

    def sy(y):
        return _H - _PAD - (y - y0) / (y1 - y0) * (_H - 2 * _PAD)

    colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"]
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<line x1="{_PAD}" y1="{_H - _PAD}" x2="{_W - _PAD}" y2="{_H - _PAD}" stroke="black"/>',
        f'<line x1="{_PAD}" y1="{_PAD}" x2="{_PAD}" y2="{_H - _PAD}" stroke="black"/>',
        f'<text x="{_W / 2}" y="20" text-anchor="middle">{escape(title)}</text>',
        f'<text x="{_W / 2}" y="{_H - 10}" text-anchor="middle">{escape(xlabel)}</text>',
        f'<text x="15" y="{_H / 2}" transform="rotate(-90 15 {_H / 2})" '
        f'text-anchor="middle">{escape(ylabel)}</text>',
        f'<text x="{_PAD}" y="{_H - _PAD + 15}" text-anchor="middle">{x0:g}</text>',
        f'<text x="{_W - _PAD}" y="{_H - _PAD + 15}" text-anchor="middle">{x1:g}</text>',
        f'<text x="{_PAD - 5}" y="{_H - _PAD}" text-anchor="end">{y0:.3g}</text>',
        f'<text x="{_PAD - 5}" y="{_PAD}" text-anchor="end">{y1:.3g}</text>',
    ]
    if diagonal:
        parts.append(
            f'<line x1="{sx(x0)}" y1="{sy(y0)}" x2="{sx(x1)}" y2="{sy(y1)}" '
            'stroke="gray" stroke-dasharray="4"/>'
        )
    for i, (name, pts) in enumerate(series.items()):
        color = colors[i % len(colors)]
        coords = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in pts)
        parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="2" points="{coords}"/>')
        parts.append(
            f'<text x="{_W - _PAD}" y="{_PAD + 15 * (i + 1)}" fill="{color}" '
            f'text-anchor="end">{escape(name)}</text>'
        )
    parts.append("</svg>\n")
    path = Path(path)
    path.write_text("\n".join(parts), encoding="utf-8")
    return path
