"""Standalone SVG rendering of a two-dimensional biplot.

Arrows and points are drawn on separate linear scales, both declared on the
root element (``data-arrow-scale``, ``data-point-scale``) together with the
pixel origin, so plotted positions can be mapped back to biplot units.
"""

from __future__ import annotations

import os
from xml.sax.saxutils import escape, quoteattr

import numpy as np

from .dataio import atomic_write
from .errors import DegenerateAxis
from .pca import BiplotGeometry

SIZE = 640
MARGIN = 70


def _scale(values: np.ndarray, radius: float) -> float:
    extent = float(np.abs(values).max(initial=0.0))
    return radius / extent if extent > 0 else 1.0


def render_biplot_svg(geom: BiplotGeometry, title: str | None = None) -> str:
    if geom.k != 2:
        raise DegenerateAxis(f"SVG biplots need k=2 geometry, got k={geom.k}")
    c = SIZE / 2
    radius = c - MARGIN
    a_scale = _scale(geom.arrows, radius)
    p_scale = _scale(geom.points, radius)

    def px(x: float, y: float, s: float) -> tuple[str, str]:
        return f"{c + s * x:.3f}", f"{c - s * y:.3f}"

    pc1, pc2 = (f"PC{k + 1} ({100 * geom.proportions[k]:.1f}%)" for k in range(2))
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" '
        f'viewBox="0 0 {SIZE} {SIZE}" data-origin-x="{c:.3f}" data-origin-y="{c:.3f}" '
        f'data-arrow-scale="{a_scale!r}" data-point-scale="{p_scale!r}" data-form="{geom.form}">',
        "<defs><marker id=\"head\" viewBox=\"0 0 10 10\" refX=\"10\" refY=\"5\" markerWidth=\"6\" "
        "markerHeight=\"6\" orient=\"auto-start-reverse\"><path d=\"M 0 0 L 10 5 L 0 10 z\" fill=\"#b22222\"/>"
        "</marker></defs>",
        f'<rect width="{SIZE}" height="{SIZE}" fill="white"/>',
    ]
    if title:
        out.append(f'<text class="title" x="{c:.3f}" y="24" text-anchor="middle" font-size="16">{escape(title)}</text>')
    out += [
        f'<line class="axis" x1="{MARGIN / 2:.3f}" y1="{c:.3f}" x2="{SIZE - MARGIN / 2:.3f}" y2="{c:.3f}" '
        'stroke="#999" stroke-width="1"/>',
        f'<line class="axis" x1="{c:.3f}" y1="{MARGIN / 2:.3f}" x2="{c:.3f}" y2="{SIZE - MARGIN / 2:.3f}" '
        'stroke="#999" stroke-width="1"/>',
        f'<text class="axis-label" id="pc1" x="{SIZE - MARGIN / 2:.3f}" y="{c + 18:.3f}" text-anchor="end" '
        f'font-size="13">{escape(pc1)}</text>',
        f'<text class="axis-label" id="pc2" x="{c + 6:.3f}" y="{MARGIN / 2 + 4:.3f}" font-size="13">{escape(pc2)}</text>',
        '<g class="points" fill="#1f4e79" font-size="10">',
    ]
    for label, (x, y) in zip(geom.point_labels, geom.points):
        cx, cy = px(x, y, p_scale)
        out.append(f'<circle class="point" data-label={quoteattr(label)} cx="{cx}" cy="{cy}" r="3"/>')
        out.append(f'<text class="point-label" x="{float(cx) + 4:.3f}" y="{float(cy) - 4:.3f}">{escape(label)}</text>')
    out.append("</g>")
    out.append('<g class="arrows" stroke="#b22222" fill="#b22222" font-size="11">')
    for label, (x, y) in zip(geom.arrow_labels, geom.arrows):
        x2, y2 = px(x, y, a_scale)
        out.append(
            f'<line class="arrow" data-label={quoteattr(label)} x1="{c:.3f}" y1="{c:.3f}" x2="{x2}" y2="{y2}" '
            'stroke-width="1.5" marker-end="url(#head)"/>'
        )
        out.append(f'<text class="arrow-label" stroke="none" x="{x2}" y="{y2}">{escape(label)}</text>')
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_biplot_svg(geom: BiplotGeometry, path: str | os.PathLike, title: str | None = None) -> None:
    atomic_write(path, render_biplot_svg(geom, title))
