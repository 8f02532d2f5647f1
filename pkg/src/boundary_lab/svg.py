"""Deterministic SVG figures: the fundamental polygon and torus domains."""
from __future__ import annotations

import math

from .circle import TWO_PI
from .geometry import SurfaceGeometry

SIZE = 600.0
FILL = {"tilde": "#9ecae1", "lower": "#a1d99b", "upper": "#fdae6b", "D": "#bcbddc", "alt": "#fdd0a2"}


def _n(x: float) -> str:
    return format(x, ".17g")


def _header(w: float, h: float) -> list[str]:
    return ['<?xml version="1.0" encoding="UTF-8"?>',
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{_n(w)}" height="{_n(h)}" '
            f'viewBox="0 0 {_n(w)} {_n(h)}">']


def domain_svg(geom: SurfaceGeometry) -> str:
    """Unit circle, the isometric-circle arcs bounding the polygon, vertices and labels."""
    r0 = SIZE * 0.42
    c = SIZE / 2

    def xy(z: complex) -> tuple[float, float]:
        return c + r0 * z.real, c - r0 * z.imag

    out = _header(SIZE, SIZE)
    out.append(f'<circle class="boundary" cx="{_n(c)}" cy="{_n(c)}" r="{_n(r0)}" '
               'fill="none" stroke="black" stroke-width="1"/>')
    for i in range(1, geom.N + 1):
        x0, y0 = xy(complex(math.cos(geom.p(i)), math.sin(geom.p(i))))
        x1, y1 = xy(complex(math.cos(geom.q(i + 1)), math.sin(geom.q(i + 1))))
        rr = r0 * geom.R_euc
        # the arc bulges toward the origin; after the y flip it runs clockwise
        out.append(f'<path class="side" d="M {_n(x0)} {_n(y0)} A {_n(rr)} {_n(rr)} 0 0 0 {_n(x1)} {_n(y1)}" '
                   'fill="none" stroke="#3182bd" stroke-width="1.5"/>')
    for i in range(1, geom.N + 1):
        vx, vy = xy(geom.vertex(i))
        out.append(f'<circle class="vertex" cx="{_n(vx)}" cy="{_n(vy)}" r="3" fill="#d62728"/>')
    for i in range(1, geom.N + 1):
        for name, ang in (("P", geom.p(i)), ("Q", geom.q(i))):
            lx, ly = xy(1.08 * complex(math.cos(ang), math.sin(ang)))
            out.append(f'<text class="label" x="{_n(lx)}" y="{_n(ly)}" font-size="9" '
                       f'text-anchor="middle">{name}{i}</text>')
        vx, vy = xy(0.85 * geom.vertex(i))
        out.append(f'<text class="label" x="{_n(vx)}" y="{_n(vy)}" font-size="8" '
                   f'text-anchor="middle">V{i}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _split(start: float, length: float) -> list[tuple[float, float]]:
    """An arc as at most two intervals of [0, 2π]."""
    end = start + length
    if end <= TWO_PI:
        return [(start, end)]
    return [(start, TWO_PI), (0.0, end - TWO_PI)]


def torus_svg(rects, points=None) -> str:
    """Rectangles on [0, 2π]² (x right, y up); wrapped pieces are split at the seams."""
    m = 30.0
    s = (SIZE - 2 * m) / TWO_PI
    out = _header(SIZE, SIZE)
    out.append(f'<rect class="frame" x="{_n(m)}" y="{_n(m)}" width="{_n(SIZE - 2 * m)}" '
               f'height="{_n(SIZE - 2 * m)}" fill="none" stroke="black" stroke-width="1"/>')
    out.append(f'<line class="diagonal" x1="{_n(m)}" y1="{_n(SIZE - m)}" x2="{_n(SIZE - m)}" '
               f'y2="{_n(m)}" stroke="#999999" stroke-dasharray="4 3"/>')
    for r in rects:
        fill = FILL.get(r.kind, "#cccccc")
        pieces = [(a, b, c, d) for a, b in _split(r.x0, r.xl) for c, d in _split(r.y0, r.yl)]
        d = " ".join(
            f"M {_n(m + a * s)} {_n(SIZE - m - c * s)} H {_n(m + b * s)} "
            f"V {_n(SIZE - m - d_ * s)} H {_n(m + a * s)} Z"
            for a, b, c, d_ in pieces
        )
        out.append(f'<path class="{r.kind}" data-strip="{r.strip}" d="{d}" fill="{fill}" '
                   'fill-opacity="0.8" stroke="black" stroke-width="0.3"/>')
    for x, y in points or []:
        out.append(f'<circle class="sample" cx="{_n(m + x * s)}" cy="{_n(SIZE - m - y * s)}" '
                   'r="0.8" fill="black"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
