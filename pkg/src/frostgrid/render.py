"""Deterministic SVG rendering of orchard layouts.

Pure string assembly with fixed-precision coordinates: identical inputs
produce byte-identical files, so renders can be diffed in review. Layers
(trees, candidate sites, check points, heaters, pipes) toggle
independently; a legend and a scale bar sit in the margin.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import RenderError
from .instance import OrchardInstance
from .plan import DesignPlan


@dataclass(frozen=True)
class LayerFlags:
    trees: bool = True
    candidate_sites: bool = True
    check_points: bool = True
    heaters: bool = True
    pipes: bool = True


@dataclass(frozen=True)
class RenderSpec:
    canvas_px: tuple = (900, 680)
    margin_px: int = 50
    layers: LayerFlags = field(default_factory=LayerFlags)

    def __post_init__(self):
        w, h = self.canvas_px
        if w <= 0 or h <= 0 or self.margin_px < 0:
            raise ValueError("canvas dimensions must be positive")
        if w - 2 * self.margin_px <= 0 or h - 2 * self.margin_px <= 0:
            raise ValueError("margins leave no drawing area")


def _f(v: float) -> str:
    return f"{v:.2f}"


def render_svg(inst: OrchardInstance, plan: DesignPlan | None = None,
               spec: RenderSpec | None = None) -> str:
    """Render the orchard (and optionally a plan) to an SVG document string."""
    spec = spec or RenderSpec()
    cw, ch = spec.canvas_px
    m = spec.margin_px
    scale = min((cw - 2 * m) / inst.length_m, (ch - 2 * m) / inst.width_m)

    def tx(x: float) -> float:
        return m + x * scale

    def ty(y: float) -> float:
        return ch - m - y * scale   # y grows upward in orchard coordinates

    if plan is not None and len(plan.heaters):
        hx, hy = plan.heaters[:, 0], plan.heaters[:, 1]
        if (hx.min() < -1e-9 or hx.max() > inst.length_m + 1e-9
                or hy.min() < -1e-9 or hy.max() > inst.width_m + 1e-9):
            raise RenderError("plan has a heater outside the orchard rectangle")

    out = []
    out.append(
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{cw}" height="{ch}" viewBox="0 0 {cw} {ch}">'
    )
    out.append(f'<rect x="0" y="0" width="{cw}" height="{ch}" fill="white"/>')
    out.append(
        f'<rect class="orchard" x="{_f(tx(0))}" y="{_f(ty(inst.width_m))}" '
        f'width="{_f(inst.length_m * scale)}" height="{_f(inst.width_m * scale)}" '
        f'fill="#f7fbf2" stroke="#444444" stroke-width="1"/>'
    )

    layers = spec.layers
    if layers.trees:
        for x, y in inst.trees:
            out.append(
                f'<circle class="tree" cx="{_f(tx(x))}" cy="{_f(ty(y))}" '
                f'r="3.00" fill="#2e7d32" fill-opacity="0.55"/>'
            )
    if layers.candidate_sites:
        for x, y in inst.candidate_sites:
            out.append(
                f'<circle class="site" cx="{_f(tx(x))}" cy="{_f(ty(y))}" '
                f'r="1.40" fill="#9e9e9e"/>'
            )
    if layers.check_points:
        for x, y in inst.check_points:
            cxp, cyp = tx(x), ty(y)
            out.append(
                f'<path class="cp" d="M {_f(cxp - 2)} {_f(cyp - 2)} L {_f(cxp + 2)} {_f(cyp + 2)} '
                f'M {_f(cxp - 2)} {_f(cyp + 2)} L {_f(cxp + 2)} {_f(cyp - 2)}" '
                f'stroke="#1565c0" stroke-width="0.70" fill="none"/>'
            )
    if plan is not None and layers.pipes:
        for a, b in plan.pipe_edges:
            xa, ya = plan.heaters[a]
            xb, yb = plan.heaters[b]
            out.append(
                f'<line class="pipe" x1="{_f(tx(xa))}" y1="{_f(ty(ya))}" '
                f'x2="{_f(tx(xb))}" y2="{_f(ty(yb))}" '
                f'stroke="#b71c1c" stroke-width="2.00"/>'
            )
    if plan is not None and layers.heaters:
        for x, y in plan.heaters:
            out.append(
                f'<circle class="heater" cx="{_f(tx(x))}" cy="{_f(ty(y))}" '
                f'r="4.50" fill="#e65100" stroke="#3e2723" stroke-width="1"/>'
            )

    out.extend(_legend(spec, plan is not None))
    out.extend(_scale_bar(inst, spec, scale))
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _legend(spec: RenderSpec, with_plan: bool):
    entries = []
    layers = spec.layers
    if layers.trees:
        entries.append(('<circle cx="8" cy="5" r="3.00" fill="#2e7d32" fill-opacity="0.55"/>', "tree"))
    if layers.candidate_sites:
        entries.append(('<circle cx="8" cy="5" r="1.40" fill="#9e9e9e"/>', "candidate site"))
    if layers.check_points:
        entries.append(('<path d="M 6 3 L 10 7 M 6 7 L 10 3" stroke="#1565c0" stroke-width="0.70" fill="none"/>', "check point"))
    if with_plan and layers.heaters:
        entries.append(('<circle cx="8" cy="5" r="4.50" fill="#e65100" stroke="#3e2723" stroke-width="1"/>', "heater"))
    if with_plan and layers.pipes:
        entries.append(('<line x1="2" y1="5" x2="14" y2="5" stroke="#b71c1c" stroke-width="2.00"/>', "pipe"))

    out = []
    x0, y0 = 10, 8
    for idx, (glyph, label) in enumerate(entries):
        gy = y0 + idx * 14
        out.append(f'<g class="legend" transform="translate({x0},{gy})">{glyph}'
                   f'<text x="18" y="9" font-size="10" font-family="monospace" fill="#222222">{label}</text></g>')
    return out


def _scale_bar(inst: OrchardInstance, spec: RenderSpec, scale: float):
    # round the bar to a "nice" length close to a fifth of the orchard
    target = inst.length_m / 5
    mag = 10 ** math.floor(math.log10(target)) if target > 0 else 1
    nice = max(1, round(target / mag)) * mag
    px = nice * scale
    cw, ch = spec.canvas_px
    x0 = cw - spec.margin_px - px
    y0 = ch - spec.margin_px / 2
    return [
        f'<line class="scalebar" x1="{_f(x0)}" y1="{_f(y0)}" x2="{_f(x0 + px)}" y2="{_f(y0)}" '
        f'stroke="#222222" stroke-width="2.00"/>',
        f'<text class="scalebar-label" x="{_f(x0 + px / 2)}" y="{_f(y0 - 4)}" font-size="10" '
        f'font-family="monospace" text-anchor="middle" fill="#222222">{_f(nice)} m</text>',
    ]
