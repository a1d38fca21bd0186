"""Barycentric lattices over the constrained simplex and SVG contour plots.

Points (x1, x2, x3) project onto the plane as (x2 + x3/2, sqrt(3)/2 * x3),
which sends the three pure blends to an equilateral triangle of unit side.
Surfaces are drawn as filled bands by coloring the lattice micro-triangles
with their band's color; a dashed inner triangle marks the proportion floor.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, replace

import numpy as np

from .fileio import atomic_write_bytes, atomic_write_text
from .mixmodel import MixtureModelFit, predict

SQRT3_2 = math.sqrt(3.0) / 2.0

# dark-blue-to-yellow ramp, interpolated per band
_RAMP = (
    (0.267, 0.005, 0.329),
    (0.254, 0.265, 0.530),
    (0.164, 0.471, 0.558),
    (0.134, 0.658, 0.517),
    (0.477, 0.821, 0.318),
    (0.993, 0.906, 0.144),
)


class ContourError(ValueError):
    pass


def barycentric_to_xy(points):
    """Project simplex points to plot coordinates."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    x = points[:, 1] + 0.5 * points[:, 2]
    y = SQRT3_2 * points[:, 2]
    return np.column_stack([x, y])


def simplex_lattice(q, m, min_prop=0.0):
    """All m-part compositions of q scaled by 1/q with every part >= min_prop."""
    if q < 2:
        raise ContourError(f"lattice resolution q={q} must be >= 2")
    if not 0.0 <= min_prop < 1.0 / m:
        raise ContourError(f"min_prop={min_prop} must lie in [0, 1/m)")
    floor_count = int(math.ceil(min_prop * q - 1e-9))
    points = []

    def _fill(prefix, remaining, parts_left):
        if parts_left == 1:
            if remaining >= floor_count:
                points.append(prefix + [remaining])
            return
        for value in range(floor_count, remaining - floor_count * (parts_left - 1) + 1):
            _fill(prefix + [value], remaining - value, parts_left - 1)

    _fill([], q, m)
    return np.array(points, dtype=float) / q


def ternary_grid(q, min_prop=0.0):
    """Three-part lattice points (a/q, b/q, c/q) with each coordinate >= min_prop."""
    return simplex_lattice(q, 3, min_prop)


@dataclass
class TernaryGrid:
    q: int
    min_prop: float
    points: np.ndarray
    values: np.ndarray | None = None
    covariates: tuple = ()
    response: str = ""
    scenario: str = ""

    @classmethod
    def build(cls, q, min_prop=0.0):
        return cls(q=q, min_prop=min_prop, points=ternary_grid(q, min_prop))


def grid_predict(fit: MixtureModelFit, grid: TernaryGrid, z) -> TernaryGrid:
    """Evaluate the fitted surface at every grid point for covariate levels z."""
    z = tuple(float(v) for v in z)
    values = np.array([predict(fit, point, z) for point in grid.points])
    return replace(grid, values=values, covariates=z)


def grid_to_csv(grid: TernaryGrid) -> str:
    if grid.values is None:
        raise ContourError("grid has no values; predict before exporting")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    m = grid.points.shape[1]
    writer.writerow([f"x{j}" for j in range(1, m + 1)] + ["value"])
    for point, value in zip(grid.points, grid.values):
        writer.writerow([f"{v:.6f}" for v in point] + [f"{value:.10g}"])
    return buf.getvalue()


def write_grid_csv(grid: TernaryGrid, path):
    atomic_write_text(path, grid_to_csv(grid))


def _ramp_color(t):
    t = min(max(float(t), 0.0), 1.0)
    pos = t * (len(_RAMP) - 1)
    low = int(math.floor(pos))
    high = min(low + 1, len(_RAMP) - 1)
    frac = pos - low
    rgb = [(1 - frac) * _RAMP[low][c] + frac * _RAMP[high][c] for c in range(3)]
    return "#{:02x}{:02x}{:02x}".format(*(int(round(255 * v)) for v in rgb))


def _band_index(value, vmin, vmax, levels):
    if vmax <= vmin:
        return 0
    idx = int((value - vmin) / (vmax - vmin) * levels)
    return min(max(idx, 0), levels - 1)


def _micro_triangles(grid: TernaryGrid):
    """Lattice cells whose three corners all satisfy the floor constraint."""
    q = grid.q
    index = {}
    for row, point in enumerate(grid.points):
        b = int(round(point[1] * q))
        c = int(round(point[2] * q))
        index[(b, c)] = row
    for (b, c), row in index.items():
        up = (index.get((b + 1, c)), index.get((b, c + 1)))
        if None not in up:
            yield (row, up[0], up[1])
        down = (index.get((b + 1, c)), index.get((b + 1, c + 1)), index.get((b, c + 1)))
        if None not in down:
            yield down


def render_ternary(grid: TernaryGrid, levels=10) -> bytes:
    """Self-contained SVG: banded surface, outer simplex, dashed floor
    triangle, vertex labels and a value legend. Deterministic bytes."""
    if grid.values is None or len(grid.values) == 0:
        raise ContourError("cannot render an empty grid")
    if levels < 1:
        raise ContourError("levels must be >= 1")
    side = 400.0
    margin_left, margin_top = 60.0, 56.0
    legend_width = 150.0
    height = margin_top + side * SQRT3_2 + 60.0
    width = margin_left + side + legend_width + 40.0

    def to_px(xy):
        return (margin_left + xy[0] * side,
                margin_top + side * SQRT3_2 - xy[1] * side)

    vmin = float(np.min(grid.values))
    vmax = float(np.max(grid.values))
    constant = vmax <= vmin
    n_bands = 1 if constant else levels
    pixels = [to_px(xy) for xy in barycentric_to_xy(grid.points)]

    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0f}" '
        f'height="{height:.0f}" viewBox="0 0 {width:.0f} {height:.0f}">',
        f'<rect width="{width:.0f}" height="{height:.0f}" fill="white"/>',
    ]
    title = f"{grid.response} ({grid.scenario}), z={grid.covariates}".strip()
    parts.append(f'<text x="{margin_left:.1f}" y="24" font-family="sans-serif" '
                 f'font-size="15">{_escape(title)}</text>')

    for tri in _micro_triangles(grid):
        value = float(np.mean([grid.values[i] for i in tri]))
        color = _ramp_color(0.5 if constant
                            else (_band_index(value, vmin, vmax, levels) + 0.5) / levels)
        pts = " ".join(f"{pixels[i][0]:.2f},{pixels[i][1]:.2f}" for i in tri)
        parts.append(f'<polygon points="{pts}" fill="{color}" stroke="{color}" '
                     'stroke-width="0.6"/>')

    corners = [to_px(xy) for xy in barycentric_to_xy(np.eye(3))]
    outline = " ".join(f"{x:.2f},{y:.2f}" for x, y in corners)
    parts.append(f'<polygon points="{outline}" fill="none" stroke="black" '
                 'stroke-width="1.2"/>')

    if grid.min_prop > 0:
        eps = grid.min_prop
        floor_corners = [
            (1 - 2 * eps, eps, eps), (eps, 1 - 2 * eps, eps), (eps, eps, 1 - 2 * eps)]
        dashed = " ".join(f"{x:.2f},{y:.2f}"
                          for x, y in (to_px(xy) for xy in barycentric_to_xy(floor_corners)))
        parts.append(f'<polygon points="{dashed}" fill="none" stroke="black" '
                     'stroke-width="0.9" stroke-dasharray="6,4"/>')

    label_pos = [
        (corners[0][0] - 10, corners[0][1] + 18, "x1"),
        (corners[1][0] - 6, corners[1][1] + 18, "x2"),
        (corners[2][0] - 8, corners[2][1] - 8, "x3"),
    ]
    for x, y, text in label_pos:
        parts.append(f'<text x="{x:.1f}" y="{y:.1f}" font-family="sans-serif" '
                     f'font-size="14">{text}</text>')

    legend_x = margin_left + side + 30.0
    swatch = min(24.0, (side * SQRT3_2) / n_bands)
    legend_top = margin_top
    for band in range(n_bands):
        color = _ramp_color(0.5 if constant else (band + 0.5) / levels)
        y = legend_top + (n_bands - 1 - band) * swatch
        parts.append(f'<rect x="{legend_x:.1f}" y="{y:.1f}" width="18" '
                     f'height="{swatch:.1f}" fill="{color}" stroke="black" '
                     'stroke-width="0.4"/>')
        if constant:
            label = f"{vmin:.4g}"
        else:
            lo = vmin + band * (vmax - vmin) / levels
            hi = vmin + (band + 1) * (vmax - vmin) / levels
            label = f"{lo:.4g} to {hi:.4g}"
        parts.append(f'<text x="{legend_x + 24:.1f}" y="{y + swatch / 2 + 4:.1f}" '
                     f'font-family="sans-serif" font-size="11">{label}</text>')

    parts.append("</svg>")
    return ("\n".join(parts) + "\n").encode("utf-8")


def _escape(text):
    return (str(text).replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;"))


def contour_filename(response, scenario, z):
    z_tag = "".join(f"{float(v):g}" for v in z)
    return f"contour_{response}_{scenario}_z{z_tag}.svg"


def write_ternary_svg(grid: TernaryGrid, path, levels=10):
    atomic_write_bytes(path, render_ternary(grid, levels=levels))
