"""Deterministic SVG scatter plots of 2-D inverse sets.

The feasible region is shaded cell by cell from the brute-force grid
oracle (adjacent feasible cells in a grid row are merged into one
rectangle), samples are drawn as circles coloured by acceptance step, and
a legend lists the bands.  Coordinates are printed with three decimals so
the file is a pure function of its inputs.
"""
from __future__ import annotations

from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from .errors import UnsupportedDimension
from .export import provenance_line, read_samples_csv
from .metrics import feasible_cells

CANVAS = 800
MARGIN = 70
PLOT = CANVAS - 2 * MARGIN

# A few stops of the viridis colour map, interpolated linearly.
_STOPS = np.array([
    [68, 1, 84],
    [59, 82, 139],
    [33, 145, 140],
    [94, 201, 98],
    [253, 231, 37],
], dtype=np.float64)


def step_color(t):
    """Hex colour for ``t`` in [0, 1]."""
    t = min(max(float(t), 0.0), 1.0) * (len(_STOPS) - 1)
    i = min(int(t), len(_STOPS) - 2)
    rgb = _STOPS[i] + (t - i) * (_STOPS[i + 1] - _STOPS[i])
    return "#" + "".join(f"{int(round(v)):02x}" for v in rgb)


def _f(v):
    return f"{v:.3f}"


def _data_bounds(P):
    if P.shape[0] == 0:
        return (-1.0, 1.0, -1.0, 1.0)
    lo, hi = P.min(axis=0), P.max(axis=0)
    pad = np.maximum(0.1 * (hi - lo), 1e-3)
    lo, hi = lo - pad, hi + pad
    return (float(lo[0]), float(hi[0]), float(lo[1]), float(hi[1]))


def render_svg(points, steps, bands, bounds, feasible_mask=None, title="",
               axis_labels=("c_0", "c_1"), config_sha256=None):
    """SVG text for 2-D ``points``; ``feasible_mask`` is indexed [x cell, y cell]."""
    P = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    steps = np.asarray(steps, dtype=int).reshape(-1)
    x0, x1, y0, y1 = (float(b) for b in bounds)

    def sx(x):
        return MARGIN + (x - x0) / (x1 - x0) * PLOT

    def sy(y):
        return MARGIN + (y1 - y) / (y1 - y0) * PLOT

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{CANVAS}" height="{CANVAS}" '
        f'viewBox="0 0 {CANVAS} {CANVAS}">',
        f"<!-- {escape(provenance_line(config_sha256)[2:])} -->",
        f'<rect class="background" x="0" y="0" width="{CANVAS}" height="{CANVAS}" fill="#ffffff"/>',
        '<g id="region">',
    ]
    if feasible_mask is not None:
        r = feasible_mask.shape[0]
        cw, ch = PLOT / r, PLOT / feasible_mask.shape[1]
        for j in range(feasible_mask.shape[1]):
            i = 0
            while i < r:
                if not feasible_mask[i, j]:
                    i += 1
                    continue
                start = i
                while i < r and feasible_mask[i, j]:
                    i += 1
                x = MARGIN + start * cw
                y = MARGIN + PLOT - (j + 1) * ch
                out.append(f'<rect class="feasible" x="{_f(x)}" y="{_f(y)}" '
                           f'width="{_f((i - start) * cw)}" height="{_f(ch)}" fill="#cfe3f3"/>')
    out.append("</g>")
    out.append(f'<rect class="frame" x="{MARGIN}" y="{MARGIN}" width="{PLOT}" height="{PLOT}" '
               'fill="none" stroke="#333333"/>')

    smax = int(steps.max()) if steps.size else 0
    out.append('<g id="samples">')
    for (px, py), s in zip(P, steps):
        if not (x0 <= px <= x1 and y0 <= py <= y1):
            continue
        t = s / smax if smax else 0.0
        out.append(f'<circle class="sample" cx="{_f(sx(px))}" cy="{_f(sy(py))}" r="3" '
                   f'fill="{step_color(t)}" data-step="{int(s)}"/>')
    out.append("</g>")

    out.append('<g id="axes" font-family="sans-serif" font-size="12" fill="#333333">')
    for v, anchor in ((x0, "start"), (x1, "end")):
        out.append(f'<text x="{_f(sx(v))}" y="{CANVAS - MARGIN + 18}" '
                   f'text-anchor="{anchor}">{_f(v)}</text>')
    for v, dy in ((y0, 0), (y1, 12)):
        out.append(f'<text x="{MARGIN - 6}" y="{_f(sy(v) + dy)}" text-anchor="end">{_f(v)}</text>')
    out.append(f'<text x="{CANVAS // 2}" y="{CANVAS - MARGIN + 36}" text-anchor="middle">'
               f"{escape(axis_labels[0])}</text>")
    out.append(f'<text x="{MARGIN - 40}" y="{CANVAS // 2}" text-anchor="middle" '
               f'transform="rotate(-90 {MARGIN - 40} {CANVAS // 2})">{escape(axis_labels[1])}</text>')
    out.append("</g>")

    out.append('<g id="legend" font-family="sans-serif" font-size="12" fill="#333333">')
    if title:
        out.append(f'<text class="title" x="{MARGIN}" y="24" font-size="15">{escape(title)}</text>')
    for k, band in enumerate(bands):
        out.append(f'<text class="band" x="{MARGIN}" y="{44 + 14 * k}">'
                   f"constraint {k + 1}: [{band.z1!r}, {band.z2!r}]</text>")
    bar_x = CANVAS - MARGIN - 200
    for i in range(20):
        out.append(f'<rect class="colorbar" x="{bar_x + 10 * i}" y="30" width="10" height="10" '
                   f'fill="{step_color(i / 19)}"/>')
    out.append(f'<text x="{bar_x}" y="54">step 0</text>')
    out.append(f'<text x="{bar_x + 200}" y="54" text-anchor="end">step {smax}</text>')
    out.append(f'<text x="{bar_x + 100}" y="24" text-anchor="middle">acceptance step</text>')
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_plot(samples_csv, config, out_path, problem=None):
    """Render the samples of a run against its problem's feasible region.

    With 2-D codes the region is shaded from the grid oracle over
    ``config.plot_bounds`` (or the data range).  Otherwise
    ``config.projection`` must name two encoding coordinates; the points
    are then drawn in encoding space without region shading.
    """
    codes, _, steps = read_samples_csv(samples_csv)
    problem = problem if problem is not None else config.build_problem()
    d = problem.code_dim
    if d == 2:
        P = codes.reshape(-1, 2)
        bounds = config.plot_bounds or _data_bounds(P)
        mask = feasible_cells(problem, config.plot_resolution, bounds)
        labels = ("code 0", "code 1")
    else:
        if config.projection is None:
            raise UnsupportedDimension(
                f"codes are {d}-D; set [plot] projection to two encoding coordinates")
        i, j = config.projection
        enc_dim = problem.E.output_dim
        if not (0 <= i < enc_dim and 0 <= j < enc_dim):
            raise UnsupportedDimension(f"projection {config.projection} outside {enc_dim}-D encoding")
        P = problem.encode(codes)[:, [i, j]] if codes.shape[0] else np.zeros((0, 2))
        bounds = config.plot_bounds or _data_bounds(P)
        mask = None
        labels = (f"encoding {i}", f"encoding {j}")
    svg = render_svg(P, steps, problem.bands, bounds, mask, title=config.name,
                     axis_labels=labels, config_sha256=config.sha256)
    Path(out_path).write_text(svg, encoding="utf-8")
    return Path(out_path)
