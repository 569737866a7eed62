"""Rendering: deterministic SVG emission, a built-in rasterizer, and
grid/stimulus composition.

The rasterizer is a plain painter's-algorithm scanline filler with
pixel-center sampling and a top-left ownership rule, no anti-aliasing,
so golden rasters are bit-exact.  emit_vector produces byte-stable SVG
(fixed attribute order, 3-decimal coordinates).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np
from PIL import Image, ImageDraw, ImageFont

from .colormaps import BivariateColorMap, PaletteConfig, make_colormap, sequential_bands
from .errors import ConfigurationError
from .model import GridLayout, TimeSeries
from .scene import (
    NEUTRAL_DARK,
    Color,
    FilledPolygon,
    Polyline,
    Rect,
    SceneGraph,
    Text,
    Triangle,
    translate,
    with_z,
)
from .techniques import (
    BandSliceConfig,
    FRONT_FIRST_SLICE,
    build_bhg,
    build_cbp,
    build_chg,
    build_hg,
)

TECHNIQUES = ("CBP", "HG", "CHG", "BHG")

MARKER_STRIP_PX = 5
LEGEND_PANEL_PX = 30

HIGHLIGHT_COLOR = Color(0.90, 0.35, 0.10)
RULE_COLOR = Color(0.35, 0.35, 0.35)


@dataclass(frozen=True)
class TechniqueConfig:
    """All technique knobs a stimulus needs, with study defaults."""

    bands: int = 3
    slices: int = 3
    interval_len: int = 3
    ordering: str = FRONT_FIRST_SLICE
    family: str = "SeqQual"
    palette: PaletteConfig | None = None

    def band_slice(self) -> BandSliceConfig:
        return BandSliceConfig(bands=self.bands, slices=self.slices, ordering=self.ordering)

    def colormap(self) -> BivariateColorMap:
        return make_colormap(self.family, self.bands, self.slices, self.palette)

    def to_dict(self) -> dict:
        return {
            "bands": self.bands,
            "slices": self.slices,
            "interval_len": self.interval_len,
            "ordering": self.ordering,
            "family": self.family,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TechniqueConfig":
        return cls(**d)


@dataclass(frozen=True)
class MarkerSpec:
    """Marker steps drawn beneath the graphs.

    One step marks every graph at the same time; one step per cell marks
    each graph individually.  slice_colored None resolves to "yes for
    the collapsed techniques".
    """

    steps: tuple[int, ...]
    slice_colored: bool | None = None


@dataclass(frozen=True)
class GridRenderSpec:
    """Layout and decoration of a composed grid stimulus."""

    cell_px: int = 24
    gap_px: int = 4
    marker: MarkerSpec | None = None
    highlight: int | None = None
    quadrant_rules: bool = False
    legend: bool = False

    def __post_init__(self):
        if self.cell_px < 8:
            raise ConfigurationError("cell_px must be >= 8")
        if self.gap_px < 0:
            raise ConfigurationError("gap_px must be >= 0")


def build_technique_scene(
    series: TimeSeries,
    technique: str,
    tech: TechniqueConfig,
    cell_px: int,
    cmap: BivariateColorMap | None = None,
) -> SceneGraph:
    """One glyph of one series at the given square footprint."""
    if technique == "CBP":
        return build_cbp(series, tech.interval_len, cell_px, cell_px)
    if technique == "HG":
        return build_hg(series, tech.bands, cell_px, cell_px, colors=sequential_bands(tech.bands, tech.palette))
    if technique == "CHG":
        return build_chg(series, tech.band_slice(), cmap or tech.colormap(), cell_px, cell_px)
    if technique == "BHG":
        return build_bhg(series, tech.band_slice(), cmap or tech.colormap(), cell_px, cell_px)
    raise ConfigurationError(f"unknown technique {technique!r}")


def marker_apex_x(step: int, steps: int, cell_px: int) -> int:
    """Marker x within a cell; round of the step's fraction of the axis."""
    return int(round(step / (steps - 1) * (cell_px - 1)))


def slice_of_step(step: int, steps: int, slices: int) -> int:
    base = steps // slices
    return min(step // base, slices - 1)


def grid_canvas_size(rows: int, cols: int, spec: GridRenderSpec) -> tuple[int, int]:
    """Exact canvas size of a composed grid."""
    strip = MARKER_STRIP_PX if spec.marker is not None else 0
    w = cols * spec.cell_px + (cols - 1) * spec.gap_px
    h = rows * (spec.cell_px + strip) + (rows - 1) * spec.gap_px
    if spec.legend:
        w += spec.gap_px + LEGEND_PANEL_PX
    return w, h


def render_grid(
    grid: GridLayout,
    technique: str,
    tech: TechniqueConfig,
    spec: GridRenderSpec,
) -> SceneGraph:
    """Compose per-series glyphs, markers, highlight frame, quadrant rules
    and legend into one stimulus scene."""
    if technique not in TECHNIQUES:
        raise ConfigurationError(f"unknown technique {technique!r}")
    rows, cols = grid.rows, grid.cols
    n = len(grid.cells[0])
    strip = MARKER_STRIP_PX if spec.marker is not None else 0
    cell, gap = spec.cell_px, spec.gap_px
    width, height = grid_canvas_size(rows, cols, spec)
    content_h = rows * (cell + strip) + (rows - 1) * gap

    cmap = tech.colormap() if technique in ("CHG", "BHG") else None

    if spec.marker is not None:
        msteps = spec.marker.steps
        if len(msteps) not in (1, len(grid.cells)):
            raise ConfigurationError(
                f"marker needs 1 or {len(grid.cells)} steps, got {len(msteps)}"
            )
        for st in msteps:
            if not 0 <= st < n:
                raise ValueError(f"marker step {st} outside [0, {n})")
    if spec.highlight is not None and not 0 <= spec.highlight < len(grid.cells):
        raise ValueError(f"highlight index {spec.highlight} out of range")

    prims = []
    z = 0

    def origin(idx: int) -> tuple[int, int]:
        r, c = divmod(idx, cols)
        return c * (cell + gap), r * (cell + strip + gap)

    for idx, series in enumerate(grid.cells):
        ox, oy = origin(idx)
        glyph = build_technique_scene(series, technique, tech, cell, cmap)
        for p in glyph.primitives:
            prims.append(with_z(translate(p, ox, oy), z))
            z += 1

    z = 10_000
    if spec.quadrant_rules:
        if grid.quadrant_side is None:
            raise ConfigurationError("quadrant_rules requested but grid has no quadrants")
        q = grid.quadrant_side
        for k in range(1, cols // q):
            x = k * q * (cell + gap) - gap / 2.0
            prims.append(Rect(x - 0.5, 0.0, 1.0, float(content_h), RULE_COLOR, z, tag="rule/v"))
            z += 1
        for k in range(1, rows // q):
            y = k * q * (cell + strip + gap) - gap / 2.0
            prims.append(Rect(0.0, y - 0.5, float(cols * cell + (cols - 1) * gap), 1.0, RULE_COLOR, z, tag="rule/h"))
            z += 1

    if spec.highlight is not None:
        ox, oy = origin(spec.highlight)
        prims.append(
            Rect(ox + 0.5, oy + 0.5, cell - 1.0, cell - 1.0, HIGHLIGHT_COLOR, z, filled=False, tag="highlight")
        )
        z += 1

    if spec.marker is not None:
        slice_colored = spec.marker.slice_colored
        if slice_colored is None:
            slice_colored = technique in ("CHG", "BHG")
        for idx in range(len(grid.cells)):
            step = msteps[0] if len(msteps) == 1 else msteps[idx]
            ox, oy = origin(idx)
            ax = ox + marker_apex_x(step, n, cell)
            if slice_colored:
                color = (cmap or tech.colormap()).slice_color(slice_of_step(step, n, tech.slices))
            else:
                color = NEUTRAL_DARK
            top = oy + cell + 0.5
            base = oy + cell + MARKER_STRIP_PX - 0.5
            left = max(float(ox), ax - 2.5)
            right = min(float(ox + cell), ax + 2.5)
            prims.append(
                Triangle(
                    points=((float(ax), top), (right, base), (left, base)),
                    color=color,
                    z=z,
                    tag=f"marker/{idx}",
                )
            )
            z += 1

    if spec.legend:
        if cmap is None:
            swatches = [[c] for c in sequential_bands(tech.bands, tech.palette)]
        else:
            swatches = [list(row) for row in cmap.colors]
        b_count, s_count = len(swatches), len(swatches[0])
        sw = max(
            2,
            min(
                (LEGEND_PANEL_PX - (s_count - 1)) // s_count,
                (LEGEND_PANEL_PX - (b_count - 1)) // b_count,
            ),
        )
        if b_count * (sw + 1) - 1 > content_h:
            raise ConfigurationError(
                f"legend of {b_count} band rows does not fit a {content_h}px canvas"
            )
        lx = cols * cell + (cols - 1) * gap + gap
        for b in range(b_count):
            for sl in range(s_count):
                # band 0 sits at the bottom of the legend, like in the glyphs
                ry = (b_count - 1 - b) * (sw + 1)
                prims.append(
                    Rect(
                        float(lx + sl * (sw + 1)),
                        float(ry),
                        float(sw),
                        float(sw),
                        swatches[b][sl],
                        z,
                        tag=f"legend/b{b}/s{sl}",
                    )
                )
                z += 1

    return SceneGraph(width_px=width, height_px=height, primitives=tuple(prims))


# ---------------------------------------------------------------------------
# Vector emission


def _fmt(v: float) -> str:
    s = f"{v:.3f}".rstrip("0").rstrip(".")
    return "0" if s == "-0" else s


def _points_attr(points) -> str:
    return " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in points)


def _class_attr(tag: str) -> str:
    return f' class="{escape(tag)}"' if tag else ""


def emit_vector(scene: SceneGraph) -> str:
    """Byte-stable SVG text for a scene, one element per primitive."""
    w, h = scene.width_px, scene.height_px
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" '
        f'viewBox="0 0 {w} {h}" shape-rendering="crispEdges">',
        f'<rect width="{w}" height="{h}" fill="{scene.background.hex}"/>',
    ]
    for p in scene.primitives:
        if isinstance(p, (FilledPolygon, Triangle)):
            out.append(
                f'<polygon{_class_attr(p.tag)} points="{_points_attr(p.points)}" fill="{p.color.hex}"/>'
            )
        elif isinstance(p, Polyline):
            out.append(
                f'<polyline{_class_attr(p.tag)} points="{_points_attr(p.points)}" '
                f'fill="none" stroke="{p.color.hex}" stroke-width="{_fmt(p.width)}"/>'
            )
        elif isinstance(p, Rect):
            geo = (
                f'x="{_fmt(p.x)}" y="{_fmt(p.y)}" '
                f'width="{_fmt(p.width)}" height="{_fmt(p.height)}"'
            )
            if p.filled:
                out.append(f'<rect{_class_attr(p.tag)} {geo} fill="{p.color.hex}"/>')
            else:
                out.append(
                    f'<rect{_class_attr(p.tag)} {geo} fill="none" '
                    f'stroke="{p.color.hex}" stroke-width="1"/>'
                )
        elif isinstance(p, Text):
            out.append(
                f'<text{_class_attr(p.tag)} x="{_fmt(p.x)}" y="{_fmt(p.y)}" '
                f'fill="{p.color.hex}" font-size="{_fmt(p.size_px)}" '
                f'text-anchor="{p.anchor}" font-family="sans-serif">{escape(p.content)}</text>'
            )
        else:
            raise TypeError(f"unknown primitive {type(p).__name__}")
    out.append("</svg>")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# Rasterization


def _poly_spans(points: np.ndarray, height: int, width: int):
    """Scanline spans of a polygon under pixel-center even-odd sampling.

    Yields (row_lo, row_hi, mask) where mask is (rows, width) boolean.
    Edges are treated half-open in y, so a pixel center exactly on a
    horizontal boundary belongs to the polygon below it (top rule), and
    span ends exclude the right boundary (left rule).
    """
    ys = points[:, 1]
    row_lo = max(0, int(math.ceil(ys.min() - 0.5)))
    row_hi = min(height, int(math.ceil(ys.max() - 0.5)))
    if row_hi <= row_lo:
        return None
    yc = np.arange(row_lo, row_hi) + 0.5
    p0 = points
    p1 = np.roll(points, -1, axis=0)
    y0 = p0[:, 1][:, None]
    y1 = p1[:, 1][:, None]
    x0 = p0[:, 0][:, None]
    x1 = p1[:, 0][:, None]
    ycr = yc[None, :]
    crosses = ((y0 <= ycr) & (ycr < y1)) | ((y1 <= ycr) & (ycr < y0))
    with np.errstate(divide="ignore", invalid="ignore"):
        xi = x0 + (ycr - y0) / (y1 - y0) * (x1 - x0)
    xi = np.where(crosses, xi, np.inf)
    xi.sort(axis=0)
    nrows = len(yc)
    if xi.shape[0] % 2:
        xi = np.vstack([xi, np.full((1, nrows), np.inf)])
    a = xi[0::2, :]
    b = xi[1::2, :]
    valid = np.isfinite(a) & np.isfinite(b)
    cs = np.ceil(np.where(valid, a, 0.0) - 0.5).astype(np.int64).clip(0, width)
    ce = np.ceil(np.where(valid, b, 0.0) - 0.5).astype(np.int64).clip(0, width)
    valid &= ce > cs
    if not valid.any():
        return None
    diff = np.zeros((nrows, width + 1), dtype=np.int32)
    pair_rows = np.broadcast_to(np.arange(nrows)[None, :], a.shape)
    np.add.at(diff, (pair_rows[valid], cs[valid]), 1)
    np.add.at(diff, (pair_rows[valid], ce[valid]), -1)
    mask = np.cumsum(diff[:, :-1], axis=1) > 0
    return row_lo, row_hi, mask


def _rect_cells(x: float, y: float, w: float, h: float, height: int, width: int):
    r0 = max(0, int(math.ceil(y - 0.5)))
    r1 = min(height, int(math.ceil(y + h - 0.5)))
    c0 = max(0, int(math.ceil(x - 0.5)))
    c1 = min(width, int(math.ceil(x + w - 0.5)))
    if r1 <= r0 or c1 <= c0:
        return None
    return r0, r1, c0, c1


def _stroke_pixels(points: np.ndarray, height: int, width: int, scale: int):
    """Pixel coordinates of a 1-unit polyline, sampled at sub-pixel steps."""
    cols = []
    rows = []
    for (xa, ya), (xb, yb) in zip(points[:-1], points[1:]):
        steps = int(math.ceil(max(abs(xb - xa), abs(yb - ya)))) + 1
        t = np.linspace(0.0, 1.0, steps)
        cols.append(xa + (xb - xa) * t)
        rows.append(ya + (yb - ya) * t)
    if not cols:
        cols = [points[:, 0]]
        rows = [points[:, 1]]
    cx = np.concatenate(cols)
    cy = np.concatenate(rows)
    px = np.floor(cx).astype(np.int64)
    py = np.floor(cy).astype(np.int64)
    if scale > 1:
        off = np.arange(scale) - (scale - 1) // 2
        ox, oy = np.meshgrid(off, off)
        px = (px[:, None] + ox.ravel()[None, :]).ravel()
        py = (py[:, None] + oy.ravel()[None, :]).ravel()
    px = px.clip(0, width - 1)
    py = py.clip(0, height - 1)
    return py, px


def _scaled(points, scale: int) -> np.ndarray:
    return np.asarray(points, dtype=np.float64) * scale


def _draw_text(buf: np.ndarray, t: Text, scale: int):
    img = Image.fromarray(buf)
    draw = ImageDraw.Draw(img)
    font = ImageFont.load_default()
    anchor = {"start": "ls", "middle": "ms", "end": "rs"}[t.anchor]
    try:
        draw.text((t.x * scale, t.y * scale), t.content, fill=t.color.rgb8, font=font, anchor=anchor)
    except (ValueError, TypeError):
        draw.text((t.x * scale, t.y * scale - 10), t.content, fill=t.color.rgb8, font=font)
    buf[:] = np.asarray(img)


def rasterize(scene: SceneGraph, scale: int = 1) -> np.ndarray:
    """(H*scale, W*scale, 3) uint8 image of the scene, painter's order."""
    if scale < 1:
        raise ValueError("scale must be >= 1")
    height = scene.height_px * scale
    width = scene.width_px * scale
    buf = np.empty((height, width, 3), dtype=np.uint8)
    buf[:] = scene.background.rgb8
    for p in scene.primitives:
        rgb = p.color.rgb8
        if isinstance(p, (FilledPolygon, Triangle)):
            spans = _poly_spans(_scaled(p.points, scale), height, width)
            if spans:
                r0, r1, mask = spans
                buf[r0:r1][mask] = rgb
        elif isinstance(p, Rect):
            if p.filled:
                cells = _rect_cells(p.x * scale, p.y * scale, p.width * scale, p.height * scale, height, width)
                if cells:
                    r0, r1, c0, c1 = cells
                    buf[r0:r1, c0:c1] = rgb
            else:
                half = 0.5 * scale
                x, y = p.x * scale, p.y * scale
                w, h = p.width * scale, p.height * scale
                edges = (
                    (x - half, y - half, w + 2 * half, 2 * half),
                    (x - half, y + h - half, w + 2 * half, 2 * half),
                    (x - half, y - half, 2 * half, h + 2 * half),
                    (x + w - half, y - half, 2 * half, h + 2 * half),
                )
                for ex, ey, ew, eh in edges:
                    cells = _rect_cells(ex, ey, ew, eh, height, width)
                    if cells:
                        r0, r1, c0, c1 = cells
                        buf[r0:r1, c0:c1] = rgb
        elif isinstance(p, Polyline):
            py, px = _stroke_pixels(_scaled(p.points, scale), height, width, scale)
            buf[py, px] = rgb
        elif isinstance(p, Text):
            _draw_text(buf, p, scale)
        else:
            raise TypeError(f"unknown primitive {type(p).__name__}")
    return buf


def rasterize_index(scene: SceneGraph, scale: int = 1) -> np.ndarray:
    """Ownership buffer: each pixel holds the index (into scene.primitives)
    of the topmost area primitive covering it, -1 where none does.

    Only area primitives (filled polygons, triangles, filled rects) are
    drawn; strokes and text are ignored.  Used to test occlusion claims.
    """
    if scale < 1:
        raise ValueError("scale must be >= 1")
    height = scene.height_px * scale
    width = scene.width_px * scale
    buf = np.full((height, width), -1, dtype=np.int32)
    for i, p in enumerate(scene.primitives):
        if isinstance(p, (FilledPolygon, Triangle)):
            spans = _poly_spans(_scaled(p.points, scale), height, width)
            if spans:
                r0, r1, mask = spans
                view = buf[r0:r1]
                view[mask] = i
        elif isinstance(p, Rect) and p.filled:
            cells = _rect_cells(p.x * scale, p.y * scale, p.width * scale, p.height * scale, height, width)
            if cells:
                r0, r1, c0, c1 = cells
                buf[r0:r1, c0:c1] = i
    return buf


def save_svg(scene: SceneGraph, path: str | Path) -> Path:
    path = Path(path)
    path.write_text(emit_vector(scene))
    return path


def save_png(scene: SceneGraph, path: str | Path, scale: int = 1) -> Path:
    path = Path(path)
    Image.fromarray(rasterize(scene, scale)).save(path, format="PNG")
    return path
