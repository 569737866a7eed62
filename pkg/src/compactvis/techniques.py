"""Scene construction for the four compact chart forms.

CBP: quartile bands plus a median line, one column per aggregation
interval.  HG: the series is cut into B horizontal bands whose residual
areas are stacked on one strip (higher bands in front), then compressed
horizontally.  CHG: additionally cuts time into S slices and collapses
them onto one footprint; occluded cells stay readable through contour
lines.  BHG: same collapse, but instead of contours the filled areas
are braided: split at every crossing and drawn so that the smaller
value lies in front at each point in time.

All builders return a SceneGraph whose canvas is the final on-screen
footprint of the glyph.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import analysis
from .colormaps import BivariateColorMap, make_colormap, sequential_bands
from .errors import ConfigurationError
from .model import TimeSeries, ValueDomain
from .scene import Color, FilledPolygon, Polyline, SceneGraph

FRONT_FIRST_SLICE = "FrontFirstSlice"
FRONT_LAST_SLICE = "FrontLastSlice"
ORDERINGS = (FRONT_FIRST_SLICE, FRONT_LAST_SLICE)

CBP_MINMAX_FILL = Color(0.86, 0.86, 0.86)
CBP_QUARTILE_FILL = Color(0.63, 0.63, 0.63)
CBP_MEDIAN_STROKE = Color(0.13, 0.13, 0.13)

_MERGE_TOL = 1e-9


@dataclass(frozen=True)
class BandSliceConfig:
    """Band/slice split shared by CHG and BHG.

    domain None means "use the series' own domain".  ordering picks
    which slice ends up in front when cells collapse onto each other,
    which emphasizes either early or late time ranges.
    """

    bands: int = 3
    slices: int = 3
    domain: ValueDomain | None = None
    ordering: str = FRONT_FIRST_SLICE

    def __post_init__(self):
        if self.bands < 1:
            raise ConfigurationError("bands must be >= 1")
        if self.slices < 1:
            raise ConfigurationError("slices must be >= 1")
        if self.ordering not in ORDERINGS:
            raise ConfigurationError(f"unknown ordering {self.ordering!r}")

    def front_rank(self, slice_idx: int) -> int:
        """0 = rearmost; S-1 = front slice."""
        if self.ordering == FRONT_FIRST_SLICE:
            return self.slices - 1 - slice_idx
        return slice_idx


@dataclass(frozen=True)
class BandResidual:
    """What band b contributes to each sample: clamp(v - band floor, 0, h)."""

    band: int
    residuals: np.ndarray
    height: float

    def __post_init__(self):
        arr = np.asarray(self.residuals, dtype=np.float64)
        arr.setflags(write=False)
        object.__setattr__(self, "residuals", arr)


def band_decompose(s: TimeSeries, bands: int, domain: ValueDomain | None = None) -> list[BandResidual]:
    """Split a series into B stacked residual series.

    Summing the residuals on top of domain.min reproduces the input
    exactly, which is what makes the stacked band forms lossless.
    """
    if bands < 1:
        raise ConfigurationError("bands must be >= 1")
    dom = domain or s.domain
    h = dom.span / bands
    out = []
    for b in range(bands):
        res = np.clip(s.values - (dom.min + b * h), 0.0, h)
        out.append(BandResidual(band=b, residuals=res, height=h))
    return out


def collapsed_footprint(line_width: int, line_height: int, bands: int, slices: int) -> tuple[int, int]:
    """Footprint of the collapsed forms: 1/S of the width, 1/B of the height."""
    return math.ceil(line_width / slices), math.ceil(line_height / bands)


def _value_y(values: np.ndarray, domain: ValueDomain, height_px: int) -> np.ndarray:
    return (1.0 - (values - domain.min) / domain.span) * height_px


def _residual_y(res: np.ndarray, h: float, height_px: int) -> np.ndarray:
    return (1.0 - res / h) * height_px


def build_cbp(s: TimeSeries, interval_len: int, width_px: int, height_px: int) -> SceneGraph:
    """Compact boxplot: min-max band behind, quartile band, median line on top.

    Columns sit at the midpoints of the aggregation intervals; values map
    linearly onto the full canvas height.
    """
    stats = analysis.summary_stats(s, interval_len)
    n = len(s)
    mids = []
    for i in range(len(stats)):
        start = i * interval_len
        end = min(start + interval_len, n) - 1
        mids.append((start + end) / 2.0)
    xs = np.array(mids) / (n - 1) * width_px

    def band(lo_attr, hi_attr, color, z, tag):
        top = [(float(x), float(y)) for x, y in zip(xs, _value_y(np.array([getattr(st, hi_attr) for st in stats]), s.domain, height_px))]
        bottom = [(float(x), float(y)) for x, y in zip(xs, _value_y(np.array([getattr(st, lo_attr) for st in stats]), s.domain, height_px))]
        return FilledPolygon(points=tuple(top + bottom[::-1]), color=color, z=z, tag=tag)

    med_y = _value_y(np.array([st.median for st in stats]), s.domain, height_px)
    median = Polyline(
        points=tuple((float(x), float(y)) for x, y in zip(xs, med_y)),
        color=CBP_MEDIAN_STROKE,
        z=2,
        tag="cbp/median",
    )
    prims = (
        band("min", "max", CBP_MINMAX_FILL, 0, "cbp/minmax"),
        band("q1", "q3", CBP_QUARTILE_FILL, 1, "cbp/q1q3"),
        median,
    )
    return SceneGraph(width_px=width_px, height_px=height_px, primitives=prims)


def build_hg(
    s: TimeSeries,
    bands: int,
    width_px: int,
    height_px: int,
    colors: tuple[Color, ...] | None = None,
    domain: ValueDomain | None = None,
) -> SceneGraph:
    """Stacked-band strip: every band's residual area drawn over the full
    width, higher bands in front; x is compressed from steps to width_px."""
    cols = colors or sequential_bands(bands)
    if len(cols) < bands:
        raise ConfigurationError(f"{bands} bands need {bands} colors, got {len(cols)}")
    residuals = band_decompose(s, bands, domain)
    n = len(s)
    xs = np.arange(n) / (n - 1) * width_px
    prims = []
    for br in residuals:
        ys = _residual_y(br.residuals, br.height, height_px)
        top = [(float(x), float(y)) for x, y in zip(xs, ys)]
        base = [(float(xs[-1]), float(height_px)), (float(xs[0]), float(height_px))]
        prims.append(
            FilledPolygon(
                points=tuple(top + base),
                color=cols[br.band],
                z=br.band,
                tag=f"hg/b{br.band}",
            )
        )
    return SceneGraph(width_px=width_px, height_px=height_px, primitives=tuple(prims))


# ---------------------------------------------------------------------------
# Collapsed forms


def _slice_bounds(n: int, slices: int) -> list[tuple[int, int]]:
    """Half-open sample ranges per slice; the last slice takes any remainder."""
    base = n // slices
    out = []
    for si in range(slices):
        start = si * base
        end = start + base if si < slices - 1 else n
        out.append((start, end))
    return out


def _slice_xs(m: int, width_px: int) -> np.ndarray:
    """Sample x positions of one slice stretched over the collapsed width."""
    if m == 1:
        return np.zeros(1)
    return np.arange(m) / (m - 1) * width_px


def _check_slice_cfg(n: int, cfg: BandSliceConfig):
    if cfg.slices > n:
        raise ConfigurationError(f"{cfg.slices} slices exceed {n} samples")


def build_chg(
    s: TimeSeries,
    cfg: BandSliceConfig,
    cmap: BivariateColorMap | None = None,
    width_px: int = 24,
    height_px: int = 24,
) -> SceneGraph:
    """Collapsed stacked bands with contour shine-through.

    All S slices of every band land on one footprint.  Fills are stacked
    so the front slice wins everywhere and, within a slice, higher bands
    win; every cell's upper outline is then re-drawn as a thin contour
    above all fills so occluded cells remain readable.
    """
    n = len(s)
    _check_slice_cfg(n, cfg)
    cmap = cmap or make_colormap("SeqQual", cfg.bands, cfg.slices)
    if cmap.bands != cfg.bands or cmap.slices != cfg.slices:
        raise ConfigurationError("colormap shape does not match band/slice config")
    residuals = band_decompose(s, cfg.bands, cfg.domain)
    prims = []
    contour_base = cfg.slices * cfg.bands
    for si, (start, end) in enumerate(_slice_bounds(n, cfg.slices)):
        xs = _slice_xs(end - start, width_px)
        rank = cfg.front_rank(si)
        for br in residuals:
            res = br.residuals[start:end]
            ys = _residual_y(res, br.height, height_px)
            top = tuple((float(x), float(y)) for x, y in zip(xs, ys))
            color = cmap.color(br.band, si)
            fill_z = rank * cfg.bands + br.band
            prims.append(
                FilledPolygon(
                    points=top + ((float(xs[-1]), float(height_px)), (float(xs[0]), float(height_px))),
                    color=color,
                    z=fill_z,
                    tag=f"chg/fill/b{br.band}/s{si}",
                )
            )
            prims.append(
                Polyline(
                    points=top,
                    color=color,
                    z=contour_base + fill_z,
                    tag=f"chg/contour/b{br.band}/s{si}",
                )
            )
    return SceneGraph(width_px=width_px, height_px=height_px, primitives=tuple(prims))


def decode_chg(scene: SceneGraph, cfg: BandSliceConfig, domain: ValueDomain) -> np.ndarray:
    """Recover the original sample values from a CHG scene's primitives.

    Reads each cell's contour polyline (the residual outline), inverts
    the y mapping, and sums residuals per slice sample.  Exactness of
    this round trip is what guarantees the collapsed form is lossless.
    """
    h = domain.span / cfg.bands
    contours: dict[tuple[int, int], Polyline] = {}
    for p in scene.primitives:
        if isinstance(p, Polyline) and p.tag.startswith("chg/contour/"):
            _, _, btag, stag = p.tag.split("/")
            contours[(int(btag[1:]), int(stag[1:]))] = p
    slices = sorted({key[1] for key in contours})
    pieces = []
    for si in slices:
        m = len(contours[(0, si)].points)
        total = np.full(m, domain.min)
        for b in range(cfg.bands):
            ys = np.array([pt[1] for pt in contours[(b, si)].points])
            total = total + (1.0 - ys / scene.height_px) * h
        pieces.append(total)
    return np.concatenate(pieces)


def _cell_curves(
    s: TimeSeries, cfg: BandSliceConfig, width_px: int, height_px: int
) -> tuple[np.ndarray, list[dict]]:
    """Shared x grid plus per-cell residual curves for the braided form.

    Returns (grid_x, cells) where each cell dict carries band, slice and
    its residuals evaluated on the shared grid (linear interpolation
    between its own sample points).
    """
    n = len(s)
    residuals = band_decompose(s, cfg.bands, cfg.domain)
    bounds = _slice_bounds(n, cfg.slices)
    grids = [_slice_xs(end - start, width_px) for start, end in bounds]
    grid_x = grids[0]
    for g in grids[1:]:
        if len(g) != len(grid_x) or not np.allclose(g, grid_x, atol=_MERGE_TOL):
            grid_x = np.unique(np.concatenate([grid_x, g]))
    cells = []
    for si, (start, end) in enumerate(bounds):
        for br in residuals:
            own = br.residuals[start:end]
            if len(grids[si]) == len(grid_x) and np.array_equal(grids[si], grid_x):
                on_grid = np.asarray(own, dtype=np.float64)
            else:
                on_grid = np.interp(grid_x, grids[si], own)
            cells.append(
                {"band": br.band, "slice": si, "res": on_grid, "height": br.height}
            )
    return grid_x, cells


def _crossing_positions(grid_x: np.ndarray, cells: list[dict]) -> np.ndarray:
    """x positions where any two cell curves cross between grid points."""
    found = []
    for i in range(len(cells)):
        for j in range(i + 1, len(cells)):
            d = cells[i]["res"] - cells[j]["res"]
            d0, d1 = d[:-1], d[1:]
            crossing = d0 * d1 < 0
            if crossing.any():
                x0 = grid_x[:-1][crossing]
                x1 = grid_x[1:][crossing]
                f = d0[crossing] / (d0[crossing] - d1[crossing])
                found.append(x0 + f * (x1 - x0))
    if not found:
        return np.empty(0)
    return np.concatenate(found)


def _merge_breakpoints(grid_x: np.ndarray, crossings: np.ndarray) -> np.ndarray:
    xs = np.sort(np.concatenate([grid_x, crossings]))
    keep = np.empty(len(xs), dtype=bool)
    keep[0] = True
    keep[1:] = np.diff(xs) > _MERGE_TOL
    return xs[keep]


def build_bhg(
    s: TimeSeries,
    cfg: BandSliceConfig,
    cmap: BivariateColorMap | None = None,
    width_px: int = 24,
    height_px: int = 24,
) -> SceneGraph:
    """Braided collapse: no contours; fills are split at every pairwise
    crossing and stacked per sub-interval with the larger residual behind,
    so the smallest value stays visible at every point in time.

    Sub-intervals run between consecutive breakpoints (sample positions
    plus crossing positions), where every cell is linear; z order within
    a sub-interval sorts by mean residual descending, ties by (band,
    slice) ascending.  Cells with no area on a sub-interval are skipped.
    """
    n = len(s)
    _check_slice_cfg(n, cfg)
    cmap = cmap or make_colormap("SeqQual", cfg.bands, cfg.slices)
    if cmap.bands != cfg.bands or cmap.slices != cfg.slices:
        raise ConfigurationError("colormap shape does not match band/slice config")
    grid_x, cells = _cell_curves(s, cfg, width_px, height_px)
    breakpoints = _merge_breakpoints(grid_x, _crossing_positions(grid_x, cells))
    h = cells[0]["height"]

    # residuals of every cell at every breakpoint: (n_cells, n_breakpoints)
    at_bp = np.stack([np.interp(breakpoints, grid_x, c["res"]) for c in cells])
    prims = []
    z = 0
    for k in range(len(breakpoints) - 1):
        x0, x1 = float(breakpoints[k]), float(breakpoints[k + 1])
        r0 = at_bp[:, k]
        r1 = at_bp[:, k + 1]
        means = (r0 + r1) / 2.0
        order = sorted(
            range(len(cells)),
            key=lambda ci: (-means[ci], cells[ci]["band"], cells[ci]["slice"]),
        )
        for ci in order:
            if r0[ci] <= _MERGE_TOL and r1[ci] <= _MERGE_TOL:
                continue
            y0 = (1.0 - r0[ci] / h) * height_px
            y1 = (1.0 - r1[ci] / h) * height_px
            prims.append(
                FilledPolygon(
                    points=(
                        (x0, float(y0)),
                        (x1, float(y1)),
                        (x1, float(height_px)),
                        (x0, float(height_px)),
                    ),
                    color=cmap.color(cells[ci]["band"], cells[ci]["slice"]),
                    z=z,
                    tag=f"bhg/seg/b{cells[ci]['band']}/s{cells[ci]['slice']}/i{k}",
                )
            )
            z += 1
    return SceneGraph(width_px=width_px, height_px=height_px, primitives=tuple(prims))
