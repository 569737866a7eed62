"""Bivariate colormaps for band x slice cells.

The vertical axis (bands) is always a lightness ramp, light at band 0
and strictly darker toward the top band, so stacking order stays
readable.  The horizontal axis (slices) varies by family: qualitative
hues, a sequential chroma ramp, or diverging hue pairs.
"""

from __future__ import annotations

import colorsys
from dataclasses import dataclass

from .errors import ConfigurationError
from .scene import Color

FAMILIES = ("SeqSeq", "SeqQual", "SeqDiv", "DivDiv")

DEFAULT_FAMILY = "SeqQual"


@dataclass(frozen=True)
class PaletteConfig:
    """Hue material the families are built from.

    qualitative_hues feed SeqQual columns (violet, green, red families
    by default); sequential_hue plus the saturation range feed SeqSeq;
    the diverging pair feeds SeqDiv/DivDiv columns.  Hues are fractions
    of the color wheel; lightness_range runs light to dark down the
    bands.
    """

    qualitative_hues: tuple[float, ...] = (0.75, 0.33, 0.0)
    qualitative_saturation: float = 0.55
    sequential_hue: float = 0.58
    sequential_saturation: tuple[float, float] = (0.18, 0.75)
    diverging_hues: tuple[float, float] = (0.62, 0.03)
    lightness_range: tuple[float, float] = (0.78, 0.34)

    def __post_init__(self):
        lo, hi = self.lightness_range
        if not 0.0 < hi < lo < 1.0:
            raise ConfigurationError("lightness_range must run light to dark inside (0, 1)")


@dataclass(frozen=True)
class BivariateColorMap:
    """B x S cell colors; colors[b][s] paints band b of slice s."""

    family: str
    colors: tuple[tuple[Color, ...], ...]

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigurationError(f"unknown colormap family {self.family!r}")
        flat = [c for row in self.colors for c in row]
        keys = {(round(c.r, 9), round(c.g, 9), round(c.b, 9)) for c in flat}
        if len(keys) != len(flat):
            raise ConfigurationError("colormap cells must be pairwise distinct")
        for s in range(self.slices):
            lightness = [_lightness(self.colors[b][s]) for b in range(self.bands)]
            if any(l1 - l0 >= -1e-9 for l0, l1 in zip(lightness, lightness[1:])):
                raise ConfigurationError(
                    f"lightness must strictly decrease down column {s}: {lightness}"
                )

    @property
    def bands(self) -> int:
        return len(self.colors)

    @property
    def slices(self) -> int:
        return len(self.colors[0])

    def color(self, band: int, slice_idx: int) -> Color:
        return self.colors[band][slice_idx]

    def slice_color(self, slice_idx: int) -> Color:
        """Strongest color of a slice column; used for slice-hued markers."""
        return self.colors[-1][slice_idx]


def _lightness(c: Color) -> float:
    return colorsys.rgb_to_hls(c.r, c.g, c.b)[1]


def _hls(h: float, l: float, s: float) -> Color:
    r, g, b = colorsys.hls_to_rgb(h % 1.0, l, s)
    return Color(r, g, b)


def _band_lightness(b: int, bands: int, cfg: PaletteConfig) -> float:
    light, dark = cfg.lightness_range
    if bands == 1:
        return (light + dark) / 2.0
    return light + (dark - light) * b / (bands - 1)


def _diverging_column(s: int, slices: int, cfg: PaletteConfig) -> tuple[float, float]:
    """(hue, saturation) for column s under a diverging horizontal axis."""
    center = (slices - 1) / 2.0
    t = 0.0 if center == 0 else (s - center) / center
    hue = cfg.diverging_hues[0] if t < 0 else cfg.diverging_hues[1]
    return hue, 0.08 + 0.67 * abs(t)


def make_colormap(
    family: str,
    bands: int,
    slices: int,
    palette: PaletteConfig | None = None,
) -> BivariateColorMap:
    """Build a B x S map of one of the four families.

    SeqQual (the default elsewhere) assigns one qualitative hue per
    slice column; SeqSeq ramps saturation of a single hue across
    columns; SeqDiv/DivDiv use the diverging hue pair, DivDiv also
    diverging saturation down the bands.
    """
    if family not in FAMILIES:
        raise ConfigurationError(f"unknown colormap family {family!r}")
    if bands < 1 or slices < 1:
        raise ConfigurationError("bands and slices must be >= 1")
    cfg = palette or PaletteConfig()
    if family == "SeqQual" and slices > len(cfg.qualitative_hues):
        raise ConfigurationError(
            f"palette supplies {len(cfg.qualitative_hues)} hues but {slices} slices requested"
        )

    rows = []
    for b in range(bands):
        lightness = _band_lightness(b, bands, cfg)
        row = []
        for s in range(slices):
            if family == "SeqQual":
                hue, sat = cfg.qualitative_hues[s], cfg.qualitative_saturation
            elif family == "SeqSeq":
                lo, hi = cfg.sequential_saturation
                frac = 0.5 if slices == 1 else s / (slices - 1)
                hue, sat = cfg.sequential_hue, lo + (hi - lo) * frac
            else:
                hue, sat = _diverging_column(s, slices, cfg)
                if family == "DivDiv":
                    center = (bands - 1) / 2.0
                    m = 1.0 if center == 0 else abs(b - center) / center
                    sat *= 0.35 + 0.65 * m
            row.append(_hls(hue, lightness, sat))
        rows.append(tuple(row))
    return BivariateColorMap(family=family, colors=tuple(rows))


def sequential_bands(bands: int, palette: PaletteConfig | None = None) -> tuple[Color, ...]:
    """Single-hue ramp for stacked band fills (light behind, dark in front)."""
    cmap = make_colormap("SeqSeq", bands, 1, palette)
    return tuple(cmap.colors[b][0] for b in range(bands))
