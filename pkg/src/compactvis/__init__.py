"""Compact glyph rendering and study tooling for dense time-series grids.

Four chart forms draw a full series into a tiny footprint: compact
boxplots, stacked-band strips, and two collapsed variants that fold
both axes onto one square (contoured and braided).  Around them sit a
seed-deterministic dataset generator, task metrics and scoring, exact
SVG/raster emission, and a study bundle builder with a CLI.
"""

from .analysis import (
    DtwResult,
    IntervalStats,
    TrialKey,
    TrialScore,
    dtw_cost,
    exceeds_threshold,
    global_max_time,
    quadrant_avg_slope,
    quadrant_homogeneity,
    score_trial,
    slope,
    summary_stats,
    within_range,
)
from .colormaps import BivariateColorMap, PaletteConfig, make_colormap, sequential_bands
from .datagen import (
    GenConfig,
    TaskDataset,
    correlate,
    derive_seed,
    export_dataset,
    generate_task_dataset,
    layout_grid,
    load_dataset,
    make_rng,
    random_walk_series,
)
from .errors import ConfigurationError, GenerationError, ShapeError, ValidationError
from .model import (
    GridLayout,
    QuadrantId,
    TimeDomain,
    TimeInterval,
    TimeSeries,
    ValueDomain,
    clock_label,
)
from .render import (
    GridRenderSpec,
    MarkerSpec,
    TechniqueConfig,
    emit_vector,
    rasterize,
    render_grid,
)
from .scene import Color, SceneGraph
from .techniques import (
    BandSliceConfig,
    band_decompose,
    build_bhg,
    build_cbp,
    build_chg,
    build_hg,
    collapsed_footprint,
    decode_chg,
)

__all__ = [
    "BandSliceConfig",
    "BivariateColorMap",
    "Color",
    "ConfigurationError",
    "DtwResult",
    "GenConfig",
    "GenerationError",
    "GridLayout",
    "GridRenderSpec",
    "IntervalStats",
    "MarkerSpec",
    "PaletteConfig",
    "QuadrantId",
    "SceneGraph",
    "ShapeError",
    "TaskDataset",
    "TechniqueConfig",
    "TimeDomain",
    "TimeInterval",
    "TimeSeries",
    "TrialKey",
    "TrialScore",
    "ValidationError",
    "ValueDomain",
    "band_decompose",
    "build_bhg",
    "build_cbp",
    "build_chg",
    "build_hg",
    "clock_label",
    "collapsed_footprint",
    "correlate",
    "decode_chg",
    "derive_seed",
    "dtw_cost",
    "emit_vector",
    "exceeds_threshold",
    "export_dataset",
    "generate_task_dataset",
    "global_max_time",
    "layout_grid",
    "load_dataset",
    "make_colormap",
    "make_rng",
    "random_walk_series",
    "quadrant_avg_slope",
    "quadrant_homogeneity",
    "rasterize",
    "render_grid",
    "score_trial",
    "sequential_bands",
    "slope",
    "summary_stats",
    "within_range",
]
