"""Seed-deterministic synthetic data generation.

Random-walk series with smoothing, neighbor correlation, Hilbert-curve
grid placement, and rejection sampling until task-specific constraints
hold.  All randomness flows through numpy's Philox counter-based
generator; sub-seeds are derived from a master seed by hashing labels
(SHA-256 over "master/label/label/..."), so any dataset reproduces
bit-exactly from (seed, labels) alone, on any platform.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import analysis
from .errors import GenerationError, ShapeError
from .model import GridLayout, TimeInterval, TimeSeries, ValueDomain

MAX_ATTEMPTS = 10_000


@dataclass(frozen=True)
class GenConfig:
    """Knobs of the generator.

    walk_step_sigma and smooth_window shape the random walk (engine
    defaults, chosen for 2-4 visible trends at 24 px); alpha_prev is the
    weight of the previous series when correlating neighbors.  The task
    fields (min_gap, t07_*, t09_tolerance) parameterize the dataset
    constraints and answer keys.
    """

    seed: int = 0
    length: int = 72
    walk_step_sigma: float = 4.0
    smooth_window: int = 5
    alpha_prev: float = 0.25
    domain: ValueDomain = field(default_factory=ValueDomain)
    min_gap: float = 1.0
    t07_threshold_low: int = 60
    t07_threshold_high: int = 80
    t09_tolerance: float = 15.0

    def __post_init__(self):
        if self.seed < 0 or self.seed >= 2**64:
            raise ValueError("seed must fit an unsigned 64-bit integer")
        if self.length < 2:
            raise ValueError("length must be >= 2")
        if self.walk_step_sigma <= 0:
            raise ValueError("walk_step_sigma must be > 0")
        if self.smooth_window < 1 or self.smooth_window % 2 == 0:
            raise ValueError("smooth_window must be odd and positive")
        if self.smooth_window >= self.length:
            raise ValueError("smooth_window must be smaller than length")
        if not 0.0 <= self.alpha_prev <= 1.0:
            raise ValueError("alpha_prev must lie in [0, 1]")

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "length": self.length,
            "walk_step_sigma": self.walk_step_sigma,
            "smooth_window": self.smooth_window,
            "alpha_prev": self.alpha_prev,
            "domain": {"min": self.domain.min, "max": self.domain.max},
            "min_gap": self.min_gap,
            "t07_threshold_low": self.t07_threshold_low,
            "t07_threshold_high": self.t07_threshold_high,
            "t09_tolerance": self.t09_tolerance,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GenConfig":
        d = dict(d)
        dom = d.pop("domain", None)
        cfg = cls(**d)
        if dom is not None:
            cfg = replace(cfg, domain=ValueDomain(dom["min"], dom["max"]))
        return cfg


def derive_seed(master_seed: int, *labels) -> int:
    """64-bit sub-seed from a master seed and a label path."""
    text = "/".join([str(master_seed), *map(str, labels)])
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def make_rng(seed: int) -> np.random.Generator:
    """Philox-backed generator; counter-based, platform-stable."""
    return np.random.Generator(np.random.Philox(seed))


def _fold_into(values: np.ndarray, domain: ValueDomain) -> np.ndarray:
    # reflecting both bounds == triangle-wave folding of the free walk
    span2 = 2.0 * domain.span
    y = np.mod(values - domain.min, span2)
    y = np.where(y > domain.span, span2 - y, y)
    return domain.min + y

def _smooth(values: np.ndarray, window: int) -> np.ndarray:
    # centered moving average, window truncated at the series ends
    kernel = np.ones(window)
    sums = np.convolve(values, kernel, mode="same")
    counts = np.convolve(np.ones_like(values), kernel, mode="same")
    return sums / counts


def random_walk_series(cfg: GenConfig, rng: np.random.Generator) -> TimeSeries:
    """One smoothed, domain-bounded random walk.

    Start value uniform in the domain; steps are Normal(0, sigma) with
    reflection at the bounds; a truncated centered moving average of
    width smooth_window is applied afterwards.
    """
    start = rng.uniform(cfg.domain.min, cfg.domain.max)
    increments = rng.normal(0.0, cfg.walk_step_sigma, size=cfg.length - 1)
    raw = np.empty(cfg.length)
    raw[0] = start
    raw[1:] = start + np.cumsum(increments)
    bounded = _fold_into(raw, cfg.domain)
    return TimeSeries(values=_smooth(bounded, cfg.smooth_window), domain=cfg.domain)


def correlate(prev: TimeSeries, fresh: TimeSeries, alpha: float) -> TimeSeries:
    """Pointwise weighted sum: alpha * prev + (1 - alpha) * fresh."""
    if len(prev) != len(fresh):
        raise ShapeError(f"length mismatch: {len(prev)} vs {len(fresh)}")
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    return TimeSeries(values=alpha * prev.values + (1.0 - alpha) * fresh.values, domain=prev.domain)


@dataclass(frozen=True)
class HilbertIndex:
    """Distance along a 2^order x 2^order Hilbert curve."""

    d: int
    order: int

    def __post_init__(self):
        if self.order < 1:
            raise ValueError("order must be >= 1")
        if not 0 <= self.d < 4**self.order:
            raise ValueError(f"d={self.d} outside curve of order {self.order}")


def hilbert_d2xy(idx: HilbertIndex) -> tuple[int, int]:
    """(row, col) of a curve position; consecutive d are 4-neighbors.

    Bit-interleaved iterative construction; the variant is pinned by a
    golden test (order 1 visits (0,0),(1,0),(1,1),(0,1)).
    """
    n = 1 << idx.order
    x = y = 0
    t = idx.d
    s = 1
    while s < n:
        rx = 1 & (t // 2)
        ry = 1 & (t ^ rx)
        if ry == 0:
            if rx == 1:
                x, y = s - 1 - x, s - 1 - y
            x, y = y, x
        x += s * rx
        y += s * ry
        t //= 4
        s *= 2
    return y, x


def hilbert_positions(rows: int, cols: int) -> list[tuple[int, int]]:
    """Grid positions in Hilbert-curve order, skipping cells outside
    rows x cols of the smallest covering power-of-two curve."""
    side = max(rows, cols)
    order = max(1, math.ceil(math.log2(side)))
    n = 1 << order
    kept = []
    for d in range(n * n):
        r, c = hilbert_d2xy(HilbertIndex(d, order))
        if r < rows and c < cols:
            kept.append((r, c))
    return kept


def layout_grid(
    rows: int,
    cols: int,
    cfg: GenConfig,
    rng: np.random.Generator,
    quadrant_side: int | None = None,
) -> GridLayout:
    """Generate rows*cols series and place them along the Hilbert curve.

    Series are generated sequentially; each one is a weighted sum of its
    predecessor (weight cfg.alpha_prev) and a fresh walk, so curve-adjacent
    cells are spatially correlated.  The first series is uncorrelated.
    """
    positions = hilbert_positions(rows, cols)
    cells: list[TimeSeries | None] = [None] * (rows * cols)
    prev: TimeSeries | None = None
    for r, c in positions:
        fresh = random_walk_series(cfg, rng)
        series = fresh if prev is None else correlate(prev, fresh, cfg.alpha_prev)
        cells[r * cols + c] = series
        prev = series
    return GridLayout(rows=rows, cols=cols, cells=tuple(cells), quadrant_side=quadrant_side)


# ---------------------------------------------------------------------------
# Task datasets

TASK_SHAPES: dict[str, tuple[int, int, int | None]] = {
    "T01": (3, 3, None),
    "T02": (3, 3, None),
    "T03": (3, 3, None),
    "T04": (1, 2, None),
    "T05": (1, 2, None),
    "T06": (3, 3, None),
    "T07": (5, 5, None),
    "T08": (9, 9, 3),
    "T09": (5, 5, None),
    "T10": (9, 9, 3),
}

TASK_ANSWER_TYPES: dict[str, str] = {
    "T01": "single_graph",
    "T02": "single_graph",
    "T03": "single_graph",
    "T04": "single_graph",
    "T05": "value_input",
    "T06": "time_slider",
    "T07": "multi_graph",
    "T08": "quadrant",
    "T09": "yes_no",
    "T10": "quadrant",
}

T08_VARIANTS = ("full", "slice", "arbitrary")


@dataclass(frozen=True)
class TaskDataset:
    """One constraint-satisfying grid plus the drawn task parameters."""

    task_id: str
    grid: GridLayout
    params: dict
    answer_type: str
    key: object
    metrics: tuple[float, ...]
    attempts: int


def _unique_max_gap(values: list[float], gap: float) -> int | None:
    """Index of the maximum if it clears the runner-up by gap, else None."""
    order = np.argsort(values)
    best, second = order[-1], order[-2]
    if values[best] - values[second] >= gap:
        return int(best)
    return None


def _draw_t08_interval(variant: str, n: int, slices: int, rng: np.random.Generator) -> TimeInterval:
    base = n // slices
    if variant == "full":
        return TimeInterval(0, n - 1)
    if variant == "slice":
        s = int(rng.integers(0, slices))
        start = base * s
        end = start + base - 1 if s < slices - 1 else n - 1
        return TimeInterval(start, end)
    if variant == "arbitrary":
        starts = [x for x in range(1, n - base) if x % base != 0]
        start = starts[int(rng.integers(0, len(starts)))]
        return TimeInterval(start, start + base - 1)
    raise ValueError(f"unknown T08 variant {variant!r}")


def generate_task_dataset(
    task_id: str,
    cfg: GenConfig,
    rng: np.random.Generator,
    variant: str | None = None,
) -> TaskDataset:
    """Rejection-sample grids until the task's constraints hold.

    Each attempt regenerates the whole grid (keeping the correlation
    structure intact) and redraws the task parameters.  variant selects
    the T08 interval type ("full", "slice", "arbitrary"); when omitted it
    is drawn at random.  Raises GenerationError after 10,000 attempts.
    """
    if task_id not in TASK_SHAPES:
        raise ValueError(f"unknown task id {task_id!r}")
    rows, cols, qside = TASK_SHAPES[task_id]
    answer_type = TASK_ANSWER_TYPES[task_id]
    n = cfg.length
    predicate = _PREDICATE_NAMES[task_id]

    for attempt in range(1, MAX_ATTEMPTS + 1):
        grid = layout_grid(rows, cols, cfg, rng, quadrant_side=qside)
        result = _try_accept(task_id, grid, cfg, rng, variant, n)
        if result is not None:
            params, key, metrics = result
            return TaskDataset(
                task_id=task_id,
                grid=grid,
                params=params,
                answer_type=answer_type,
                key=key,
                metrics=metrics,
                attempts=attempt,
            )
    raise GenerationError(
        f"{task_id}: no dataset satisfied '{predicate}' within {MAX_ATTEMPTS} attempts"
    )


_PREDICATE_NAMES = {
    "T01": "unique maximum at marker",
    "T02": "at least one increasing slope",
    "T03": "at least one decreasing slope",
    "T04": "unique higher value at markers",
    "T05": "unique higher value at markers",
    "T06": "unique global maximum in highlighted series",
    "T07": "qualifying count in [5, 10]",
    "T08": "unique best quadrant slope",
    "T09": "always accepted",
    "T10": "unique most homogeneous quadrant",
}


def _try_accept(task_id, grid, cfg, rng, variant, n):
    """One acceptance check; returns (params, key, metrics) or None."""
    if task_id == "T01":
        marker = int(rng.integers(0, n))
        vals = [float(c.values[marker]) for c in grid.cells]
        best = _unique_max_gap(vals, cfg.min_gap)
        if best is None:
            return None
        return {"marker_step": marker}, best, tuple(vals)

    if task_id in ("T02", "T03"):
        slopes = [analysis.slope(c) for c in grid.cells]
        if task_id == "T02":
            if max(slopes) <= 0:
                return None
            return {}, int(np.argmax(slopes)), tuple(slopes)
        if min(slopes) >= 0:
            return None
        return {}, int(np.argmin(slopes)), tuple(slopes)

    if task_id in ("T04", "T05"):
        steps = rng.choice(n, size=2, replace=False)
        m0, m1 = int(steps[0]), int(steps[1])
        v0 = float(grid.cells[0].values[m0])
        v1 = float(grid.cells[1].values[m1])
        if abs(v0 - v1) < cfg.min_gap:
            return None
        params = {"marker_steps": [m0, m1]}
        if task_id == "T04":
            return params, (0 if v0 > v1 else 1), (v0, v1)
        return params, abs(v0 - v1), (v0, v1)

    if task_id == "T06":
        highlight = int(rng.integers(0, len(grid.cells)))
        series = grid.cells[highlight]
        maxima = np.flatnonzero(series.values == series.values.max())
        if len(maxima) != 1:
            return None
        return {"highlight": highlight}, int(maxima[0]), ()

    if task_id == "T07":
        thr = int(rng.integers(cfg.t07_threshold_low, cfg.t07_threshold_high + 1))
        win = n // 3
        start = int(rng.integers(0, n - win + 1))
        iv = TimeInterval(start, start + win - 1)
        qualifying = [
            i for i, c in enumerate(grid.cells) if analysis.exceeds_threshold(c, iv, thr)
        ]
        if not 5 <= len(qualifying) <= 10:
            return None
        params = {"threshold": thr, "interval": [iv.start_step, iv.end_step]}
        return params, qualifying, ()

    if task_id == "T08":
        chosen_variant = variant or T08_VARIANTS[int(rng.integers(0, 3))]
        iv = _draw_t08_interval(chosen_variant, n, 3, rng)
        table = analysis.quadrant_metric_table(grid, "avg_slope", iv)
        best = _unique_max_gap(table, cfg.min_gap)
        if best is None:
            return None
        per_side = grid.quadrants_per_side
        params = {"interval": [iv.start_step, iv.end_step], "variant": chosen_variant}
        return params, {"row": best // per_side, "col": best % per_side}, tuple(table)

    if task_id == "T09":
        highlight = int(rng.integers(0, len(grid.cells)))
        key = analysis.within_range(grid.cells[highlight], cfg.t09_tolerance)
        params = {"highlight": highlight, "tolerance": cfg.t09_tolerance}
        return params, bool(key), ()

    if task_id == "T10":
        table = analysis.quadrant_metric_table(grid, "homogeneity")
        order = np.argsort(table)
        if table[order[0]] == table[order[1]]:
            return None
        best = int(order[0])
        per_side = grid.quadrants_per_side
        return {}, {"row": best // per_side, "col": best % per_side}, tuple(table)

    raise ValueError(f"unknown task id {task_id!r}")


# ---------------------------------------------------------------------------
# Dataset files

def export_dataset(grid: GridLayout, base_path: str | Path, meta: dict | None = None) -> tuple[Path, Path]:
    """Write a grid as CSV (one row per series, full-precision floats)
    plus a sidecar JSON manifest with shape and provenance."""
    base = Path(base_path)
    csv_path = base.with_suffix(".csv")
    meta_path = base.with_suffix(".meta.json")
    lines = [",".join(repr(float(v)) for v in cell.values) for cell in grid.cells]
    csv_path.write_text("\n".join(lines) + "\n")
    sidecar = {
        "schema": 1,
        "rows": grid.rows,
        "cols": grid.cols,
        "quadrant_side": grid.quadrant_side,
        "domain": {"min": grid.cells[0].domain.min, "max": grid.cells[0].domain.max},
    }
    if meta:
        sidecar.update(meta)
    meta_path.write_text(json.dumps(sidecar, indent=2) + "\n")
    return csv_path, meta_path


def load_dataset(base_path: str | Path) -> tuple[GridLayout, dict]:
    """Read back a dataset written by export_dataset."""
    base = Path(base_path)
    meta = json.loads(base.with_suffix(".meta.json").read_text())
    domain = ValueDomain(meta["domain"]["min"], meta["domain"]["max"])
    cells = []
    for line in base.with_suffix(".csv").read_text().strip().splitlines():
        values = np.array([float(tok) for tok in line.split(",")])
        cells.append(TimeSeries(values=values, domain=domain))
    grid = GridLayout(
        rows=meta["rows"],
        cols=meta["cols"],
        cells=tuple(cells),
        quadrant_side=meta.get("quadrant_side"),
    )
    return grid, meta
