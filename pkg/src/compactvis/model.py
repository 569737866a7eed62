"""Core domain types: value/time domains, series, grids, and quadrants.

All types are immutable after construction and safe to share across
threads.  Values are stored as double-precision floats; time series are
fixed-length samples over a closed value domain with a clock-style time
axis (24 display hours by default).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, ShapeError


@dataclass(frozen=True)
class ValueDomain:
    """Closed value range shared by every series of a dataset."""

    min: float = 0.0
    max: float = 100.0

    def __post_init__(self):
        if not self.min < self.max:
            raise ValueError(f"domain min must be < max, got [{self.min}, {self.max}]")

    @property
    def span(self) -> float:
        return self.max - self.min


@dataclass(frozen=True)
class TimeDomain:
    """Sampling structure of a series: step count plus display span in hours.

    Step index i maps linearly onto the clock so that the first sample
    reads 0:00 and the last reads the full span (24:00 by default).
    """

    steps: int = 72
    hours_span: float = 24.0

    def __post_init__(self):
        if self.steps < 2:
            raise ValueError(f"need at least 2 steps, got {self.steps}")
        if self.hours_span <= 0:
            raise ValueError("hours_span must be positive")

    def hours_at(self, step: int) -> float:
        """Clock position of a sample, in hours."""
        if not 0 <= step < self.steps:
            raise ValueError(f"step {step} out of range [0, {self.steps})")
        return self.hours_span * step / (self.steps - 1)


@dataclass(frozen=True)
class TimeSeries:
    """Fixed-length sequence of values inside a ValueDomain."""

    values: np.ndarray
    domain: ValueDomain = field(default_factory=ValueDomain)

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=np.float64).copy()
        if arr.ndim != 1 or arr.size < 2:
            raise ShapeError(f"values must be 1-d with >= 2 samples, got shape {arr.shape}")
        if arr.min() < self.domain.min or arr.max() > self.domain.max:
            raise ValueError(
                f"values [{arr.min()}, {arr.max()}] exceed domain "
                f"[{self.domain.min}, {self.domain.max}]"
            )
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    def __len__(self) -> int:
        return int(self.values.size)


@dataclass(frozen=True)
class TimeInterval:
    """Inclusive range of step indices."""

    start_step: int
    end_step: int

    def __post_init__(self):
        if not 0 <= self.start_step < self.end_step:
            raise ValueError(f"need 0 <= start < end, got [{self.start_step}, {self.end_step}]")

    def length(self) -> int:
        return self.end_step - self.start_step + 1


@dataclass(frozen=True)
class QuadrantId:
    """Position of a quadrant, in quadrant units (not cell units)."""

    row: int
    col: int

    def __post_init__(self):
        if self.row < 0 or self.col < 0:
            raise ValueError("quadrant row/col must be >= 0")


@dataclass(frozen=True)
class GridLayout:
    """Rectangular grid of time series, row-major.

    Square in the study proper (sides 3, 5, 9), but the comparison tasks
    use a 1x2 arrangement, so rows and cols are tracked separately.
    Quadrants (quadrant_side) are only defined on square grids.
    """

    rows: int
    cols: int
    cells: tuple[TimeSeries, ...]
    quadrant_side: int | None = None

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValueError("grid must have at least one row and column")
        cells = tuple(self.cells)
        if len(cells) != self.rows * self.cols:
            raise ShapeError(
                f"expected {self.rows * self.cols} cells for {self.rows}x{self.cols}, "
                f"got {len(cells)}"
            )
        if self.quadrant_side is not None:
            if self.rows != self.cols:
                raise ConfigurationError("quadrants require a square grid")
            if self.quadrant_side < 1 or self.rows % self.quadrant_side != 0:
                raise ConfigurationError(
                    f"quadrant_side {self.quadrant_side} must divide side {self.rows}"
                )
        object.__setattr__(self, "cells", cells)

    @classmethod
    def square(cls, side: int, cells, quadrant_side: int | None = None) -> "GridLayout":
        return cls(rows=side, cols=side, cells=tuple(cells), quadrant_side=quadrant_side)

    @property
    def side(self) -> int:
        if self.rows != self.cols:
            raise ShapeError(f"grid is {self.rows}x{self.cols}, not square")
        return self.rows

    @property
    def quadrants_per_side(self) -> int:
        if self.quadrant_side is None:
            raise ConfigurationError("grid has no quadrant structure")
        return self.side // self.quadrant_side

    def cell(self, row: int, col: int) -> TimeSeries:
        if not (0 <= row < self.rows and 0 <= col < self.cols):
            raise ValueError(f"cell ({row}, {col}) outside {self.rows}x{self.cols} grid")
        return self.cells[row * self.cols + col]


def clock_label(step: int, td: TimeDomain) -> str:
    """Format a sample's clock position as "H:MM", minutes rounded."""
    total_minutes = round(td.hours_at(step) * 60.0)
    return f"{total_minutes // 60}:{total_minutes % 60:02d}"


def quadrant_members(grid: GridLayout, q: QuadrantId) -> list[int]:
    """Row-major cell indices belonging to one quadrant.

    Quadrants partition the grid: every cell index appears in exactly one
    quadrant.
    """
    qs = grid.quadrant_side
    if qs is None:
        raise ConfigurationError("grid has no quadrant_side configured")
    per_side = grid.side // qs
    if not (0 <= q.row < per_side and 0 <= q.col < per_side):
        raise ValueError(f"quadrant {q} outside {per_side}x{per_side} arrangement")
    base_row = q.row * qs
    base_col = q.col * qs
    return [
        (base_row + r) * grid.cols + (base_col + c)
        for r in range(qs)
        for c in range(qs)
    ]


def all_quadrants(grid: GridLayout) -> list[QuadrantId]:
    """Quadrant ids in row-major order."""
    per_side = grid.quadrants_per_side
    return [QuadrantId(r, c) for r in range(per_side) for c in range(per_side)]
