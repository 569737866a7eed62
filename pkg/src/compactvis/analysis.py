"""Task metrics and answer-key computations.

Interval summary statistics, slope and extrema lookups, threshold and
range predicates, quadrant aggregates, dynamic-time-warping homogeneity,
and the per-task error scoring used on participant answers.  Everything
here is a pure function.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .errors import ValidationError
from .model import GridLayout, QuadrantId, TimeInterval, TimeSeries, quadrant_members

TASK_IDS = tuple(f"T{i:02d}" for i in range(1, 11))

ANSWER_TYPES = (
    "single_graph",
    "multi_graph",
    "value_input",
    "time_slider",
    "yes_no",
    "quadrant",
)


@dataclass(frozen=True)
class IntervalStats:
    """Order statistics of one aggregation interval."""

    min: float
    q1: float
    median: float
    q3: float
    max: float

    def __post_init__(self):
        if not (self.min <= self.q1 <= self.median <= self.q3 <= self.max):
            raise ValueError("interval stats must be ordered min<=q1<=median<=q3<=max")


@dataclass(frozen=True)
class DtwResult:
    """Accumulated cost of the optimal warping alignment."""

    cost: float


def summary_stats(s: TimeSeries, interval_len: int = 3) -> list[IntervalStats]:
    """Per-interval min/q1/median/q3/max over non-overlapping intervals.

    The series is partitioned into ceil(steps / interval_len) intervals;
    the last one may be shorter.  Quantiles use linear interpolation at
    position q*(n-1).
    """
    if interval_len <= 0:
        raise ValueError(f"interval_len must be >= 1, got {interval_len}")
    v = s.values
    out = []
    for start in range(0, len(v), interval_len):
        chunk = v[start : start + interval_len]
        q1, med, q3 = np.quantile(chunk, [0.25, 0.5, 0.75])
        out.append(
            IntervalStats(
                min=float(chunk.min()),
                q1=float(q1),
                median=float(med),
                q3=float(q3),
                max=float(chunk.max()),
            )
        )
    return out


def slope(s: TimeSeries) -> float:
    """Overall trend measure: last value minus first value."""
    return float(s.values[-1] - s.values[0])


def global_max_time(s: TimeSeries) -> int:
    """Step index of the maximum value; earliest index wins ties."""
    return int(np.argmax(s.values))


def exceeds_threshold(s: TimeSeries, iv: TimeInterval, thr: float) -> bool:
    """True iff the series rises strictly above thr inside the interval."""
    if iv.end_step >= len(s):
        raise ValueError(f"interval {iv} outside series of length {len(s)}")
    window = s.values[iv.start_step : iv.end_step + 1]
    return bool(window.max() > thr)


def within_range(s: TimeSeries, tol: float) -> bool:
    """True iff every value stays inside [first - tol, first + tol] (closed)."""
    if tol <= 0:
        raise ValueError("tolerance must be positive")
    first = s.values[0]
    return bool(np.all(s.values >= first - tol) and np.all(s.values <= first + tol))


def quadrant_avg_slope(grid: GridLayout, q: QuadrantId, iv: TimeInterval) -> float:
    """Mean rise over the interval across a quadrant's members."""
    members = quadrant_members(grid, q)
    diffs = [
        float(grid.cells[i].values[iv.end_step] - grid.cells[i].values[iv.start_step])
        for i in members
    ]
    return float(np.mean(diffs))


def _dtw_batch(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Optimal warping costs for a batch of sequence pairs.

    a: (P, n), b: (P, m).  Classic DP with moves {diag, right, down} and
    local cost |a_i - b_j|.  Each row update is the recurrence
    D[j] = c[j] + min(prev[j], prev[j-1], D[j-1]); the sequential D[j-1]
    dependency is resolved as a min-plus prefix scan over cumulative
    costs, so a row costs O(m) vectorized work.
    """
    n = a.shape[1]
    prev = np.cumsum(np.abs(a[:, 0:1] - b), axis=1)
    for i in range(1, n):
        c = np.abs(a[:, i : i + 1] - b)
        shifted = np.empty_like(prev)
        shifted[:, 0] = np.inf
        shifted[:, 1:] = prev[:, :-1]
        best_above = np.minimum(prev, shifted)
        csum = np.cumsum(c, axis=1)
        csum_excl = np.empty_like(csum)
        csum_excl[:, 0] = 0.0
        csum_excl[:, 1:] = csum[:, :-1]
        prev = csum + np.minimum.accumulate(best_above - csum_excl, axis=1)
    return prev[:, -1]


def dtw_cost(a: TimeSeries, b: TimeSeries) -> DtwResult:
    """Dynamic-time-warping cost between two series.

    Unconstrained alignment (no window, no slope limit); cost 0 iff the
    series are identical.  The pair is put into a canonical order before
    the scan, so the float result is bitwise symmetric in its arguments.
    """
    av = np.asarray(a.values, dtype=np.float64)
    bv = np.asarray(b.values, dtype=np.float64)
    if (len(bv), bv.tobytes()) < (len(av), av.tobytes()):
        av, bv = bv, av
    return DtwResult(cost=float(_dtw_batch(av[None, :], bv[None, :])[0]))


def quadrant_homogeneity(grid: GridLayout, q: QuadrantId) -> float:
    """Summed pairwise DTW cost over a quadrant's members (lower = more alike)."""
    members = quadrant_members(grid, q)
    series = [grid.cells[i].values for i in members]
    pairs_a = []
    pairs_b = []
    for i in range(len(series)):
        for j in range(i + 1, len(series)):
            pairs_a.append(series[i])
            pairs_b.append(series[j])
    costs = _dtw_batch(np.stack(pairs_a), np.stack(pairs_b))
    return float(costs.sum())


def quadrant_metric_table(grid: GridLayout, metric: str, iv: TimeInterval | None = None) -> list[float]:
    """Metric per quadrant in row-major quadrant order.

    metric "avg_slope" needs an interval; "homogeneity" does not.
    """
    per_side = grid.quadrants_per_side
    out = []
    for r in range(per_side):
        for c in range(per_side):
            q = QuadrantId(r, c)
            if metric == "avg_slope":
                if iv is None:
                    raise ValueError("avg_slope needs an interval")
                out.append(quadrant_avg_slope(grid, q, iv))
            elif metric == "homogeneity":
                out.append(quadrant_homogeneity(grid, q))
            else:
                raise ValueError(f"unknown quadrant metric {metric!r}")
    return out


# ---------------------------------------------------------------------------
# Trial scoring


@dataclass(frozen=True)
class TrialKey:
    """Everything the scorer needs about one trial: the correct answer plus
    the per-option metric values that difference-based errors compare.

    metrics holds, depending on the task: per-graph values at the marker
    (T01), per-graph slopes (T02/T03), per-quadrant average slopes (T08),
    or per-quadrant homogeneity costs (T10); unused otherwise.
    hours_per_step converts step distances into display hours for T06.
    """

    task_id: str
    answer_type: str
    key: Any
    metrics: tuple[float, ...] = ()
    hours_per_step: float = 24.0 / 71.0

    def __post_init__(self):
        if self.task_id not in TASK_IDS:
            raise ValidationError(f"unknown task id {self.task_id!r}")
        if self.answer_type not in ANSWER_TYPES:
            raise ValidationError(f"unknown answer type {self.answer_type!r}")


@dataclass(frozen=True)
class TrialScore:
    """Error measure for one answered trial."""

    error: float
    extra: dict = field(default_factory=dict)


def _require(condition: bool, message: str):
    if not condition:
        raise ValidationError(message)


def _index_answer(answer: Any, what: str) -> int:
    _require(isinstance(answer, dict) and "index" in answer, f"{what}: expected {{'index': int}}")
    idx = answer["index"]
    _require(isinstance(idx, int) and not isinstance(idx, bool), f"{what}: index must be an int")
    return idx


def _quadrant_index(answer: Any, per_side: int, what: str) -> int:
    _require(
        isinstance(answer, dict) and "row" in answer and "col" in answer,
        f"{what}: expected {{'row': int, 'col': int}}",
    )
    r, c = answer["row"], answer["col"]
    _require(isinstance(r, int) and isinstance(c, int), f"{what}: row/col must be ints")
    _require(0 <= r < per_side and 0 <= c < per_side, f"{what}: quadrant ({r},{c}) out of range")
    return r * per_side + c


def score_trial(trial, answer: Any) -> TrialScore:
    """Error of one submitted answer against the trial's key.

    trial may be a TrialKey or any object exposing one at .scoring.
    Difference tasks (T01/T02/T03/T08) score the gap between the metric
    of the correct option and the metric of the chosen one; T04/T09/T10
    are binary; T05 is an absolute value error; T06 an absolute time
    error in display hours; T07 accumulates misses plus false alarms.
    """
    key: TrialKey = getattr(trial, "scoring", trial)
    task = key.task_id

    if task in ("T01", "T02", "T03"):
        chosen = _index_answer(answer, task)
        _require(0 <= chosen < len(key.metrics), f"{task}: index {chosen} out of range")
        return TrialScore(error=abs(key.metrics[key.key] - key.metrics[chosen]))

    if task == "T04":
        chosen = _index_answer(answer, task)
        _require(chosen in (0, 1), "T04: index must be 0 or 1")
        return TrialScore(error=0.0 if chosen == key.key else 1.0)

    if task == "T05":
        _require(isinstance(answer, dict) and "value" in answer, "T05: expected {'value': number}")
        val = answer["value"]
        _require(isinstance(val, (int, float)) and not isinstance(val, bool), "T05: value must be numeric")
        _require(math.isfinite(float(val)), "T05: value must be finite")
        return TrialScore(error=abs(float(val) - float(key.key)))

    if task == "T06":
        _require(isinstance(answer, dict) and "step" in answer, "T06: expected {'step': int}")
        step = answer["step"]
        _require(isinstance(step, int) and not isinstance(step, bool), "T06: step must be an int")
        return TrialScore(error=abs(step - key.key) * key.hours_per_step)

    if task == "T07":
        _require(
            isinstance(answer, dict) and isinstance(answer.get("indices"), list),
            "T07: expected {'indices': [int, ...]}",
        )
        chosen_set = set(answer["indices"])
        _require(all(isinstance(i, int) for i in chosen_set), "T07: indices must be ints")
        key_set = set(key.key)
        misses = len(key_set - chosen_set)
        false_alarms = len(chosen_set - key_set)
        return TrialScore(error=float(misses + false_alarms))

    if task == "T08":
        per_side = int(round(math.sqrt(len(key.metrics))))
        chosen = _quadrant_index(answer, per_side, "T08")
        key_idx = key.key["row"] * per_side + key.key["col"]
        return TrialScore(error=abs(key.metrics[key_idx] - key.metrics[chosen]))

    if task == "T09":
        _require(isinstance(answer, dict) and "yes" in answer, "T09: expected {'yes': bool}")
        _require(isinstance(answer["yes"], bool), "T09: yes must be a bool")
        return TrialScore(error=0.0 if answer["yes"] == key.key else 1.0)

    if task == "T10":
        per_side = int(round(math.sqrt(len(key.metrics))))
        chosen = _quadrant_index(answer, per_side, "T10")
        key_idx = key.key["row"] * per_side + key.key["col"]
        # binary error; the homogeneity-cost gap is recorded alongside
        return TrialScore(
            error=0.0 if chosen == key_idx else 1.0,
            extra={"cost_delta": abs(key.metrics[key_idx] - key.metrics[chosen])},
        )

    raise ValidationError(f"unknown task id {task!r}")
