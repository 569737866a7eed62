"""Study bundle building and result-log scoring.

A bundle is a static directory: participant-visible manifest.json,
stimuli/ (vector images, raster optional), datasets/ (the underlying
series), and keys.json holding answer keys and scoring metrics.  The
manifest never references the keys file, so a study runner serving the
manifest cannot leak correct answers.

Per participant there are 78 scored conditions: 8 tasks x 4 techniques
x 2 repetitions, plus 3 repetitions of the quadrant-slope task per
technique, plus 2 repetitions of the slice-ordering task which runs
under CHG only.  Technique order rotates over participants through a
balanced 4x4 Latin square; task order is fixed.
"""

from __future__ import annotations

import csv
import io
import json
import statistics
from dataclasses import dataclass, field
from pathlib import Path

from . import analysis, datagen, render
from .datagen import GenConfig, derive_seed, make_rng
from .errors import ValidationError
from .model import GridLayout
from .render import GridRenderSpec, MarkerSpec, TechniqueConfig

SCHEMA_VERSION = 1
CANDIDATES = 3

TECHNIQUES = ("CBP", "HG", "CHG", "BHG")

# balanced Latin square (each technique once per position, carryover balanced)
WILLIAMS_ROWS = (
    (0, 1, 3, 2),
    (1, 2, 0, 3),
    (2, 3, 1, 0),
    (3, 0, 2, 1),
)

T08_VARIANT_BY_REP = ("full", "slice", "arbitrary")

TASK_PROMPTS = {
    "T01": "Which graph has the highest value at the marked point in time?",
    "T02": "Which graph shows the strongest increase over the whole time span?",
    "T03": "Which graph shows the strongest decrease over the whole time span?",
    "T04": "Which of the two graphs has the higher value at its marked point in time?",
    "T05": "Estimate the difference between the values at the two marked points in time.",
    "T06": "At what time does the highlighted graph reach its global maximum?",
    "T07": "Select every graph that rises above {threshold} inside the given time interval.",
    "T08": "Which quadrant has the highest increase on average over the given time interval?",
    "T09": "Does the highlighted graph stay within the given range around its first value?",
    "T10": "Which quadrant contains the most homogeneous graphs?",
}

EXPLANATIONS = {
    "CBP": (
        "Each column summarizes a short time interval: the light band spans the "
        "minimum to maximum, the darker band the lower to upper quartile, and the "
        "dark line tracks the median."
    ),
    "HG": (
        "The value range is cut into three stacked bands drawn on top of each "
        "other; darker shades mean higher bands, so dark peaks mark high values."
    ),
    "CHG": (
        "Time is additionally cut into three slices that share one small square. "
        "Each slice keeps its own hue, lighter for lower bands. Covered cells stay "
        "readable as thin contour lines; the marker hue names the slice it falls in."
    ),
    "BHG": (
        "Like the collapsed form, but overlapping areas are interwoven: wherever "
        "one cell is lowest it is drawn in front, so every value stays visible "
        "without contour lines."
    ),
}


def tasks_for(technique: str) -> list[str]:
    """Fixed task order; the slice-ordering task runs only under CHG."""
    return [t for t in analysis.TASK_IDS if t != "T03" or technique == "CHG"]


def reps_for(task_id: str) -> int:
    return 3 if task_id == "T08" else 2


def technique_order(participant: int) -> list[str]:
    row = WILLIAMS_ROWS[participant % len(WILLIAMS_ROWS)]
    return [TECHNIQUES[i] for i in row]


def condition_slots(technique: str) -> list[tuple[str, int]]:
    return [(task, rep) for task in tasks_for(technique) for rep in range(reps_for(task))]


@dataclass(frozen=True)
class TrialSpec:
    """One scored trial of one participant."""

    trial_id: str
    participant: int
    task_id: str
    technique: str
    repetition: int
    dataset_id: str
    drawn_index: int
    candidates: tuple[str, ...]
    stimulus: str
    params: dict
    answer_type: str
    scoring: analysis.TrialKey

    def manifest_entry(self, grid_shape: tuple[int, int], quadrant_side: int | None) -> dict:
        return {
            "trial_id": self.trial_id,
            "task_id": self.task_id,
            "technique": self.technique,
            "repetition": self.repetition,
            "dataset": self.dataset_id,
            "stimulus": self.stimulus,
            "params": self.params,
            "answer_type": self.answer_type,
            "grid": list(grid_shape),
            "quadrant_side": quadrant_side,
        }


@dataclass
class StudyBundle:
    """In-memory view of a built or loaded bundle."""

    root: Path
    manifest: dict
    keys: dict

    def trials_of(self, participant: int) -> list[dict]:
        return self.manifest["trials"][str(participant)]

    def key_of(self, trial_id: str) -> analysis.TrialKey:
        e = self.keys["trials"].get(trial_id)
        if e is None:
            raise ValidationError(f"unknown trial id {trial_id!r}")
        return analysis.TrialKey(
            task_id=e["task_id"],
            answer_type=e["answer_type"],
            key=e["key"],
            metrics=tuple(e["metrics"]),
            hours_per_step=e["hours_per_step"],
        )


def _decoration(task_id: str, technique: str, ds: datagen.TaskDataset, cell_px: int, gap_px: int) -> GridRenderSpec:
    marker = None
    highlight = None
    rules = False
    if task_id == "T01":
        marker = MarkerSpec(steps=(ds.params["marker_step"],))
    elif task_id in ("T04", "T05"):
        marker = MarkerSpec(steps=tuple(ds.params["marker_steps"]))
    elif task_id in ("T06", "T09"):
        highlight = ds.params["highlight"]
    elif task_id in ("T08", "T10"):
        rules = True
    return GridRenderSpec(
        cell_px=cell_px,
        gap_px=gap_px,
        marker=marker,
        highlight=highlight,
        quadrant_rules=rules,
        legend=technique in ("CHG", "BHG"),
    )


def _dataset_key(ds: datagen.TaskDataset, n: int) -> analysis.TrialKey:
    return analysis.TrialKey(
        task_id=ds.task_id,
        answer_type=ds.answer_type,
        key=ds.key,
        metrics=ds.metrics,
        hours_per_step=24.0 / (n - 1),
    )


def _json_dump(obj, path: Path):
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def build_bundle(
    out_dir: str | Path,
    seed: int = 0,
    participants: int = 4,
    gen_cfg: GenConfig | None = None,
    tech_cfg: TechniqueConfig | None = None,
    cell_px: int = 24,
    gap_px: int = 4,
    png: bool = False,
) -> StudyBundle:
    """Generate datasets, render stimuli and write the bundle directory.

    Every repetition gets 3 candidate datasets; which one a participant
    actually sees is drawn per participant and repetition, and recorded.
    The whole bundle is a pure function of (seed, config), so rebuilding
    with the same inputs is byte-identical.
    """
    gen_cfg = gen_cfg or GenConfig(seed=seed)
    tech_cfg = tech_cfg or TechniqueConfig()
    root = Path(out_dir)
    (root / "stimuli").mkdir(parents=True, exist_ok=True)
    (root / "datasets").mkdir(parents=True, exist_ok=True)

    # candidate datasets and their stimuli, shared by all participants
    conditions: dict[tuple[str, str, int], list[dict]] = {}
    for technique in TECHNIQUES:
        for task, rep in condition_slots(technique):
            cands = []
            for cand in range(CANDIDATES):
                sub = derive_seed(seed, "dataset", technique, task, rep, cand)
                ds = datagen.generate_task_dataset(
                    task,
                    gen_cfg,
                    make_rng(sub),
                    variant=T08_VARIANT_BY_REP[rep] if task == "T08" else None,
                )
                dataset_id = f"{technique}_{task}_r{rep}_d{cand}"
                datagen.export_dataset(
                    ds.grid,
                    root / "datasets" / dataset_id,
                    meta={"seed": sub, "task_id": task, "dataset_id": dataset_id},
                )
                spec = _decoration(task, technique, ds, cell_px, gap_px)
                scene = render.render_grid(ds.grid, technique, tech_cfg, spec)
                stim = f"stimuli/{task}_{rep}_{technique}_{cand}.svg"
                render.save_svg(scene, root / stim)
                if png:
                    render.save_png(scene, root / f"stimuli/{task}_{rep}_{technique}_{cand}.png")
                cands.append(
                    {
                        "dataset_id": dataset_id,
                        "stimulus": stim,
                        "ds": ds,
                        "grid_shape": (ds.grid.rows, ds.grid.cols),
                        "quadrant_side": ds.grid.quadrant_side,
                    }
                )
            conditions[(technique, task, rep)] = cands

    # training material: two practice rounds per technique, keys revealed
    training: dict[str, list[dict]] = {}
    for technique in TECHNIQUES:
        rounds = []
        for i, task in enumerate(("T01", "T02")):
            sub = derive_seed(seed, "training", technique, i)
            ds = datagen.generate_task_dataset(task, gen_cfg, make_rng(sub))
            spec = _decoration(task, technique, ds, cell_px, gap_px)
            scene = render.render_grid(ds.grid, technique, tech_cfg, spec)
            stim = f"stimuli/training_{technique}_{i}.svg"
            render.save_svg(scene, root / stim)
            rounds.append(
                {
                    "id": f"train_{technique}_{i}",
                    "task_id": task,
                    "stimulus": stim,
                    "params": ds.params,
                    "answer_type": ds.answer_type,
                    "key": ds.key,
                    "grid": [ds.grid.rows, ds.grid.cols],
                    "quadrant_side": ds.grid.quadrant_side,
                }
            )
        training[technique] = rounds

    # per-participant draws and trial sequences
    trials_by_participant: dict[str, list[dict]] = {}
    keys: dict[str, dict] = {}
    for p in range(participants):
        seq = []
        for technique in technique_order(p):
            for task, rep in condition_slots(technique):
                draw_rng = make_rng(derive_seed(seed, "draw", p, technique, task, rep))
                drawn = int(draw_rng.integers(0, CANDIDATES))
                cand = conditions[(technique, task, rep)][drawn]
                ds: datagen.TaskDataset = cand["ds"]
                trial_id = f"p{p:02d}_{technique}_{task}_r{rep}"
                spec = TrialSpec(
                    trial_id=trial_id,
                    participant=p,
                    task_id=task,
                    technique=technique,
                    repetition=rep,
                    dataset_id=cand["dataset_id"],
                    drawn_index=drawn,
                    candidates=tuple(
                        c["dataset_id"] for c in conditions[(technique, task, rep)]
                    ),
                    stimulus=cand["stimulus"],
                    params=ds.params,
                    answer_type=ds.answer_type,
                    scoring=_dataset_key(ds, gen_cfg.length),
                )
                seq.append(spec.manifest_entry(cand["grid_shape"], cand["quadrant_side"]))
                keys[trial_id] = {
                    "task_id": task,
                    "answer_type": ds.answer_type,
                    "key": ds.key,
                    "metrics": list(ds.metrics),
                    "hours_per_step": 24.0 / (gen_cfg.length - 1),
                    "drawn_index": drawn,
                    "candidates": list(spec.candidates),
                }
        trials_by_participant[str(p)] = seq

    manifest = {
        "schema": SCHEMA_VERSION,
        "seed": seed,
        "participants": participants,
        "techniques": list(TECHNIQUES),
        "config": {
            "gen": gen_cfg.to_dict(),
            "technique": tech_cfg.to_dict(),
            "render": {"cell_px": cell_px, "gap_px": gap_px},
        },
        "time": {"steps": gen_cfg.length, "hours_span": 24},
        "task_prompts": TASK_PROMPTS,
        "explanations": EXPLANATIONS,
        "technique_orders": {str(p): technique_order(p) for p in range(participants)},
        "training": training,
        "trials": trials_by_participant,
    }
    keys_doc = {"schema": SCHEMA_VERSION, "trials": keys}
    _json_dump(manifest, root / "manifest.json")
    _json_dump(keys_doc, root / "keys.json")
    return StudyBundle(root=root, manifest=manifest, keys=keys_doc)


def load_bundle(path: str | Path) -> StudyBundle:
    root = Path(path)
    manifest = json.loads((root / "manifest.json").read_text())
    keys = json.loads((root / "keys.json").read_text())
    for doc, name in ((manifest, "manifest"), (keys, "keys")):
        if doc.get("schema") != SCHEMA_VERSION:
            raise ValidationError(f"{name}: unsupported schema {doc.get('schema')!r}")
    return StudyBundle(root=root, manifest=manifest, keys=keys)


def load_bundle_grid(bundle: StudyBundle, dataset_id: str) -> GridLayout:
    grid, _meta = datagen.load_dataset(bundle.root / "datasets" / dataset_id)
    return grid


# ---------------------------------------------------------------------------
# Result logs and scoring


def perfect_log(bundle: StudyBundle, participant: int) -> dict:
    """Synthetic log answering every trial with its key; used for round trips."""
    trials = []
    t0 = 1_000_000
    for i, trial in enumerate(bundle.trials_of(participant)):
        key = bundle.key_of(trial["trial_id"])
        trials.append(
            {
                "trial_id": trial["trial_id"],
                "skipped": False,
                "answer": key_answer(key),
                "display_ts": t0 + 10_000 * i,
                "submit_ts": t0 + 10_000 * i + 1_500,
            }
        )
    ratings = [
        {"task_id": task, "technique": tech, "confidence": 4, "difficulty": 4}
        for tech in bundle.manifest["techniques"]
        for task in tasks_for(tech)
    ]
    return {
        "schema": SCHEMA_VERSION,
        "participant": participant,
        "demographics": {"age": 30, "gender": "na", "degree": "na", "familiarity": 4},
        "training_rounds": {tech: 1 for tech in bundle.manifest["techniques"]},
        "trials": trials,
        "ratings": ratings,
    }


def key_answer(key: analysis.TrialKey) -> dict:
    """The answer payload that scores a perfect 0 for this trial."""
    t = key.answer_type
    if t == "single_graph":
        return {"index": int(key.key)}
    if t == "multi_graph":
        return {"indices": [int(i) for i in key.key]}
    if t == "value_input":
        return {"value": float(key.key)}
    if t == "time_slider":
        return {"step": int(key.key)}
    if t == "yes_no":
        return {"yes": bool(key.key)}
    if t == "quadrant":
        return {"row": int(key.key["row"]), "col": int(key.key["col"])}
    raise ValidationError(f"unknown answer type {t!r}")


@dataclass
class Observation:
    """Per participant x task x technique aggregation cell."""

    errors: list[float] = field(default_factory=list)
    times_s: list[float] = field(default_factory=list)
    skips: int = 0


@dataclass
class ScoreReport:
    per_participant: list[dict]
    aggregate: list[dict]
    validation_errors: list[str]

    def to_csv(self) -> str:
        buf = io.StringIO()
        fields = [
            "level",
            "participant",
            "task_id",
            "technique",
            "mean_time_s",
            "mean_error",
            "median_error",
            "count",
            "skips",
            "mean_confidence",
            "mean_difficulty",
        ]
        writer = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
        writer.writeheader()
        for row in self.per_participant:
            writer.writerow({"level": "participant", **row})
        for row in self.aggregate:
            writer.writerow({"level": "aggregate", **row})
        return buf.getvalue()


def _fmt_num(x: float | None):
    return None if x is None else round(x, 6)


def _validate_log(log: dict, errors: list[str]) -> bool:
    if not isinstance(log, dict) or log.get("schema") != SCHEMA_VERSION:
        errors.append(f"log: unsupported schema {log.get('schema')!r}")
        return False
    if "participant" not in log or not isinstance(log.get("trials"), list):
        errors.append("log: missing participant or trials")
        return False
    for rating in log.get("ratings", []):
        for field_name in ("confidence", "difficulty"):
            v = rating.get(field_name)
            if not isinstance(v, int) or not 1 <= v <= 7:
                errors.append(
                    f"rating {rating.get('task_id')}/{rating.get('technique')}: "
                    f"{field_name}={v!r} outside 1..7"
                )
    return True


def score_log(bundle: StudyBundle, logs: list[dict]) -> ScoreReport:
    """Score result logs against the bundle's keys.

    Repetitions of one task under one technique average into a single
    observation per participant; skipped repetitions are counted but not
    scored.  Malformed records are collected as validation errors and
    excluded rather than aborting the whole report.
    """
    errors: list[str] = []
    cells: dict[tuple[int, str, str], Observation] = {}
    ratings: dict[tuple[str, str], list[tuple[int, int]]] = {}

    for log in logs:
        if not _validate_log(log, errors):
            continue
        participant = log["participant"]
        for rec in log["trials"]:
            trial_id = rec.get("trial_id")
            try:
                key = bundle.key_of(trial_id)
            except ValidationError as exc:
                errors.append(str(exc))
                continue
            task, tech = _parse_trial_id(trial_id)
            cell = cells.setdefault((participant, task, tech), Observation())
            display = rec.get("display_ts")
            submit = rec.get("submit_ts")
            if not (isinstance(display, int) and isinstance(submit, int)) or submit < display:
                errors.append(f"{trial_id}: timestamps not monotone ({display!r}, {submit!r})")
                continue
            if rec.get("skipped"):
                cell.skips += 1
                continue
            try:
                score = analysis.score_trial(key, rec.get("answer"))
            except ValidationError as exc:
                errors.append(f"{trial_id}: {exc}")
                continue
            cell.errors.append(score.error)
            cell.times_s.append((submit - display) / 1000.0)
        for rating in log.get("ratings", []):
            task = rating.get("task_id")
            tech = rating.get("technique")
            c, d = rating.get("confidence"), rating.get("difficulty")
            if isinstance(c, int) and isinstance(d, int) and 1 <= c <= 7 and 1 <= d <= 7:
                ratings.setdefault((task, tech), []).append((c, d))

    per_participant = []
    for (participant, task, tech), cell in sorted(cells.items(), key=lambda kv: (str(kv[0][0]), kv[0][1], kv[0][2])):
        per_participant.append(
            {
                "participant": participant,
                "task_id": task,
                "technique": tech,
                "mean_time_s": _fmt_num(statistics.fmean(cell.times_s) if cell.times_s else None),
                "mean_error": _fmt_num(statistics.fmean(cell.errors) if cell.errors else None),
                "median_error": None,
                "count": len(cell.errors),
                "skips": cell.skips,
                "mean_confidence": None,
                "mean_difficulty": None,
            }
        )

    aggregate = []
    by_condition: dict[tuple[str, str], list[dict]] = {}
    for row in per_participant:
        by_condition.setdefault((row["task_id"], row["technique"]), []).append(row)
    for (task, tech), rows in sorted(by_condition.items()):
        errs = [r["mean_error"] for r in rows if r["mean_error"] is not None]
        times = [r["mean_time_s"] for r in rows if r["mean_time_s"] is not None]
        rate = ratings.get((task, tech), [])
        aggregate.append(
            {
                "participant": "",
                "task_id": task,
                "technique": tech,
                "mean_time_s": _fmt_num(statistics.fmean(times) if times else None),
                "mean_error": _fmt_num(statistics.fmean(errs) if errs else None),
                "median_error": _fmt_num(statistics.median(errs) if errs else None),
                "count": len(errs),
                "skips": sum(r["skips"] for r in rows),
                "mean_confidence": _fmt_num(statistics.fmean(c for c, _ in rate) if rate else None),
                "mean_difficulty": _fmt_num(statistics.fmean(d for _, d in rate) if rate else None),
            }
        )
    return ScoreReport(per_participant=per_participant, aggregate=aggregate, validation_errors=errors)


def _parse_trial_id(trial_id: str) -> tuple[str, str]:
    parts = trial_id.split("_")
    if len(parts) != 4:
        raise ValidationError(f"malformed trial id {trial_id!r}")
    return parts[2], parts[1]
