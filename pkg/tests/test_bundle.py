import copy
import json
from collections import Counter

import pytest
from click.testing import CliRunner
from PIL import Image

from compactvis import GenConfig, ValidationError, export_dataset, layout_grid, make_rng
from compactvis.bundle import (
    TECHNIQUES,
    WILLIAMS_ROWS,
    StudyBundle,
    condition_slots,
    key_answer,
    load_bundle,
    load_bundle_grid,
    perfect_log,
    reps_for,
    score_log,
    tasks_for,
    technique_order,
    _parse_trial_id,
)
from compactvis.cli import main as cli_main
from compactvis.datagen import TASK_SHAPES

# ---------------------------------------------------------------------------
# Condition structure


def test_condition_counts():
    per_tech = {t: len(condition_slots(t)) for t in TECHNIQUES}
    assert per_tech == {"CBP": 19, "HG": 19, "CHG": 21, "BHG": 19}
    assert sum(per_tech.values()) == 78


def test_tasks_for_gates_slice_ordering_task():
    assert "T03" in tasks_for("CHG")
    for tech in ("CBP", "HG", "BHG"):
        assert "T03" not in tasks_for(tech)
    assert tasks_for("CHG") == [f"T{i:02d}" for i in range(1, 11)]


def test_reps_for():
    assert reps_for("T08") == 3
    assert all(reps_for(t) == 2 for t in ("T01", "T05", "T10"))


def test_latin_square_is_balanced():
    for row in WILLIAMS_ROWS:
        assert sorted(row) == [0, 1, 2, 3]
    for pos in range(4):
        assert sorted(row[pos] for row in WILLIAMS_ROWS) == [0, 1, 2, 3]
    # adjacent pairs all differ across rows (carryover balance)
    pairs = {(row[i], row[i + 1]) for row in WILLIAMS_ROWS for i in range(3)}
    assert len(pairs) == 12


def test_technique_order_cycles():
    assert technique_order(0) == ["CBP", "HG", "BHG", "CHG"]
    assert technique_order(4) == technique_order(0)
    assert sorted(technique_order(2)) == sorted(TECHNIQUES)


# ---------------------------------------------------------------------------
# Built bundle


def test_bundle_trial_counts(study_bundle):
    assert study_bundle.manifest["participants"] == 4
    for p in range(4):
        assert len(study_bundle.trials_of(p)) == 78


def test_bundle_trials_follow_technique_order(study_bundle):
    for p in range(4):
        seq = [t["technique"] for t in study_bundle.trials_of(p)]
        blocks = []
        for tech in seq:
            if not blocks or blocks[-1] != tech:
                blocks.append(tech)
        assert blocks == technique_order(p)


def test_bundle_t03_only_under_chg(study_bundle):
    for p in range(4):
        for t in study_bundle.trials_of(p):
            if t["task_id"] == "T03":
                assert t["technique"] == "CHG"


def test_bundle_t08_variants_by_repetition(study_bundle):
    for p in range(4):
        for t in study_bundle.trials_of(p):
            if t["task_id"] != "T08":
                continue
            variant = t["params"]["variant"]
            assert variant == ("full", "slice", "arbitrary")[t["repetition"]]
            lo, hi = t["params"]["interval"]
            if variant == "full":
                assert (lo, hi) == (0, 71)
            else:
                assert hi - lo + 1 == 24


def test_bundle_grid_shapes_match_tasks(study_bundle):
    for t in study_bundle.trials_of(0):
        rows, cols, qside = TASK_SHAPES[t["task_id"]]
        assert t["grid"] == [rows, cols]
        assert t["quadrant_side"] == qside


def test_bundle_trial_ids_unique(study_bundle):
    ids = [t["trial_id"] for p in range(4) for t in study_bundle.trials_of(p)]
    assert len(ids) == len(set(ids)) == 4 * 78


def test_manifest_carries_no_answers(study_bundle):
    text = (study_bundle.root / "manifest.json").read_text()
    assert "keys.json" not in text
    for p in range(4):
        for t in study_bundle.trials_of(p):
            assert "key" not in t and "metrics" not in t and "drawn_index" not in t


def test_keys_cover_all_trials(study_bundle):
    keys = study_bundle.keys["trials"]
    for p in range(4):
        for t in study_bundle.trials_of(p):
            e = keys[t["trial_id"]]
            assert e["answer_type"] == t["answer_type"]
            assert 0 <= e["drawn_index"] < 3
            assert len(e["candidates"]) == 3
            assert e["candidates"][e["drawn_index"]] == t["dataset"]


def test_bundle_files_exist(study_bundle):
    root = study_bundle.root
    seen = set()
    for p in range(4):
        for t in study_bundle.trials_of(p):
            seen.add(t["stimulus"])
            assert (root / t["stimulus"]).exists()
            assert (root / "datasets" / f"{t['dataset']}.csv").exists()
            assert (root / "datasets" / f"{t['dataset']}.meta.json").exists()
    assert len(seen) <= 78 * 3


def test_candidate_datasets_differ(study_bundle):
    root = study_bundle.root / "datasets"
    a = (root / "CBP_T01_r0_d0.csv").read_text()
    b = (root / "CBP_T01_r0_d1.csv").read_text()
    c = (root / "CBP_T01_r0_d2.csv").read_text()
    assert a != b and b != c and a != c


def test_bundle_training_material(study_bundle):
    training = study_bundle.manifest["training"]
    assert set(training) == set(TECHNIQUES)
    for tech, rounds in training.items():
        assert [r["task_id"] for r in rounds] == ["T01", "T02"]
        for r in rounds:
            assert "key" in r  # training answers are participant-visible
            assert (study_bundle.root / r["stimulus"]).exists()


def test_bundle_manifest_config_echo(study_bundle):
    cfg = study_bundle.manifest["config"]
    assert cfg["gen"]["seed"] == 42
    assert cfg["render"] == {"cell_px": 24, "gap_px": 4}
    assert cfg["technique"]["bands"] == 3
    assert study_bundle.manifest["time"] == {"steps": 72, "hours_span": 24}
    assert set(study_bundle.manifest["task_prompts"]) == set(TASK_SHAPES)
    assert set(study_bundle.manifest["explanations"]) == set(TECHNIQUES)


def test_load_bundle_round_trip(study_bundle):
    loaded = load_bundle(study_bundle.root)
    assert loaded.manifest == json.loads(json.dumps(study_bundle.manifest))
    assert loaded.keys == json.loads(json.dumps(study_bundle.keys))
    grid = load_bundle_grid(loaded, "CBP_T01_r0_d0")
    assert (grid.rows, grid.cols) == (3, 3)


def test_load_bundle_rejects_unknown_schema(study_bundle, tmp_path):
    root = tmp_path / "broken"
    root.mkdir()
    (root / "manifest.json").write_text(json.dumps({"schema": 99}))
    (root / "keys.json").write_text(json.dumps({"schema": 1, "trials": {}}))
    with pytest.raises(ValidationError):
        load_bundle(root)


def test_key_of_unknown_trial(study_bundle):
    with pytest.raises(ValidationError):
        study_bundle.key_of("p99_CBP_T01_r0")


def test_parse_trial_id():
    assert _parse_trial_id("p03_CHG_T08_r2") == ("T08", "CHG")
    with pytest.raises(ValidationError):
        _parse_trial_id("nonsense")


# ---------------------------------------------------------------------------
# Scoring round trips


def test_key_answers_score_zero(study_bundle):
    for t in study_bundle.trials_of(0):
        key = study_bundle.key_of(t["trial_id"])
        from compactvis import score_trial

        assert score_trial(key, key_answer(key)).error == 0.0


def test_perfect_logs_score_clean(study_bundle):
    logs = [perfect_log(study_bundle, p) for p in range(4)]
    report = score_log(study_bundle, logs)
    assert report.validation_errors == []
    assert len(report.per_participant) == 4 * 37
    assert len(report.aggregate) == 37
    for row in report.per_participant:
        assert row["mean_error"] == 0.0
        assert row["mean_time_s"] == 1.5
        assert row["skips"] == 0
        assert row["count"] == reps_for(row["task_id"])
    for row in report.aggregate:
        assert row["mean_error"] == 0.0 and row["median_error"] == 0.0
        assert row["mean_confidence"] == 4.0 and row["mean_difficulty"] == 4.0
        assert row["count"] == 4


def test_score_csv_shape(study_bundle):
    report = score_log(study_bundle, [perfect_log(study_bundle, 0)])
    lines = report.to_csv().splitlines()
    assert lines[0] == (
        "level,participant,task_id,technique,mean_time_s,mean_error,"
        "median_error,count,skips,mean_confidence,mean_difficulty"
    )
    assert len(lines) == 1 + 37 + 37
    assert Counter(line.split(",")[0] for line in lines[1:]) == {
        "participant": 37,
        "aggregate": 37,
    }


def test_score_counts_skips_without_scoring(study_bundle):
    log = perfect_log(study_bundle, 0)
    log["trials"][0]["skipped"] = True
    target = log["trials"][0]["trial_id"]
    task, tech = _parse_trial_id(target)
    report = score_log(study_bundle, [log])
    assert report.validation_errors == []
    row = next(
        r for r in report.per_participant if r["task_id"] == task and r["technique"] == tech
    )
    assert row["skips"] == 1 and row["count"] == reps_for(task) - 1


def test_score_rejects_backward_timestamps(study_bundle):
    log = perfect_log(study_bundle, 0)
    log["trials"][3]["submit_ts"] = log["trials"][3]["display_ts"] - 1
    report = score_log(study_bundle, [log])
    assert len(report.validation_errors) == 1
    assert "timestamps" in report.validation_errors[0]


def test_score_reports_unknown_trial(study_bundle):
    log = perfect_log(study_bundle, 0)
    log["trials"][0]["trial_id"] = "p00_CBP_T01_r7"
    report = score_log(study_bundle, [log])
    assert any("unknown trial id" in e for e in report.validation_errors)


def test_score_flags_bad_answer_payload(study_bundle):
    log = perfect_log(study_bundle, 0)
    victim = next(t for t in log["trials"] if t["trial_id"].endswith("T01_r0"))
    victim["answer"] = {"index": "left"}
    report = score_log(study_bundle, [log])
    assert len(report.validation_errors) == 1
    assert victim["trial_id"] in report.validation_errors[0]


def test_score_flags_out_of_scale_rating(study_bundle):
    log = perfect_log(study_bundle, 0)
    log["ratings"][0]["confidence"] = 9
    report = score_log(study_bundle, [log])
    assert any("outside 1..7" in e for e in report.validation_errors)
    # the bad rating is excluded, trial scoring is untouched
    assert all(r["mean_error"] == 0.0 for r in report.per_participant)


def test_score_rejects_wrong_schema(study_bundle):
    log = perfect_log(study_bundle, 0)
    log["schema"] = 2
    report = score_log(study_bundle, [log])
    assert report.per_participant == []
    assert any("unsupported schema" in e for e in report.validation_errors)


def test_score_merges_multiple_logs(study_bundle):
    a = perfect_log(study_bundle, 0)
    b = copy.deepcopy(perfect_log(study_bundle, 1))
    b["trials"][0]["submit_ts"] = b["trials"][0]["display_ts"] + 9_000
    report = score_log(study_bundle, [a, b])
    assert len(report.per_participant) == 2 * 37
    task, tech = _parse_trial_id(b["trials"][0]["trial_id"])
    agg = next(r for r in report.aggregate if r["task_id"] == task and r["technique"] == tech)
    assert agg["mean_time_s"] > 1.5


# ---------------------------------------------------------------------------
# Command line


@pytest.fixture()
def runner():
    return CliRunner()


def _write_series_csv(path, rows=2, n=72):
    lines = []
    for r in range(rows):
        vals = [str(20.0 + (i * (r + 3)) % 60) for i in range(n)]
        lines.append(",".join(vals))
    path.write_text("\n".join(lines) + "\n")


def test_cli_render_svg(runner, tmp_path):
    csv_path = tmp_path / "series.csv"
    _write_series_csv(csv_path)
    out = tmp_path / "glyph.svg"
    result = runner.invoke(
        cli_main,
        ["render", "--input", str(csv_path), "--row", "1", "--technique", "cbp", "--out", str(out)],
    )
    assert result.exit_code == 0, result.output
    assert out.read_text().startswith('<?xml version="1.0"')


def test_cli_render_png_scale(runner, tmp_path):
    csv_path = tmp_path / "series.csv"
    _write_series_csv(csv_path)
    out = tmp_path / "glyph.png"
    result = runner.invoke(
        cli_main,
        [
            "render", "--input", str(csv_path), "--technique", "bhg",
            "--format", "png", "--scale", "3", "--out", str(out),
        ],
    )
    assert result.exit_code == 0, result.output
    assert Image.open(out).size == (72, 72)


def test_cli_render_both_formats(runner, tmp_path):
    csv_path = tmp_path / "series.csv"
    _write_series_csv(csv_path)
    out = tmp_path / "glyph"
    result = runner.invoke(
        cli_main,
        ["render", "--input", str(csv_path), "--technique", "chg", "--format", "both", "--out", str(out)],
    )
    assert result.exit_code == 0, result.output
    assert (tmp_path / "glyph.svg").exists() and (tmp_path / "glyph.png").exists()


def test_cli_render_reads_dataset_sidecar(runner, tmp_path):
    grid = layout_grid(1, 2, GenConfig(seed=0), make_rng(1))
    export_dataset(grid, tmp_path / "ds")
    out = tmp_path / "g.svg"
    result = runner.invoke(
        cli_main,
        ["render", "--input", str(tmp_path / "ds.csv"), "--row", "1", "--technique", "hg", "--out", str(out)],
    )
    assert result.exit_code == 0, result.output
    assert out.exists()


def test_cli_render_errors(runner, tmp_path):
    result = runner.invoke(
        cli_main,
        ["render", "--input", str(tmp_path / "nope.csv"), "--technique", "hg", "--out", str(tmp_path / "x.svg")],
    )
    assert result.exit_code != 0 and "not found" in result.output
    assert not (tmp_path / "x.svg").exists()

    csv_path = tmp_path / "series.csv"
    _write_series_csv(csv_path)
    result = runner.invoke(
        cli_main,
        ["render", "--input", str(csv_path), "--row", "9", "--technique", "hg", "--out", str(tmp_path / "y.svg")],
    )
    assert result.exit_code != 0 and "out of range" in result.output

    result = runner.invoke(
        cli_main,
        ["render", "--input", str(csv_path), "--technique", "chg", "--slices", "80", "--out", str(tmp_path / "z.svg")],
    )
    assert result.exit_code != 0
    assert not (tmp_path / "z.svg").exists()


def test_cli_bundle_and_score(runner, tmp_path):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps({"gen": {"length": 48}, "render": {"cell_px": 24, "gap_px": 4}}))
    out = tmp_path / "study"
    result = runner.invoke(
        cli_main,
        ["bundle", "--config", str(cfg_path), "--seed", "7", "--participants", "1", "--out", str(out)],
    )
    assert result.exit_code == 0, result.output
    assert "78 trials" in result.output
    built = load_bundle(out)
    assert built.manifest["config"]["gen"]["length"] == 48
    assert built.manifest["config"]["gen"]["seed"] == 7

    log_path = tmp_path / "log0.json"
    log_path.write_text(json.dumps(perfect_log(built, 0)))
    result = runner.invoke(
        cli_main, ["score", "--bundle", str(out), "--log", str(log_path)]
    )
    assert result.exit_code == 0, result.output
    assert result.output.startswith("level,participant,")

    report_path = tmp_path / "report.csv"
    result = runner.invoke(
        cli_main,
        ["score", "--bundle", str(out), "--log", str(log_path), "--out", str(report_path)],
    )
    assert result.exit_code == 0
    assert report_path.read_text().startswith("level,participant,")

    bad = perfect_log(built, 0)
    bad["ratings"][0]["difficulty"] = 0
    bad_path = tmp_path / "bad.json"
    bad_path.write_text(json.dumps(bad))
    result = runner.invoke(
        cli_main, ["score", "--bundle", str(out), "--log", str(bad_path)]
    )
    assert result.exit_code == 1
    assert "validation:" in result.stderr


def test_cli_score_missing_bundle(runner, tmp_path):
    result = runner.invoke(
        cli_main,
        ["score", "--bundle", str(tmp_path / "ghost"), "--log", str(tmp_path / "ghost.json")],
    )
    assert result.exit_code != 0 and "no bundle" in result.output


def test_cli_bundle_rejects_bad_args(runner, tmp_path):
    result = runner.invoke(
        cli_main,
        ["bundle", "--config", str(tmp_path / "missing.json"), "--out", str(tmp_path / "s")],
    )
    assert result.exit_code != 0 and "not found" in result.output
    result = runner.invoke(
        cli_main, ["bundle", "--participants", "0", "--out", str(tmp_path / "s")]
    )
    assert result.exit_code != 0
