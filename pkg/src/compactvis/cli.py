"""Command-line entry points: render one stimulus, build a study bundle,
score result logs."""

from __future__ import annotations

import json
from pathlib import Path

import click
import numpy as np

from . import bundle as bundle_mod
from . import datagen, render
from .datagen import GenConfig
from .errors import ConfigurationError, GenerationError, ValidationError
from .model import TimeSeries, ValueDomain
from .render import TechniqueConfig
from .techniques import FRONT_FIRST_SLICE, FRONT_LAST_SLICE

ORDERING_FLAGS = {"front-first": FRONT_FIRST_SLICE, "front-last": FRONT_LAST_SLICE}


@click.group()
def main():
    """Compact time-series glyphs: stimuli, study bundles, and scoring."""


def _load_series(path: Path, row: int) -> TimeSeries:
    if path.with_suffix(".meta.json").exists():
        grid, _ = datagen.load_dataset(path.with_suffix(""))
        if not 0 <= row < len(grid.cells):
            raise click.ClickException(f"row {row} out of range (dataset has {len(grid.cells)})")
        return grid.cells[row]
    lines = path.read_text().strip().splitlines()
    if not 0 <= row < len(lines):
        raise click.ClickException(f"row {row} out of range ({len(lines)} rows)")
    values = np.array([float(tok) for tok in lines[row].split(",")])
    return TimeSeries(values=values, domain=ValueDomain())


@main.command("render")
@click.option("--input", "input_path", type=click.Path(path_type=Path), required=True, help="Series CSV (one row per series).")
@click.option("--row", type=int, default=0, show_default=True, help="Which CSV row to render.")
@click.option("--technique", type=click.Choice(["cbp", "hg", "chg", "bhg"], case_sensitive=False), required=True)
@click.option("--bands", type=int, default=3, show_default=True)
@click.option("--slices", type=int, default=3, show_default=True)
@click.option("--interval", "interval_len", type=int, default=3, show_default=True, help="Aggregation interval for cbp.")
@click.option("--ordering", type=click.Choice(sorted(ORDERING_FLAGS)), default="front-first", show_default=True)
@click.option("--family", type=click.Choice(["SeqSeq", "SeqQual", "SeqDiv", "DivDiv"]), default="SeqQual", show_default=True)
@click.option("--size", type=int, default=24, show_default=True, help="Glyph footprint in pixels.")
@click.option("--scale", type=int, default=1, show_default=True, help="Raster scale factor.")
@click.option("--format", "fmt", type=click.Choice(["svg", "png", "both"]), default="svg", show_default=True)
@click.option("--out", type=click.Path(path_type=Path), required=True)
def render_cmd(input_path, row, technique, bands, slices, interval_len, ordering, family, size, scale, fmt, out):
    """Render a single series with one technique."""
    if not input_path.exists():
        raise click.ClickException(f"input file {input_path} not found")
    try:
        series = _load_series(input_path, row)
        tech_cfg = TechniqueConfig(
            bands=bands,
            slices=slices,
            interval_len=interval_len,
            ordering=ORDERING_FLAGS[ordering],
            family=family,
        )
        scene = render.build_technique_scene(series, technique.upper(), tech_cfg, size)
    except (ConfigurationError, ValidationError, ValueError) as exc:
        raise click.ClickException(str(exc))
    if fmt == "both":
        render.save_svg(scene, out.with_suffix(".svg"))
        render.save_png(scene, out.with_suffix(".png"), scale)
        click.echo(f"wrote {out.with_suffix('.svg')} and {out.with_suffix('.png')}")
    elif fmt == "svg":
        render.save_svg(scene, out)
        click.echo(f"wrote {out}")
    else:
        render.save_png(scene, out, scale)
        click.echo(f"wrote {out}")


def _config_from_file(path: Path | None, seed: int) -> tuple[GenConfig, TechniqueConfig, int, int]:
    gen, tech, cell_px, gap_px = GenConfig(seed=seed), TechniqueConfig(), 24, 4
    if path is not None:
        doc = json.loads(path.read_text())
        if "gen" in doc:
            gen_d = dict(doc["gen"])
            gen_d.setdefault("seed", seed)
            gen = GenConfig.from_dict(gen_d)
        if "technique" in doc:
            tech = TechniqueConfig.from_dict(doc["technique"])
        rnd = doc.get("render", {})
        cell_px = rnd.get("cell_px", cell_px)
        gap_px = rnd.get("gap_px", gap_px)
    return gen, tech, cell_px, gap_px


@main.command("bundle")
@click.option("--config", "config_path", type=click.Path(path_type=Path), default=None, help="JSON with gen/technique/render sections.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--participants", type=int, default=4, show_default=True)
@click.option("--png", is_flag=True, help="Also rasterize every stimulus.")
@click.option("--out", type=click.Path(path_type=Path), required=True)
def bundle_cmd(config_path, seed, participants, png, out):
    """Build a complete study bundle directory."""
    if config_path is not None and not config_path.exists():
        raise click.ClickException(f"config file {config_path} not found")
    if participants < 1:
        raise click.ClickException("participants must be >= 1")
    try:
        gen, tech, cell_px, gap_px = _config_from_file(config_path, seed)
        built = bundle_mod.build_bundle(
            out,
            seed=seed,
            participants=participants,
            gen_cfg=gen,
            tech_cfg=tech,
            cell_px=cell_px,
            gap_px=gap_px,
            png=png,
        )
    except (ConfigurationError, ValidationError, GenerationError, ValueError) as exc:
        raise click.ClickException(str(exc))
    n_trials = sum(len(v) for v in built.manifest["trials"].values())
    click.echo(f"bundle at {built.root}: {participants} participants, {n_trials} trials")


@main.command("score")
@click.option("--bundle", "bundle_path", type=click.Path(path_type=Path), required=True)
@click.option("--log", "log_paths", type=click.Path(path_type=Path), multiple=True, required=True)
@click.option("--out", type=click.Path(path_type=Path), default=None, help="Report CSV path (default: stdout).")
def score_cmd(bundle_path, log_paths, out):
    """Score one or more result logs against a bundle."""
    if not (bundle_path / "manifest.json").exists():
        raise click.ClickException(f"no bundle at {bundle_path}")
    try:
        study = bundle_mod.load_bundle(bundle_path)
    except (ValidationError, json.JSONDecodeError) as exc:
        raise click.ClickException(str(exc))
    logs = []
    for lp in log_paths:
        if not lp.exists():
            raise click.ClickException(f"log file {lp} not found")
        try:
            logs.append(json.loads(lp.read_text()))
        except json.JSONDecodeError as exc:
            raise click.ClickException(f"{lp}: {exc}")
    report = bundle_mod.score_log(study, logs)
    text = report.to_csv()
    if out is None:
        click.echo(text, nl=False)
    else:
        out.write_text(text)
        click.echo(f"wrote {out}")
    for err in report.validation_errors:
        click.echo(f"validation: {err}", err=True)
    if report.validation_errors:
        raise SystemExit(1)


if __name__ == "__main__":
    main()
