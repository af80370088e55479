"""Command-line entry point.

Exit codes: 0 success, 1 validation failure, 2 fatal pipeline error.
"""

from __future__ import annotations

import csv
import json
import logging
import sys
from pathlib import Path

import click

from . import __version__
from .config import load_config
from .documents import FIELD_NAMES, STAGES, StageDocument, validate_document
from .errors import PipelineError
from .pipeline import run_stage, stage_path
from .stats import unique_label_counts, word_occurrences


def _setup_logging(verbose: int) -> None:
    level = logging.WARNING if verbose == 0 else logging.INFO if verbose == 1 else logging.DEBUG
    logging.basicConfig(stream=sys.stderr, level=level, format="%(levelname)s %(name)s: %(message)s")


@click.group()
@click.version_option(__version__)
@click.option("-v", "--verbose", count=True, help="Increase log verbosity (-v, -vv).")
def cli(verbose: int) -> None:
    """Generate a language-image dataset from industrial web catalogs."""
    _setup_logging(verbose)


def _stage_command(stage: str):
    idx = STAGES.index(stage)

    @click.option("--config", "config_path", required=True, type=click.Path(exists=True))
    @click.option("--input", "input_path", type=click.Path(exists=True), default=None,
                  help="Predecessor stage document (default: <output-dir>/<prev>.json).")
    @click.option("--output-dir", default=None, help="Override config output_dir.")
    @click.option("--shop", default=None, help="Restrict crawling to one shop_id.")
    def command(config_path, input_path, output_dir, shop):
        config = load_config(config_path)
        if output_dir:
            config = _with_output_dir(config, output_dir)
        out_dir = Path(config.output_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        doc = None
        if idx > 0:
            path = Path(input_path) if input_path else stage_path(out_dir, STAGES[idx - 1])
            if not path.exists():
                raise PipelineError(
                    f"stage {stage!r} needs the {STAGES[idx - 1]!r} document at {path}"
                )
            doc = StageDocument.load(path)
        result = run_stage(doc, stage, config, only_shop=shop)
        result.save(stage_path(out_dir, stage))
        click.echo(f"{stage}: {len(result.records)} records -> {stage_path(out_dir, stage)}")

    command.__name__ = stage.replace("-", "_")
    return cli.command(name=stage)(command)


for _stage in STAGES:
    _stage_command(_stage)


def _with_output_dir(config, output_dir: str):
    from dataclasses import replace

    return replace(config, output_dir=output_dir)


@cli.command(name="run-all")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--output-dir", default=None)
@click.option("--shop", default=None, help="Restrict crawling to one shop_id.")
def run_all_cmd(config_path, output_dir, shop):
    """Run every stage in order and write the final manifest."""
    from .pipeline import run_all

    config = load_config(config_path)
    if output_dir:
        config = _with_output_dir(config, output_dir)
    doc = run_all(config, only_shop=shop)
    click.echo(f"done: {len(doc.records)} samples, manifest at {config.output_dir}/manifest.json")


@cli.command()
@click.option("--input", "input_path", required=True, type=click.Path(exists=True))
def validate(input_path):
    """Validate a stage document; exits 1 when invariants are violated."""
    doc = StageDocument.load(input_path)
    report = validate_document(doc)
    for violation in report.violations:
        where = violation.record_id or "<document>"
        click.echo(f"{where}: {violation.message}")
    if not report.ok:
        raise _ValidationFailure(f"{len(report.violations)} violation(s)")
    click.echo("ok")


@cli.command()
@click.option("--manifest", "manifest_path", required=True, type=click.Path(exists=True))
@click.option("--field", "field_name", default=None, type=click.Choice(FIELD_NAMES))
@click.option("--top", default=40, show_default=True)
@click.option("--csv", "csv_path", default=None, help="Write the top-k table as CSV.")
def stats(manifest_path, field_name, top, csv_path):
    """Emit corpus statistics as JSON (and optionally a CSV top-k table)."""
    manifest = json.loads(Path(manifest_path).read_text(encoding="utf-8"))
    result: dict = {
        "sample_count": len(manifest.get("samples", [])),
        "unique_counts": unique_label_counts(manifest),
    }
    if field_name:
        ranked = word_occurrences(manifest, field_name, top=top)
        result["word_occurrences"] = {field_name: ranked}
        if csv_path:
            with open(csv_path, "w", newline="", encoding="utf-8") as fh:
                writer = csv.writer(fh)
                writer.writerow(["word", "count"])
                writer.writerows(ranked)
    click.echo(json.dumps(result, indent=2, sort_keys=True))


class _ValidationFailure(Exception):
    pass


def main(argv: list[str] | None = None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
    except _ValidationFailure as exc:
        click.echo(f"validation failed: {exc}", err=True)
        return 1
    except click.ClickException as exc:
        exc.show()
        return 2
    except click.Abort:
        return 2
    except PipelineError as exc:
        click.echo(f"error: {exc}", err=True)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
