"""Command-line entry points for training, export, and evaluation."""

from __future__ import annotations

import dataclasses
import json
import logging
import sys
from pathlib import Path

import click
import numpy as np
from PIL import Image

from . import __version__
from .config import PromptSet, SegParams, TrainConfig, VARIANTS
from .data import kfold_split, load_manifest, manifest_samples
from .errors import HarnessError
from .scoring import material_eval
from .segment import segment_language_guided
from .train import Checkpoint, export_embeddings, train, zero_shot_model

FIELDS = ("label_long", "label_short", "description", "material", "material_finish")


@click.group()
@click.version_option(__version__)
@click.option("-v", "--verbose", count=True)
def cli(verbose: int) -> None:
    """Train and evaluate dual-encoder models on a dataset manifest."""
    level = logging.WARNING if verbose == 0 else logging.INFO if verbose == 1 else logging.DEBUG
    logging.basicConfig(stream=sys.stderr, level=level,
                        format="%(levelname)s %(name)s: %(message)s")


@cli.command(name="train")
@click.option("--manifest", required=True, type=click.Path(exists=True))
@click.option("--field", "field_name", default="label_long", type=click.Choice(FIELDS))
@click.option("--variant", default="CoOpIA", type=click.Choice(VARIANTS))
@click.option("--epochs", default=10, show_default=True)
@click.option("--batch-size", default=64, show_default=True)
@click.option("--lr", default=0.15, show_default=True)
@click.option("--image-size", default=224, show_default=True)
@click.option("--backbone", default="tiny-random", show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--folds", default=0, help="k for k-fold CV (0 = no split).")
@click.option("--eval-fold", default=0, show_default=True)
@click.option("--run-dir", required=True, type=click.Path())
def train_cmd(manifest, field_name, variant, epochs, batch_size, lr, image_size,
              backbone, seed, folds, eval_fold, run_dir):
    """Train one variant; writes checkpoint.pt and metrics.jsonl."""
    config = TrainConfig(variant=variant, epochs=epochs, batch_size=batch_size,
                         lr=lr, image_size=image_size, backbone=backbone, seed=seed)
    fold = None
    if folds:
        manifest_doc = load_manifest(manifest)
        samples = manifest_samples(manifest_doc, Path(manifest).parent, field_name)
        fold = kfold_split([s.sample_id for s in samples], k=folds, seed=seed)
    _, history = train(manifest, field_name, config, fold=fold,
                       eval_fold=eval_fold, run_dir=run_dir)
    last = history[-1]
    click.echo(f"done: loss={last.train_loss:.4f} top1={last.val_top1} "
               f"-> {run_dir}/checkpoint.pt")


@cli.command()
@click.option("--manifest", required=True, type=click.Path(exists=True))
@click.option("--field", "field_name", default="label_long", type=click.Choice(FIELDS))
@click.option("--checkpoint", type=click.Path(exists=True), default=None,
              help="Omit for raw zero-shot backbone embeddings.")
@click.option("--n", default=None, type=int)
@click.option("--seed", default=0, show_default=True)
@click.option("--output", required=True, type=click.Path())
def export(manifest, field_name, checkpoint, n, seed, output):
    """Export (sample_id, image embedding, text embedding) rows as JSON."""
    ckpt = Checkpoint.load(checkpoint) if checkpoint else None
    rows = export_embeddings(ckpt, manifest, field_name, n=n, seed=seed)
    Path(output).write_text(json.dumps(rows), encoding="utf-8")
    click.echo(f"{len(rows)} rows -> {output}")


@cli.command(name="material-eval")
@click.option("--images", required=True, multiple=True, type=click.Path(exists=True))
@click.option("--materials", required=True, help="Comma-separated fill values.")
@click.option("--checkpoint", type=click.Path(exists=True), default=None)
@click.option("--template", default="a photo of an industrial product with material {}",
              show_default=True)
@click.option("--csv", "csv_path", required=True, type=click.Path())
def material_eval_cmd(images, materials, checkpoint, template, csv_path):
    """Score images against material prompts; writes a prompts x images CSV."""
    model = _load_model(checkpoint)
    prompt_set = PromptSet(template=template,
                           fill_values=tuple(m.strip() for m in materials.split(",")))
    material_eval(list(images), prompt_set, model, csv_path=csv_path)
    click.echo(f"table -> {csv_path}")


@cli.command()
@click.option("--image", "image_path", required=True, type=click.Path(exists=True))
@click.option("--prompt", required=True)
@click.option("--checkpoint", type=click.Path(exists=True), default=None)
@click.option("--grid", default=32, show_default=True)
@click.option("--nms-iou", default=0.7, show_default=True)
@click.option("--delineation", default=1.2, show_default=True)
@click.option("--threshold", default=0.7, show_default=True)
@click.option("--output", required=True, type=click.Path(),
              help="JSON result path; the overlay lands beside it as .png.")
def segment(image_path, prompt, checkpoint, grid, nms_iou, delineation,
            threshold, output):
    """Language-guided segmentation of one image."""
    model = _load_model(checkpoint)
    params = SegParams(grid_points_per_side=grid, nms_iou_threshold=nms_iou,
                       crop_delineation=delineation, score_threshold=threshold)
    image = np.asarray(Image.open(image_path).convert("RGB"))
    result = segment_language_guided(image, prompt, params, model)
    payload = {
        "prompt": prompt,
        "params": dataclasses.asdict(params),
        "masks": [
            {"area": int(m.mask.sum()), "predicted_iou": m.predicted_iou,
             "positive_score": m.positive_score, "accepted": m.accepted}
            for m in result.masks
        ],
    }
    out = Path(output)
    out.write_text(json.dumps(payload, indent=2), encoding="utf-8")
    overlay = image.copy()
    for scored in result.accepted:
        overlay[scored.mask] = (overlay[scored.mask] * 0.5 + [127, 0, 0]).astype(np.uint8)
    Image.fromarray(overlay).save(out.with_suffix(".png"))
    click.echo(f"{len(result.accepted)}/{len(result.masks)} masks accepted -> {output}")


def _load_model(checkpoint_path):
    if checkpoint_path:
        return Checkpoint.load(checkpoint_path).build_model()
    return zero_shot_model(TrainConfig())


def main(argv: list[str] | None = None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.ClickException as exc:
        exc.show()
        return 2
    except click.Abort:
        return 2
    except HarnessError as exc:
        click.echo(f"error: {exc}", err=True)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
