"""Prompt scoring and the material evaluation table."""

from __future__ import annotations

import csv
from pathlib import Path

import torch

from .config import PromptSet
from .data import load_image
from .errors import EmptyPromptSet
from .train import TransferModel


def score_prompts(image: torch.Tensor, prompts: list[str],
                  model: TransferModel) -> list[tuple[str, float]]:
    """Softmax over scaled cosine similarities across the prompt set.

    ``image`` is a single (3, H, W) tensor already model-normalized; the
    returned scores are a probability vector aligned with ``prompts``.
    """
    if not prompts:
        raise EmptyPromptSet("need at least one prompt")
    model.eval()
    with torch.no_grad():
        img = model.encode_images(image.unsqueeze(0))
        txt = model.encode_texts(list(prompts))
        logits = model.logit_scale * (img @ txt.t()).squeeze(0)
        probs = torch.softmax(logits, dim=0)
    return list(zip(prompts, probs.tolist()))


def material_eval(image_paths: list[str | Path], prompt_set: PromptSet,
                  model: TransferModel, csv_path: str | Path | None = None) -> list[list]:
    """Score every image against the rendered prompt set.

    Returns (and optionally writes as CSV) a prompts x images table whose
    first column holds the fill values; each image column sums to 1.
    """
    prompts = prompt_set.render()
    columns = []
    for path in image_paths:
        image = load_image(path, model.config.image_size)
        scores = score_prompts(image, prompts, model)
        columns.append([s for _, s in scores])
    header = ["prompt"] + [str(Path(p).name) for p in image_paths]
    table = [header]
    for i, value in enumerate(prompt_set.fill_values):
        table.append([value] + [round(col[i], 6) for col in columns])
    if csv_path is not None:
        with open(csv_path, "w", newline="", encoding="utf-8") as fh:
            csv.writer(fh).writerows(table)
    return table
