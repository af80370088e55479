"""Manifest-backed dataset plumbing and k-fold splitting.

The manifest + images directory produced by the dataset pipeline is the
complete input contract; nothing else is read.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch
from PIL import Image

from .errors import EmptyField, TooFewSamples

NORM_MEAN = (0.48145466, 0.4578275, 0.40821073)
NORM_STD = (0.26862954, 0.26130258, 0.27577711)


@dataclass(frozen=True)
class Sample:
    sample_id: str
    image_path: Path
    text: str


@dataclass
class FoldSplit:
    """Seeded partition of sample ids into k nearly equal folds."""

    k: int
    seed: int
    assignments: dict[str, int] = field(default_factory=dict)

    def fold_ids(self, fold: int) -> list[str]:
        return sorted(s for s, f in self.assignments.items() if f == fold)

    def complement_ids(self, fold: int) -> list[str]:
        return sorted(s for s, f in self.assignments.items() if f != fold)


def kfold_split(sample_ids: list[str], k: int = 6, seed: int = 0) -> FoldSplit:
    """Shuffle with the seed, deal round-robin; fold sizes differ by <= 1."""
    if len(sample_ids) < k:
        raise TooFewSamples(f"{len(sample_ids)} samples cannot fill {k} folds")
    ids = sorted(sample_ids)
    random.Random(seed).shuffle(ids)
    return FoldSplit(k=k, seed=seed,
                     assignments={sid: i % k for i, sid in enumerate(ids)})


def load_manifest(path: str | Path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))


def manifest_samples(manifest: dict, manifest_dir: str | Path,
                     text_field: str) -> list[Sample]:
    """Samples with a non-empty value in ``text_field``, manifest order."""
    root = Path(manifest_dir)
    samples = [
        Sample(
            sample_id=entry["sample_id"],
            image_path=root / entry["image_path"],
            text=entry["fields"].get(text_field, "").strip(),
        )
        for entry in manifest.get("samples", [])
    ]
    samples = [s for s in samples if s.text]
    if not samples:
        raise EmptyField(f"no sample has a non-empty {text_field!r}")
    return samples


def _to_tensor(img: Image.Image) -> torch.Tensor:
    arr = np.asarray(img, dtype=np.float32) / 255.0
    arr = (arr - np.array(NORM_MEAN, dtype=np.float32)) / np.array(NORM_STD, dtype=np.float32)
    return torch.from_numpy(arr).permute(2, 0, 1)


def load_image(path: str | Path, image_size: int, augment: bool = False,
               rng: random.Random | None = None) -> torch.Tensor:
    """Decode, optionally augment (random-resized-crop + horizontal flip),
    resize to the square model input, and normalize."""
    img = Image.open(path).convert("RGB")
    if augment:
        rng = rng or random
        w, h = img.size
        scale = rng.uniform(0.5, 1.0)
        crop_w = max(1, int(w * scale ** 0.5))
        crop_h = max(1, int(h * scale ** 0.5))
        left = rng.randint(0, w - crop_w)
        top = rng.randint(0, h - crop_h)
        img = img.crop((left, top, left + crop_w, top + crop_h))
        if rng.random() < 0.5:
            img = img.transpose(Image.FLIP_LEFT_RIGHT)
    img = img.resize((image_size, image_size), Image.BILINEAR)
    return _to_tensor(img)


def batches(items: list, batch_size: int):
    for i in range(0, len(items), batch_size):
        yield items[i:i + batch_size]
