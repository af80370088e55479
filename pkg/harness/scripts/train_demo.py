"""Self-contained demo: synthesize a tiny manifest, train, and score.

Builds a small manifest of colored shapes (no external data needed), runs a
short CoOpIA training with a held-out fold, then scores one image against a
few prompts with the trained model.

Usage: python scripts/train_demo.py [workdir]
"""

from __future__ import annotations

import json
import sys
import tempfile
from pathlib import Path

from PIL import Image, ImageDraw

from lidtrain.config import TrainConfig
from lidtrain.data import kfold_split, load_image, load_manifest, manifest_samples
from lidtrain.scoring import score_prompts
from lidtrain.train import train

COLORS = {"red": (220, 40, 40), "green": (40, 200, 60), "blue": (50, 70, 220),
          "yellow": (230, 220, 50)}
SHAPES = ("circle", "square", "triangle", "ring")


def draw(shape: str, color: tuple, size: int = 64) -> Image.Image:
    img = Image.new("RGB", (size, size), (24, 24, 24))
    d = ImageDraw.Draw(img)
    lo, hi, mid = size // 4, 3 * size // 4, size // 2
    if shape == "circle":
        d.ellipse([lo, lo, hi, hi], fill=color)
    elif shape == "square":
        d.rectangle([lo, lo, hi, hi], fill=color)
    elif shape == "triangle":
        d.polygon([(mid, lo), (hi, hi), (lo, hi)], fill=color)
    else:
        d.ellipse([lo, lo, hi, hi], fill=color)
        d.ellipse([lo + 8, lo + 8, hi - 8, hi - 8], fill=(24, 24, 24))
    return img


def build_manifest(root: Path) -> Path:
    (root / "images").mkdir(parents=True, exist_ok=True)
    samples = []
    for color, rgb in COLORS.items():
        for shape in SHAPES:
            sid = f"{color}-{shape}"
            draw(shape, rgb).save(root / "images" / f"{sid}.png")
            samples.append({
                "sample_id": sid,
                "image_path": f"images/{sid}.png",
                "fields": {"label_long": f"{color} {shape} part"},
            })
    path = root / "manifest.json"
    path.write_text(json.dumps({"schema_version": 1, "samples": samples}))
    return path


def main() -> int:
    root = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(tempfile.mkdtemp())
    manifest = build_manifest(root)
    config = TrainConfig(variant="CoOpIA", epochs=5, batch_size=8,
                         eval_batch_size=16, image_size=64, lr=1.0,
                         warmup_epochs=1, warmup_lr=0.5, seed=7)
    samples = manifest_samples(load_manifest(manifest), root, "label_long")
    fold = kfold_split([s.sample_id for s in samples], k=4, seed=0)
    print(f"training on {len(samples)} samples ({root})")
    checkpoint, history = train(manifest, "label_long", config,
                                fold=fold, eval_fold=0, run_dir=root / "run")
    for entry in history:
        print(f"  epoch {entry.epoch}: loss={entry.train_loss:.4f} "
              f"top1={entry.val_top1:.3f}")

    model = checkpoint.build_model()
    image = load_image(root / "images" / "red-circle.png", config.image_size)
    prompts = [f"{c} circle part" for c in COLORS]
    print("prompt scores for red-circle.png:")
    for prompt, score in score_prompts(image, prompts, model):
        print(f"  {score:.3f}  {prompt}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
