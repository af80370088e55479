"""Transfer-learning loop: frozen backbone, trainable context + adapters."""

from __future__ import annotations

import json
import logging
import math
import random
from dataclasses import asdict, dataclass
from pathlib import Path

import torch
import torch.nn.functional as F
from torch import nn

from .adapters import AdapterBlock
from .backbone import DualEncoder, load_backbone
from .config import PROMPT_TEMPLATE, TrainConfig
from .data import FoldSplit, batches, load_image, load_manifest, manifest_samples
from .loss import in_batch_contrastive_loss, retrieval_topk
from .prompt import PromptContext, build_text_input

logger = logging.getLogger(__name__)


class TransferModel(nn.Module):
    """Backbone plus the variant-selected trainable parts.

    The backbone stays frozen for every variant. CoOp-style variants carry
    learnable context vectors; adapter variants blend bottleneck blocks into
    the frozen image/text features before normalization.
    """

    def __init__(self, config: TrainConfig, backbone: DualEncoder | None = None):
        super().__init__()
        self.config = config
        self.backbone = backbone or load_backbone(config.backbone)
        width = self.backbone.width
        self.context = (
            PromptContext(self.backbone, c_n=config.context_length,
                          init_source=config.context_init, seed=config.seed)
            if config.trains_context else None
        )
        # without learnable context the hand-written template serves as the
        # textual prompt (zero-shot and adapter-only variants)
        self.prompt_prefix = None if self.context is not None else PROMPT_TEMPLATE
        self.image_adapter = (
            AdapterBlock(width, alpha=config.alpha_image)
            if config.trains_image_adapter else None
        )
        self.text_adapter = (
            AdapterBlock(width, alpha=config.alpha_text)
            if config.trains_text_adapter else None
        )
        torch.manual_seed(config.seed)
        for module in (self.image_adapter, self.text_adapter):
            if module is not None:
                nn.init.normal_(module.down.weight, std=0.02)
                nn.init.zeros_(module.down.bias)
                nn.init.normal_(module.up.weight, std=0.02)
                nn.init.zeros_(module.up.bias)

    def trainable_parameters(self) -> dict[str, nn.Parameter]:
        """Exactly the parameter set the variant declares trainable."""
        params: dict[str, nn.Parameter] = {}
        if self.context is not None:
            params["context.vectors"] = self.context.vectors
        for prefix, module in (("image_adapter", self.image_adapter),
                               ("text_adapter", self.text_adapter)):
            if module is not None:
                for name, p in module.named_parameters():
                    params[f"{prefix}.{name}"] = p
        return params

    def encode_images(self, pixels: torch.Tensor) -> torch.Tensor:
        feats = self.backbone.encode_image(pixels)
        if self.image_adapter is not None:
            feats = self.image_adapter(feats)
        return F.normalize(feats, dim=-1)

    def encode_texts(self, labels: list[str]) -> torch.Tensor:
        feats = []
        for label in labels:
            text = f"{self.prompt_prefix} {label}" if self.prompt_prefix else label
            seq = build_text_input(text, self.context, self.backbone, allow_empty=True)
            feats.append(self.backbone.encode_text_embeddings(seq))
        stacked = torch.stack(feats)
        if self.text_adapter is not None:
            stacked = self.text_adapter(stacked)
        return F.normalize(stacked, dim=-1)

    @property
    def logit_scale(self) -> torch.Tensor:
        return self.backbone.logit_scale.exp().detach()


def zero_shot_model(config: TrainConfig, backbone: DualEncoder | None = None) -> TransferModel:
    """Untrained reference: no context, no adapters, template prompts only."""
    zs = TrainConfig(**{**asdict(config), "variant": "CoOp"})
    model = TransferModel(zs, backbone=backbone)
    model.context = None
    model.prompt_prefix = PROMPT_TEMPLATE
    return model


@dataclass
class EpochMetrics:
    epoch: int
    lr: float
    train_loss: float
    val_top1: float | None
    val_top3: float | None

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


def _epoch_lr(config: TrainConfig, epoch: int) -> float:
    """Constant warmup, then cosine decay over the remaining epochs."""
    if epoch < config.warmup_epochs:
        return config.warmup_lr
    span = max(1, config.epochs - config.warmup_epochs)
    progress = (epoch - config.warmup_epochs) / span
    return config.lr * 0.5 * (1 + math.cos(math.pi * progress))


def evaluate(model: TransferModel, samples, config: TrainConfig) -> tuple[float, float]:
    """In-batch retrieval top-1/top-3 over eval-sized batches."""
    model.eval()
    top1, top3, n = 0.0, 0.0, 0
    with torch.no_grad():
        for batch in batches(samples, config.eval_batch_size):
            pixels = torch.stack(
                [load_image(s.image_path, config.image_size) for s in batch]
            )
            img = model.encode_images(pixels)
            txt = model.encode_texts([s.text for s in batch])
            top1 += retrieval_topk(img, txt, k=1) * len(batch)
            top3 += retrieval_topk(img, txt, k=3) * len(batch)
            n += len(batch)
    return top1 / n, top3 / n


def train(manifest_path: str | Path, field: str, config: TrainConfig,
          fold: FoldSplit | None = None, eval_fold: int = 0,
          run_dir: str | Path | None = None,
          backbone: DualEncoder | None = None) -> tuple["Checkpoint", list[EpochMetrics]]:
    """Optimize the variant's trainable parameters on one manifest field.

    With a fold split, training uses every fold except ``eval_fold`` and
    reports retrieval accuracy on the held-out one. Metrics stream to
    ``metrics.jsonl`` in the run directory when one is given.
    """
    manifest_path = Path(manifest_path)
    manifest = load_manifest(manifest_path)
    samples = manifest_samples(manifest, manifest_path.parent, field)
    if fold is not None:
        train_ids = set(fold.complement_ids(eval_fold))
        eval_ids = set(fold.fold_ids(eval_fold))
        train_samples = [s for s in samples if s.sample_id in train_ids]
        eval_samples = [s for s in samples if s.sample_id in eval_ids]
    else:
        train_samples, eval_samples = list(samples), []

    model = TransferModel(config, backbone=backbone)
    params = model.trainable_parameters()
    optimizer = torch.optim.Adadelta(params.values(), lr=config.warmup_lr,
                                     weight_decay=config.weight_decay)
    rng = random.Random(config.seed)
    scale = model.logit_scale

    history: list[EpochMetrics] = []
    metrics_file = None
    if run_dir is not None:
        run_dir = Path(run_dir)
        run_dir.mkdir(parents=True, exist_ok=True)
        metrics_file = (run_dir / "metrics.jsonl").open("w", encoding="utf-8")

    try:
        for epoch in range(config.epochs):
            lr = _epoch_lr(config, epoch)
            for group in optimizer.param_groups:
                group["lr"] = lr
            model.train()
            order = list(train_samples)
            rng.shuffle(order)
            total, count = 0.0, 0
            for batch in batches(order, config.batch_size):
                if len(batch) < 2:
                    continue  # a singleton batch has no negatives
                pixels = torch.stack(
                    [load_image(s.image_path, config.image_size, augment=True, rng=rng)
                     for s in batch]
                )
                img = model.encode_images(pixels)
                txt = model.encode_texts([s.text for s in batch])
                loss = in_batch_contrastive_loss(img, txt, scale)
                optimizer.zero_grad()
                loss.backward()
                optimizer.step()
                total += loss.item() * len(batch)
                count += len(batch)
            train_loss = total / max(count, 1)
            val_top1 = val_top3 = None
            if eval_samples:
                val_top1, val_top3 = evaluate(model, eval_samples, config)
            entry = EpochMetrics(epoch=epoch, lr=lr, train_loss=train_loss,
                                 val_top1=val_top1, val_top3=val_top3)
            history.append(entry)
            if metrics_file:
                metrics_file.write(entry.to_json() + "\n")
            logger.info("epoch %d: loss=%.4f top1=%s", epoch, train_loss, val_top1)
    finally:
        if metrics_file:
            metrics_file.close()

    checkpoint = Checkpoint.from_model(model)
    if run_dir is not None:
        checkpoint.save(Path(run_dir) / "checkpoint.pt")
    return checkpoint, history


@dataclass
class Checkpoint:
    """Trained parts only: context vectors and adapters, plus a config echo.

    The backbone is referenced by name, never serialized.
    """

    config: TrainConfig
    tensors: dict[str, torch.Tensor]

    @classmethod
    def from_model(cls, model: TransferModel) -> "Checkpoint":
        tensors = {name: p.detach().clone()
                   for name, p in model.trainable_parameters().items()}
        return cls(config=model.config, tensors=tensors)

    def save(self, path: str | Path) -> None:
        torch.save({"config": asdict(self.config), "tensors": self.tensors}, path)

    @classmethod
    def load(cls, path: str | Path) -> "Checkpoint":
        raw = torch.load(path, weights_only=True)
        return cls(config=TrainConfig(**raw["config"]), tensors=raw["tensors"])

    def build_model(self, backbone: DualEncoder | None = None) -> TransferModel:
        model = TransferModel(self.config, backbone=backbone)
        params = model.trainable_parameters()
        with torch.no_grad():
            for name, tensor in self.tensors.items():
                params[name].copy_(tensor)
        return model


def export_embeddings(checkpoint: Checkpoint | None, manifest_path: str | Path,
                      field: str, n: int | None = None, seed: int = 0,
                      config: TrainConfig | None = None,
                      backbone: DualEncoder | None = None) -> list[dict]:
    """(sample_id, image embedding, text embedding) rows, both unit-norm.

    A ``None`` checkpoint exports raw zero-shot backbone embeddings. Sample
    selection is deterministic given the seed.
    """
    if checkpoint is not None:
        model = checkpoint.build_model(backbone=backbone)
        cfg = checkpoint.config
    else:
        cfg = config or TrainConfig()
        model = zero_shot_model(cfg, backbone=backbone)
    manifest_path = Path(manifest_path)
    samples = manifest_samples(load_manifest(manifest_path), manifest_path.parent, field)
    samples = sorted(samples, key=lambda s: s.sample_id)
    if n is not None and n < len(samples):
        samples = random.Random(seed).sample(samples, n)
        samples.sort(key=lambda s: s.sample_id)
    rows = []
    model.eval()
    with torch.no_grad():
        for batch in batches(samples, cfg.eval_batch_size):
            pixels = torch.stack(
                [load_image(s.image_path, cfg.image_size) for s in batch]
            )
            img = model.encode_images(pixels)
            txt = model.encode_texts([s.text for s in batch])
            for sample, i_emb, t_emb in zip(batch, img, txt):
                rows.append({
                    "sample_id": sample.sample_id,
                    "image_embedding": i_emb.tolist(),
                    "text_embedding": t_emb.tolist(),
                })
    return rows
