"""Configuration dataclasses for training and evaluation runs."""

from __future__ import annotations

from dataclasses import dataclass, field

VARIANTS = ("CoOp", "CoOpIA", "CoOpIATA", "CLIPAdapter")

#: hand-written template used both for zero-shot prompts and to seed the
#: learnable context vectors
PROMPT_TEMPLATE = "a photo of an industrial product"


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters for one transfer-learning run.

    The backbone is always frozen; ``variant`` selects which parameter
    groups (prompt context, image adapter, text adapter) are trainable.
    """

    variant: str = "CoOpIA"
    batch_size: int = 64
    eval_batch_size: int = 32
    lr: float = 0.15
    warmup_epochs: int = 3
    warmup_lr: float = 1e-2
    weight_decay: float = 1e-3
    epochs: int = 10
    image_size: int = 224
    context_length: int = 10
    context_init: str = "template-words"  # or "random"
    alpha_image: float = 0.5
    alpha_text: float = 0.2
    seed: int = 0
    backbone: str = "tiny-random"

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}; one of {VARIANTS}")
        positive = ("batch_size", "eval_batch_size", "lr", "weight_decay",
                    "epochs", "image_size", "context_length")
        for name in positive:
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        for name in ("alpha_image", "alpha_text"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")

    @property
    def trains_context(self) -> bool:
        return self.variant in ("CoOp", "CoOpIA", "CoOpIATA")

    @property
    def trains_image_adapter(self) -> bool:
        return self.variant in ("CoOpIA", "CoOpIATA", "CLIPAdapter")

    @property
    def trains_text_adapter(self) -> bool:
        return self.variant in ("CoOpIATA", "CLIPAdapter")


@dataclass(frozen=True)
class PromptSet:
    """A single-slot template plus the values to fill it with."""

    template: str
    fill_values: tuple[str, ...]

    def __post_init__(self):
        if self.template.count("{}") != 1:
            raise ValueError("template must contain exactly one {} slot")
        if not self.fill_values:
            raise ValueError("fill_values must be non-empty")

    def render(self) -> list[str]:
        return [self.template.format(value) for value in self.fill_values]


@dataclass(frozen=True)
class SegParams:
    """Parameters of the language-guided segmentation procedure."""

    grid_points_per_side: int = 32
    nms_iou_threshold: float = 0.7
    crop_delineation: float = 1.2
    score_threshold: float = 0.7
    negative_prompt: str = ""

    def __post_init__(self):
        if self.grid_points_per_side < 1:
            raise ValueError("grid_points_per_side must be >= 1")
        if not 0.0 <= self.nms_iou_threshold <= 1.0:
            raise ValueError("nms_iou_threshold must lie in [0, 1]")
        if self.crop_delineation < 1.0:
            raise ValueError("crop_delineation must be >= 1")
        if not 0.0 <= self.score_threshold <= 1.0:
            raise ValueError("score_threshold must lie in [0, 1]")
