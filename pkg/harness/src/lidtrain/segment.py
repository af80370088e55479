"""Language-guided segmentation: mask proposals, NMS, per-crop scoring.

Mask proposal is pluggable. The real generator wraps externally provided
weights and raises :class:`MaskGeneratorMissing` without them; the built-in
region-growing generator proposes masks from color-coherent regions around
a point grid and is good enough for synthetic fixture scenes and tests.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np
import torch
from PIL import Image

from .config import SegParams
from .data import _to_tensor
from .errors import MaskGeneratorMissing
from .scoring import score_prompts
from .train import TransferModel


@dataclass(frozen=True)
class MaskProposal:
    mask: np.ndarray  # bool (H, W)
    predicted_iou: float

    @property
    def area(self) -> int:
        return int(self.mask.sum())


@dataclass
class ScoredMask:
    mask: np.ndarray
    predicted_iou: float
    positive_score: float
    accepted: bool


@dataclass
class SegResult:
    masks: list[ScoredMask] = field(default_factory=list)

    @property
    def accepted(self) -> list[ScoredMask]:
        return [m for m in self.masks if m.accepted]


class RegionGrowGenerator:
    """Propose one color-coherent region per grid point (flood fill).

    ``tolerance`` is the maximum per-channel color distance to the seed
    pixel for a pixel to join the region.
    """

    def __init__(self, tolerance: float = 24.0, min_area: int = 16):
        self.tolerance = tolerance
        self.min_area = min_area

    def generate(self, image: np.ndarray, grid_points_per_side: int) -> list[MaskProposal]:
        h, w = image.shape[:2]
        pixels = image.astype(np.float32)
        proposals: list[MaskProposal] = []
        seen_keys: set[bytes] = set()
        ys = np.linspace(0, h - 1, grid_points_per_side).astype(int)
        xs = np.linspace(0, w - 1, grid_points_per_side).astype(int)
        for y in ys:
            for x in xs:
                seed = pixels[y, x]
                close = (np.abs(pixels - seed).max(axis=2) <= self.tolerance)
                mask = _flood(close, y, x)
                if mask.sum() < self.min_area:
                    continue
                key = mask.tobytes()
                if key in seen_keys:
                    continue
                seen_keys.add(key)
                # colour coherence as a crude stand-in for predicted IoU
                coherence = float(
                    1.0 - np.abs(pixels[mask] - seed).mean() / max(self.tolerance, 1e-6)
                )
                proposals.append(MaskProposal(mask=mask, predicted_iou=coherence))
        return proposals


def _flood(allowed: np.ndarray, y: int, x: int) -> np.ndarray:
    """4-connected flood fill over the boolean reachability map."""
    h, w = allowed.shape
    mask = np.zeros_like(allowed)
    if not allowed[y, x]:
        return mask
    stack = [(y, x)]
    mask[y, x] = True
    while stack:
        cy, cx = stack.pop()
        for ny, nx in ((cy - 1, cx), (cy + 1, cx), (cy, cx - 1), (cy, cx + 1)):
            if 0 <= ny < h and 0 <= nx < w and allowed[ny, nx] and not mask[ny, nx]:
                mask[ny, nx] = True
                stack.append((ny, nx))
    return mask


class SamMaskGenerator:
    """Adapter for externally provided promptable-segmentation weights."""

    WEIGHTS_ENV = "LIDTRAIN_SAM_WEIGHTS"

    def __init__(self):
        path = os.environ.get(self.WEIGHTS_ENV, "")
        if not path or not os.path.exists(path):
            raise MaskGeneratorMissing(
                f"mask-generator weights not found; set ${self.WEIGHTS_ENV}"
            )
        raise MaskGeneratorMissing("loading real mask-generator weights is out of scope")


def mask_iou(a: np.ndarray, b: np.ndarray) -> float:
    union = np.logical_or(a, b).sum()
    if union == 0:
        return 0.0
    return float(np.logical_and(a, b).sum() / union)


def nms_masks(proposals: list[MaskProposal], iou_threshold: float) -> list[MaskProposal]:
    """Greedy suppression, largest area first; kept masks have pairwise
    IoU <= the threshold."""
    ordered = sorted(proposals, key=lambda p: (-p.area, -p.predicted_iou))
    kept: list[MaskProposal] = []
    for proposal in ordered:
        if all(mask_iou(proposal.mask, k.mask) <= iou_threshold for k in kept):
            kept.append(proposal)
    return kept


def delineated_bbox(mask: np.ndarray, factor: float) -> tuple[int, int, int, int]:
    """Axis-aligned bbox expanded by ``factor`` and clamped to the image."""
    ys, xs = np.nonzero(mask)
    y0, y1 = ys.min(), ys.max() + 1
    x0, x1 = xs.min(), xs.max() + 1
    cy, cx = (y0 + y1) / 2, (x0 + x1) / 2
    half_h = (y1 - y0) / 2 * factor
    half_w = (x1 - x0) / 2 * factor
    h, w = mask.shape
    return (
        max(0, int(round(cy - half_h))),
        max(0, int(round(cx - half_w))),
        min(h, int(round(cy + half_h))),
        min(w, int(round(cx + half_w))),
    )


def _crop_tensor(image: np.ndarray, bbox: tuple[int, int, int, int],
                 image_size: int) -> torch.Tensor:
    y0, x0, y1, x1 = bbox
    crop = Image.fromarray(image[y0:y1, x0:x1])
    crop = crop.resize((image_size, image_size), Image.BILINEAR)
    return _to_tensor(crop)


def segment_language_guided(image: np.ndarray, prompt: str, params: SegParams,
                            model: TransferModel,
                            mask_generator=None) -> SegResult:
    """Grid proposals -> NMS -> per-mask crop classification vs the negative
    prompt -> threshold acceptance. Masks are ordered by area descending."""
    generator = mask_generator or RegionGrowGenerator()
    proposals = generator.generate(image, params.grid_points_per_side)
    kept = nms_masks(proposals, params.nms_iou_threshold)
    result = SegResult()
    for proposal in kept:
        bbox = delineated_bbox(proposal.mask, params.crop_delineation)
        crop = _crop_tensor(image, bbox, model.config.image_size)
        scores = score_prompts(crop, [prompt, params.negative_prompt], model)
        positive = scores[0][1]
        result.masks.append(ScoredMask(
            mask=proposal.mask,
            predicted_iou=proposal.predicted_iou,
            positive_score=positive,
            accepted=positive >= params.score_threshold,
        ))
    return result
