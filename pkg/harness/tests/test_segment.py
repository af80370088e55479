"""Region proposals, mask NMS, delineated crops, language-guided filtering."""

import numpy as np
import pytest

from lidtrain.backbone import load_backbone
from lidtrain.config import SegParams, TrainConfig
from lidtrain.errors import MaskGeneratorMissing
from lidtrain.segment import (
    MaskProposal,
    RegionGrowGenerator,
    SamMaskGenerator,
    delineated_bbox,
    mask_iou,
    nms_masks,
    segment_language_guided,
)
from lidtrain.train import TransferModel


def scene_two_shapes(size: int = 96) -> np.ndarray:
    """Dark canvas with a red square (top-left) and a blue square (bottom-right)."""
    img = np.full((size, size, 3), 24, dtype=np.uint8)
    img[10:40, 10:40] = (220, 40, 40)
    img[56:86, 56:86] = (50, 70, 220)
    return img


@pytest.fixture(scope="module")
def model():
    backbone = load_backbone("tiny-random")
    config = TrainConfig(variant="CLIPAdapter", image_size=64, backbone="tiny-random")
    return TransferModel(config, backbone=backbone)


def test_region_grow_finds_both_shapes():
    image = scene_two_shapes()
    proposals = RegionGrowGenerator().generate(image, grid_points_per_side=16)
    red = np.zeros(image.shape[:2], dtype=bool)
    red[10:40, 10:40] = True
    blue = np.zeros_like(red)
    blue[56:86, 56:86] = True
    best_red = max(mask_iou(p.mask, red) for p in proposals)
    best_blue = max(mask_iou(p.mask, blue) for p in proposals)
    assert best_red > 0.99
    assert best_blue > 0.99


def test_region_grow_deduplicates_grid_points():
    # many grid points land inside the same uniform square; the region must
    # be proposed once, not once per seed point
    image = scene_two_shapes()
    proposals = RegionGrowGenerator().generate(image, grid_points_per_side=24)
    keys = [p.mask.tobytes() for p in proposals]
    assert len(keys) == len(set(keys))


def test_region_grow_respects_min_area():
    image = np.full((32, 32, 3), 24, dtype=np.uint8)
    image[5:7, 5:7] = (200, 0, 0)  # 4 px, below the 16 px floor
    proposals = RegionGrowGenerator(min_area=16).generate(image, 32)
    for p in proposals:
        assert p.area >= 16


def test_mask_iou_basics():
    a = np.zeros((4, 4), dtype=bool)
    a[:2] = True
    b = np.zeros_like(a)
    b[1:3] = True
    assert mask_iou(a, a) == 1.0
    assert abs(mask_iou(a, b) - 4 / 12) < 1e-9
    assert mask_iou(np.zeros_like(a), np.zeros_like(a)) == 0.0


def _disk(size, cy, cx, r):
    yy, xx = np.mgrid[:size, :size]
    return (yy - cy) ** 2 + (xx - cx) ** 2 <= r * r


def test_nms_enforces_pairwise_iou_bound():
    size = 64
    proposals = [
        MaskProposal(mask=_disk(size, 20 + dy, 20 + dx, 12), predicted_iou=0.9)
        for dy in range(0, 12, 2) for dx in range(0, 12, 2)
    ]
    for threshold in (0.1, 0.3, 0.7):
        kept = nms_masks(proposals, threshold)
        assert kept
        for i, a in enumerate(kept):
            for b in kept[i + 1:]:
                assert mask_iou(a.mask, b.mask) <= threshold


def test_nms_keeps_largest_first():
    big = MaskProposal(mask=_disk(64, 30, 30, 20), predicted_iou=0.5)
    small = MaskProposal(mask=_disk(64, 30, 30, 10), predicted_iou=0.9)
    kept = nms_masks([small, big], 0.2)
    assert kept[0].area == big.area


def test_delineated_bbox_contains_and_expands():
    mask = np.zeros((100, 100), dtype=bool)
    mask[40:60, 30:50] = True
    y0, x0, y1, x1 = delineated_bbox(mask, 1.2)
    assert y0 <= 40 and x0 <= 30 and y1 >= 60 and x1 >= 50
    assert (y1 - y0) == pytest.approx(20 * 1.2, abs=1)
    # clamping at the border
    edge = np.zeros((100, 100), dtype=bool)
    edge[0:20, 0:20] = True
    y0, x0, y1, x1 = delineated_bbox(edge, 2.0)
    assert y0 == 0 and x0 == 0 and y1 <= 100 and x1 <= 100


def test_segment_end_to_end_and_threshold_monotonicity(model):
    image = scene_two_shapes()
    accepted_counts = []
    for threshold in (0.0, 0.3, 0.5, 0.7, 1.0):
        params = SegParams(grid_points_per_side=12, nms_iou_threshold=0.5,
                           score_threshold=threshold)
        result = segment_language_guided(image, "a red square", params, model)
        assert result.masks  # proposals survive NMS
        for m in result.masks:
            assert 0.0 <= m.positive_score <= 1.0
        accepted_counts.append(len(result.accepted))
    # raising the acceptance threshold never accepts more masks
    assert all(a >= b for a, b in zip(accepted_counts, accepted_counts[1:]))
    assert accepted_counts[0] == len(result.masks)  # threshold 0 accepts all


def test_sam_generator_requires_weights(monkeypatch):
    monkeypatch.delenv(SamMaskGenerator.WEIGHTS_ENV, raising=False)
    with pytest.raises(MaskGeneratorMissing):
        SamMaskGenerator()
