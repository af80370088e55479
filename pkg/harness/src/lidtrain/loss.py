"""Symmetric in-batch contrastive objective over paired embeddings."""

from __future__ import annotations

import torch
import torch.nn.functional as F

from .errors import DegenerateBatch, DimensionMismatch


def in_batch_contrastive_loss(img_embs: torch.Tensor, txt_embs: torch.Tensor,
                              logit_scale: torch.Tensor | float) -> torch.Tensor:
    """Mean of image-to-text and text-to-image cross-entropy.

    Row i of each input is a positive pair; the scaled cosine-similarity
    matrix provides the logits and the diagonal is the target. Inputs are
    expected L2-normalized (then cosine similarity is a plain dot product).
    """
    if img_embs.shape[0] == 0 or txt_embs.shape[0] == 0:
        raise DegenerateBatch("contrastive loss over an empty batch")
    if img_embs.shape != txt_embs.shape:
        raise DimensionMismatch(
            f"embedding shapes differ: {tuple(img_embs.shape)} vs {tuple(txt_embs.shape)}"
        )
    logits = logit_scale * img_embs @ txt_embs.t()
    targets = torch.arange(img_embs.shape[0], device=img_embs.device)
    loss_i2t = F.cross_entropy(logits, targets)
    loss_t2i = F.cross_entropy(logits.t(), targets)
    return (loss_i2t + loss_t2i) / 2


def retrieval_topk(img_embs: torch.Tensor, txt_embs: torch.Tensor,
                   k: int = 1) -> float:
    """In-batch retrieval accuracy: fraction of images whose matching text
    ranks within the top k among the batch's candidates."""
    if img_embs.shape[0] == 0:
        raise DegenerateBatch("retrieval over an empty batch")
    sims = img_embs @ txt_embs.t()
    k = min(k, sims.shape[1])
    topk = sims.topk(k, dim=1).indices
    targets = torch.arange(sims.shape[0], device=sims.device).unsqueeze(1)
    return (topk == targets).any(dim=1).float().mean().item()
