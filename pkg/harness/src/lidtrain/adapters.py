"""Bottleneck adapter blocks blended with the frozen feature."""

from __future__ import annotations

import torch
from torch import nn

from .errors import DimensionMismatch

REDUCTION = 4


class AdapterBlock(nn.Module):
    """Down-project by 4, nonlinearity, up-project, mix with the input.

    output = alpha * up(act(down(f))) + (1 - alpha) * f

    With alpha = 0 the block is the exact identity; the output is affine in
    alpha for fixed input and weights.
    """

    def __init__(self, dim: int, alpha: float = 0.5):
        super().__init__()
        if dim % REDUCTION != 0:
            raise DimensionMismatch(f"dim {dim} not divisible by {REDUCTION}")
        self.dim = dim
        self.alpha = alpha
        self.down = nn.Linear(dim, dim // REDUCTION)
        self.act = nn.ReLU()
        self.up = nn.Linear(dim // REDUCTION, dim)

    def forward(self, f: torch.Tensor) -> torch.Tensor:
        return adapter_forward(f, self)


def adapter_forward(f: torch.Tensor, block: AdapterBlock) -> torch.Tensor:
    """Apply the mixing formula; raises on a feature-width mismatch."""
    if f.shape[-1] != block.dim:
        raise DimensionMismatch(
            f"feature width {f.shape[-1]} does not match adapter dim {block.dim}"
        )
    if block.alpha == 0.0:
        return f  # exact identity, no floating-point residue
    bottleneck = block.up(block.act(block.down(f)))
    return block.alpha * bottleneck + (1.0 - block.alpha) * f
