"""Learnable prompt context prepended to tokenized labels."""

from __future__ import annotations

import torch
from torch import nn

from .backbone import DualEncoder
from .config import PROMPT_TEMPLATE
from .errors import EmptyLabel


class PromptContext(nn.Module):
    """``c_n`` learnable vectors of the text encoder's embedding width.

    With ``init_source="template-words"`` the trailing vectors are seeded
    from the embeddings of the hand-written template, and any leading
    remainder is random; with ``"random"`` all vectors are random.
    """

    def __init__(self, backbone: DualEncoder, c_n: int = 10,
                 init_source: str = "template-words",
                 template: str = PROMPT_TEMPLATE, seed: int = 0):
        super().__init__()
        if init_source not in ("template-words", "random"):
            raise ValueError(f"unknown init_source {init_source!r}")
        self.c_n = c_n
        self.init_source = init_source
        generator = torch.Generator().manual_seed(seed)
        vectors = torch.randn((c_n, backbone.width), generator=generator) * 0.02
        if init_source == "template-words":
            with torch.no_grad():
                template_embs = backbone.embed_text(template)
            n = min(c_n, template_embs.shape[0])
            vectors[c_n - n:] = template_embs[-n:].detach()
        self.vectors = nn.Parameter(vectors)

    @property
    def template_vector_count(self) -> int:
        return self.c_n if self.init_source == "template-words" else 0


def build_text_input(label: str, ctx: PromptContext | None,
                     backbone: DualEncoder,
                     allow_empty: bool = False) -> torch.Tensor:
    """[start] + context vectors + embedded label tokens + [end].

    Label-token embeddings are detached constants; only the context vectors
    carry gradient. An empty label raises unless ``allow_empty`` (used for
    the empty negative prompt in segmentation scoring).
    """
    if not label.split() and not allow_empty:
        raise EmptyLabel("label is empty")
    device = next(backbone.parameters()).device
    label_embs = backbone.embed_text(label, device=device, allow_empty=True).detach()
    start = backbone.embed_tokens(torch.tensor([1], device=device)).detach()
    end = backbone.embed_tokens(torch.tensor([2], device=device)).detach()
    parts = [start]
    if ctx is not None:
        parts.append(ctx.vectors)
    parts.extend([label_embs, end])
    return torch.cat(parts, dim=0)
