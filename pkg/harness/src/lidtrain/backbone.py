"""Frozen dual-encoder backbones behind a small registry.

The real pretrained backbone ("clip-vit-b16") needs a local weight file and
raises :class:`BackboneMissing` when it is absent. "tiny-random" is a small
deterministic dual encoder used for tests and smoke runs: random-initialized
from a fixed seed, so it has no semantics of its own, but the full training
machinery (prompt context, adapters, contrastive loss) runs unchanged on
top of it.
"""

from __future__ import annotations

import hashlib
import os

import torch
from torch import nn

from .errors import BackboneMissing, EmptyLabel

#: environment variable pointing at a directory of pretrained weight files
WEIGHTS_DIR_ENV = "LIDTRAIN_WEIGHTS_DIR"


def tokenize(text: str, vocab_size: int) -> list[int]:
    """Deterministic word-level tokenization via stable hashing.

    Token ids are independent of process hash randomization; id 0 is
    reserved for padding, 1 for start, 2 for end.
    """
    tokens = []
    for word in text.lower().split():
        digest = hashlib.sha256(word.encode("utf-8")).digest()
        tokens.append(3 + int.from_bytes(digest[:4], "big") % (vocab_size - 3))
    return tokens


class DualEncoder(nn.Module):
    """Shared contract: image/text encoders into one embedding space.

    Subclasses expose ``width`` (joint embedding dimension), a frozen
    ``logit_scale``, ``encode_image(pixels)``, ``embed_tokens(ids)`` and
    ``encode_text_embeddings(seq)`` so callers can splice learnable context
    vectors into the token-embedding sequence before encoding.
    """

    width: int
    image_size: int

    def encode_image(self, pixels: torch.Tensor) -> torch.Tensor:
        raise NotImplementedError

    def embed_tokens(self, ids: torch.Tensor) -> torch.Tensor:
        raise NotImplementedError

    def encode_text_embeddings(self, seq: torch.Tensor) -> torch.Tensor:
        raise NotImplementedError

    def embed_text(self, text: str, device=None,
                   allow_empty: bool = False) -> torch.Tensor:
        """Token-embedding sequence for ``text`` (no start/end markers)."""
        ids = tokenize(text, self.vocab_size)
        if not ids:
            if not allow_empty:
                raise EmptyLabel(f"text {text!r} produced no tokens")
            return self.embed_tokens(torch.tensor([], dtype=torch.long, device=device))
        return self.embed_tokens(torch.tensor(ids, device=device))

    def state_hash(self) -> str:
        """Content hash of every backbone weight, for freeze checks."""
        digest = hashlib.sha256()
        for name, tensor in sorted(self.state_dict().items()):
            digest.update(name.encode())
            digest.update(tensor.detach().cpu().numpy().tobytes())
        return digest.hexdigest()


class TinyDualEncoder(DualEncoder):
    """Small random-initialized dual encoder (deterministic given seed)."""

    def __init__(self, width: int = 64, image_size: int = 64,
                 vocab_size: int = 4096, seed: int = 1234):
        super().__init__()
        self.width = width
        self.image_size = image_size
        self.vocab_size = vocab_size
        generator_state = torch.random.get_rng_state()
        torch.manual_seed(seed)
        try:
            self.visual = nn.Sequential(
                nn.Conv2d(3, 16, kernel_size=3, stride=2, padding=1),
                nn.ReLU(),
                nn.Conv2d(16, 32, kernel_size=3, stride=2, padding=1),
                nn.ReLU(),
                nn.AdaptiveAvgPool2d(1),
                nn.Flatten(),
                nn.Linear(32, width),
            )
            self.token_embedding = nn.Embedding(vocab_size, width)
            self.positional = nn.Parameter(torch.zeros(77, width))
            nn.init.normal_(self.positional, std=0.01)
            self.text_head = nn.Sequential(
                nn.Linear(width, width),
                nn.Tanh(),
                nn.Linear(width, width),
            )
            # log of the similarity multiplier, mirroring the usual CLIP
            # parameterization; exp(2.6593) ~= 14.3
            self.logit_scale = nn.Parameter(torch.tensor(2.6593))
        finally:
            torch.random.set_rng_state(generator_state)
        for p in self.parameters():
            p.requires_grad_(False)

    def encode_image(self, pixels: torch.Tensor) -> torch.Tensor:
        return self.visual(pixels)

    def embed_tokens(self, ids: torch.Tensor) -> torch.Tensor:
        return self.token_embedding(ids)

    def encode_text_embeddings(self, seq: torch.Tensor) -> torch.Tensor:
        """Encode a (length, width) or (batch, length, width) sequence."""
        if seq.dim() == 2:
            seq = seq.unsqueeze(0)
        length = seq.shape[1]
        pooled = (seq + self.positional[:length]).mean(dim=1)
        return self.text_head(pooled).squeeze(0)


class PretrainedClipB16(DualEncoder):
    """Adapter for real CLIP ViT-B/16 weights from a local file.

    Instantiating without the weight file present raises BackboneMissing;
    downloading weights is deliberately out of scope for the harness.
    """

    WEIGHTS_FILE = "clip-vit-b16.pt"

    def __init__(self):
        super().__init__()
        weights_dir = os.environ.get(WEIGHTS_DIR_ENV, "")
        path = os.path.join(weights_dir, self.WEIGHTS_FILE) if weights_dir else ""
        if not path or not os.path.exists(path):
            raise BackboneMissing(
                f"pretrained weights not found; place {self.WEIGHTS_FILE} in "
                f"${WEIGHTS_DIR_ENV} to use this backbone"
            )
        raise BackboneMissing("loading real CLIP weights is not implemented here")


_REGISTRY = {
    "tiny-random": TinyDualEncoder,
    "clip-vit-b16": PretrainedClipB16,
}


def load_backbone(name: str, **kwargs) -> DualEncoder:
    if name not in _REGISTRY:
        raise BackboneMissing(f"unknown backbone {name!r}; known: {sorted(_REGISTRY)}")
    return _REGISTRY[name](**kwargs)
