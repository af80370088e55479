"""Learnable prompt context and text-input assembly."""

import pytest
import torch

from lidtrain.backbone import load_backbone
from lidtrain.config import PROMPT_TEMPLATE
from lidtrain.errors import EmptyLabel
from lidtrain.prompt import PromptContext, build_text_input


@pytest.fixture(scope="module")
def backbone():
    return load_backbone("tiny-random")


def test_shape_and_trainability(backbone):
    ctx = PromptContext(backbone, c_n=10)
    assert ctx.vectors.shape == (10, backbone.width)
    assert ctx.vectors.requires_grad


def test_template_words_seed_trailing_vectors(backbone):
    # the template has six words; with c_n=10 the last six vectors must
    # equal the template-word embeddings and the first four stay random
    ctx = PromptContext(backbone, c_n=10, init_source="template-words")
    template_embs = backbone.embed_text(PROMPT_TEMPLATE)
    assert len(PROMPT_TEMPLATE.split()) == 6
    assert torch.allclose(ctx.vectors[4:].detach(), template_embs)
    rand = PromptContext(backbone, c_n=10, init_source="random", seed=0)
    assert torch.allclose(ctx.vectors[:4].detach(), rand.vectors[:4].detach())
    assert not torch.allclose(ctx.vectors[4:].detach(), rand.vectors[4:].detach())


def test_short_context_takes_template_tail(backbone):
    ctx = PromptContext(backbone, c_n=3, init_source="template-words")
    template_embs = backbone.embed_text(PROMPT_TEMPLATE)
    assert torch.allclose(ctx.vectors.detach(), template_embs[-3:])


def test_random_init_is_seed_deterministic(backbone):
    a = PromptContext(backbone, c_n=5, init_source="random", seed=11)
    b = PromptContext(backbone, c_n=5, init_source="random", seed=11)
    c = PromptContext(backbone, c_n=5, init_source="random", seed=12)
    assert torch.equal(a.vectors, b.vectors)
    assert not torch.equal(a.vectors, c.vectors)


def test_unknown_init_source_rejected(backbone):
    with pytest.raises(ValueError):
        PromptContext(backbone, init_source="zeros")


def test_text_input_layout(backbone):
    ctx = PromptContext(backbone, c_n=4)
    seq = build_text_input("steel bracket", ctx, backbone)
    # [start] + 4 context + 2 label tokens + [end]
    assert seq.shape == (1 + 4 + 2 + 1, backbone.width)
    start = backbone.embed_tokens(torch.tensor([1]))
    end = backbone.embed_tokens(torch.tensor([2]))
    assert torch.equal(seq[0], start[0])
    assert torch.equal(seq[-1], end[0])
    assert torch.equal(seq[1:5], ctx.vectors)


def test_without_context(backbone):
    seq = build_text_input("bolt", None, backbone)
    assert seq.shape == (3, backbone.width)


def test_gradient_flows_only_through_context(backbone):
    ctx = PromptContext(backbone, c_n=4)
    seq = build_text_input("steel bracket", ctx, backbone)
    backbone.encode_text_embeddings(seq).sum().backward()
    assert ctx.vectors.grad is not None
    assert torch.any(ctx.vectors.grad != 0)
    assert backbone.token_embedding.weight.grad is None


def test_empty_label_raises_unless_allowed(backbone):
    with pytest.raises(EmptyLabel):
        build_text_input("   ", None, backbone)
    seq = build_text_input("", None, backbone, allow_empty=True)
    assert seq.shape == (2, backbone.width)  # just start + end
