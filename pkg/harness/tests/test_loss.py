"""In-batch contrastive loss against independent closed-form oracles."""

import math

import numpy as np
import pytest
import torch
from hypothesis import given, settings
from hypothesis import strategies as st

from lidtrain.errors import DegenerateBatch, DimensionMismatch
from lidtrain.loss import in_batch_contrastive_loss, retrieval_topk


def numpy_contrastive(img: np.ndarray, txt: np.ndarray, scale: float) -> float:
    """Independent reference: explicit softmax cross-entropy both ways."""
    logits = scale * img @ txt.T
    n = logits.shape[0]

    def ce(mat):
        total = 0.0
        for i in range(n):
            row = mat[i] - mat[i].max()
            total += -(row[i] - math.log(np.exp(row).sum()))
        return total / n

    return (ce(logits) + ce(logits.T)) / 2


def test_single_pair_is_zero():
    e = torch.tensor([[1.0, 0.0]])
    loss = in_batch_contrastive_loss(e, e, 10.0)
    assert abs(loss.item()) < 1e-7


def test_orthonormal_pair_closed_form():
    # img_i == txt_i == e_i; with scale 1 each row's logits are (1, 0),
    # so the per-direction loss is ln(1 + e^{-1}).
    e = torch.eye(2)
    expected = math.log(1 + math.exp(-1))
    loss = in_batch_contrastive_loss(e, e, 1.0)
    assert abs(loss.item() - expected) < 1e-6


def test_three_basis_vectors_closed_form():
    e = torch.eye(3)
    expected = math.log(1 + 2 * math.exp(-1))
    loss = in_batch_contrastive_loss(e, e, 1.0)
    assert abs(loss.item() - expected) < 1e-6


@pytest.mark.parametrize("n,d,seed", [(2, 4, 0), (5, 8, 1), (16, 64, 2)])
def test_matches_numpy_oracle(n, d, seed):
    g = torch.Generator().manual_seed(seed)
    img = torch.nn.functional.normalize(torch.randn((n, d), generator=g), dim=-1)
    txt = torch.nn.functional.normalize(torch.randn((n, d), generator=g), dim=-1)
    got = in_batch_contrastive_loss(img, txt, 14.3).item()
    want = numpy_contrastive(img.numpy(), txt.numpy(), 14.3)
    assert abs(got - want) < 1e-5


def test_gradient_matches_finite_differences():
    # double precision so the central-difference noise floor sits well
    # below the relative tolerance
    g = torch.Generator().manual_seed(3)
    img = torch.randn((4, 8), generator=g, dtype=torch.float64, requires_grad=True)
    txt = torch.randn((4, 8), generator=g, dtype=torch.float64)
    loss = in_batch_contrastive_loss(img, txt, 5.0)
    loss.backward()
    eps = 1e-6
    with torch.no_grad():
        for i in range(4):
            for j in range(8):
                bump = torch.zeros_like(img)
                bump[i, j] = eps
                hi = in_batch_contrastive_loss(img + bump, txt, 5.0).item()
                lo = in_batch_contrastive_loss(img - bump, txt, 5.0).item()
                numeric = (hi - lo) / (2 * eps)
                analytic = img.grad[i, j].item()
                denom = max(abs(numeric), abs(analytic), 1e-9)
                assert abs(numeric - analytic) / denom < 1e-4


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=1, max_value=8), st.integers(min_value=0, max_value=999))
def test_joint_permutation_invariance(n, seed):
    # permuting pairs (same permutation on both sides) keeps the loss
    g = torch.Generator().manual_seed(seed)
    img = torch.nn.functional.normalize(torch.randn((n, 6), generator=g), dim=-1)
    txt = torch.nn.functional.normalize(torch.randn((n, 6), generator=g), dim=-1)
    perm = torch.randperm(n, generator=g)
    base = in_batch_contrastive_loss(img, txt, 7.0).item()
    permuted = in_batch_contrastive_loss(img[perm], txt[perm], 7.0).item()
    assert abs(base - permuted) < 1e-5


def test_empty_batch_raises():
    empty = torch.zeros((0, 4))
    with pytest.raises(DegenerateBatch):
        in_batch_contrastive_loss(empty, empty, 1.0)


def test_shape_mismatch_raises():
    with pytest.raises(DimensionMismatch):
        in_batch_contrastive_loss(torch.zeros((2, 4)), torch.zeros((3, 4)), 1.0)


def test_retrieval_topk_perfect_and_shuffled():
    e = torch.eye(4)
    assert retrieval_topk(e, e, k=1) == 1.0
    rolled = torch.roll(e, 1, dims=0)
    assert retrieval_topk(e, rolled, k=1) == 0.0
    assert retrieval_topk(e, rolled, k=4) == 1.0


def test_retrieval_empty_raises():
    with pytest.raises(DegenerateBatch):
        retrieval_topk(torch.zeros((0, 4)), torch.zeros((0, 4)))
