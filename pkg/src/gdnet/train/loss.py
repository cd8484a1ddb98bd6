"""Reconstruction objective."""

from __future__ import annotations

from gdnet.numcore import tensor
from gdnet.numcore.tensor import Tensor


def l1_loss(out: Tensor, gt: Tensor) -> Tensor:
    """Mean absolute difference between prediction and ground truth.

    The subgradient at exact ties is taken as zero, so identical tensors
    produce a zero loss with a zero gradient.
    """
    if out.shape != gt.shape:
        raise ValueError(f"loss shapes differ: {out.shape} vs {gt.shape}")
    return tensor.absolute(out - gt).mean()
