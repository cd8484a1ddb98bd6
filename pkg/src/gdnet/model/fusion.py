"""Spatial fusion of the three guidance features into one map."""

from __future__ import annotations

import numpy as np

from gdnet.numcore import Conv2d, Module, ops
from gdnet.numcore.rng import SeededRng
from gdnet.numcore.tensor import Tensor

from gdnet.model.config import GDNetConfig


class AFM(Module):
    """Attribute-aware fusion: per-pixel sigmoid weights over the branches.

    The concatenated branch features are pooled across channels (mean and
    max), a 3×3 conv maps the 2-plane descriptor to 3 attention maps, and the
    sigmoid-weighted sum of branches passes through a final 3×3 conv.  With
    the attention conv zeroed, every map is 0.5 and the output reduces to
    Conv(0.5·(f_n + f_l + f_f)).
    """

    def __init__(self, cfg: GDNetConfig, rng: SeededRng, dtype=np.float32):
        super().__init__()
        self.attn_conv = Conv2d(2, 3, 3, rng.child("attn"), dtype=dtype)
        self.out_conv = Conv2d(cfg.embed_dim, cfg.embed_dim, 3, rng.child("out"),
                               dtype=dtype)

    def attention_maps(self, f_n: Tensor, f_l: Tensor, f_f: Tensor) -> Tensor:
        f_optic = ops.concat([f_n, f_l, f_f], axis=1)
        pooled = ops.concat(
            [ops.channel_avg_pool(f_optic), ops.channel_max_pool(f_optic)], axis=1
        )
        return ops.sigmoid(self.attn_conv(pooled))

    def __call__(self, f_n: Tensor, f_l: Tensor, f_f: Tensor) -> Tensor:
        if not (f_n.shape == f_l.shape == f_f.shape):
            raise ValueError(
                f"branch shapes differ: {f_n.shape} / {f_l.shape} / {f_f.shape}"
            )
        maps = self.attention_maps(f_n, f_l, f_f)
        s = ops.mul(f_n, ops.slice_axis(maps, 1, 0, 1))
        s = ops.add(s, ops.mul(f_l, ops.slice_axis(maps, 1, 1, 2)))
        s = ops.add(s, ops.mul(f_f, ops.slice_axis(maps, 1, 2, 3)))
        return self.out_conv(s)
