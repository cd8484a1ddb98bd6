"""Windowed attention primitives and transformer blocks."""

from gdnet.layers.attention import (
    RelativePositionBias,
    WindowAttention,
    multihead_attention,
    overlap_tokens,
)
from gdnet.layers.blocks import GAL, MGL, MGL_ROLES, OMCL, OTL, STL, Mlp
from gdnet.layers.windows import (
    WindowBatch,
    shift_attention_mask,
    window_partition,
    window_reverse,
)

__all__ = [
    "GAL",
    "MGL",
    "MGL_ROLES",
    "Mlp",
    "OMCL",
    "OTL",
    "RelativePositionBias",
    "STL",
    "WindowAttention",
    "WindowBatch",
    "multihead_attention",
    "overlap_tokens",
    "shift_attention_mask",
    "window_partition",
    "window_reverse",
]
