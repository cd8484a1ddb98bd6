"""Transformer blocks assembled from windowed attention, LayerNorm, and MLPs.

All blocks take and return N×C×H×W feature maps.  LayerNorm acts per token
over channels, so maps are transposed to channel-last around each norm/MLP.

Residual wiring per block (zero-initialised output projections shown):

- STL:  x + MSA(LN(x)), then + MLP(LN(·))            → exact identity
- MGL:  m' = MCA(LN(m), t) + m; out = MLP(LN(m')) + m' + m   → 2·m
- GAL:  gated channel branch + cross-attention + thermal residual
- OMCL: stream + overlapping cross-attention queried by the fused feature
- OTL:  overlapping self-attention with the STL residual pattern
"""

from __future__ import annotations

import numpy as np

from gdnet.numcore import Conv2d, LayerNorm, Linear, Module, ops
from gdnet.numcore.rng import SeededRng
from gdnet.numcore.tensor import Tensor

from gdnet.layers.attention import WindowAttention

MGL_ROLES = ("agm", "mogm")


def _norm_map(norm: LayerNorm, x: Tensor) -> Tensor:
    """LayerNorm over channels of an N×C×H×W map."""
    t = ops.transpose(x, (0, 2, 3, 1))
    return ops.transpose(norm(t), (0, 3, 1, 2))


class Mlp(Module):
    """Two affine maps with GELU between; hidden width = ratio × dim."""

    def __init__(self, dim: int, rng: SeededRng, ratio: int = 2, dtype=np.float32):
        super().__init__()
        self.fc1 = Linear(dim, ratio * dim, rng.child("fc1"), dtype=dtype)
        self.fc2 = Linear(ratio * dim, dim, rng.child("fc2"), dtype=dtype)

    def __call__(self, x: Tensor) -> Tensor:
        return self.fc2(ops.gelu(self.fc1(x)))

    def on_map(self, x: Tensor) -> Tensor:
        t = ops.transpose(x, (0, 2, 3, 1))
        return ops.transpose(self(t), (0, 3, 1, 2))


class STL(Module):
    """Shifted-window self-attention block.

    x̂ = MSA(LN(x)) + x;  out = MLP(LN(x̂)) + x̂.  Consecutive STLs alternate
    shift 0 and window/2 so information crosses window borders.
    """

    def __init__(self, dim: int, heads: int, window: int, shift: int,
                 rng: SeededRng, dtype=np.float32):
        super().__init__()
        self.shift = shift
        self.norm1 = LayerNorm(dim, dtype=dtype)
        self.attn = WindowAttention(dim, heads, window, rng.child("attn"), dtype=dtype)
        self.norm2 = LayerNorm(dim, dtype=dtype)
        self.mlp = Mlp(dim, rng.child("mlp"), dtype=dtype)

    def __call__(self, x: Tensor) -> Tensor:
        y = _norm_map(self.norm1, x)
        x = ops.add(x, self.attn(y, y, y, shift=self.shift))
        return ops.add(x, self.mlp.on_map(_norm_map(self.norm2, x)))


class MGL(Module):
    """Cross-modal guidance block; `m` is the residual carrier.

    m' = MCA(LN(m), t) + m;  out = MLP(LN(m')) + m' + m  (double residual, so
    zeroed attention/MLP outputs give exactly 2·m).

    role "agm":  queries/keys from the thermal map t, values from LN(m);
    role "mogm": queries/keys from LN(m) (optical-fused), values from t.
    """

    def __init__(self, dim: int, heads: int, window: int, role: str,
                 rng: SeededRng, shift: int = 0, dtype=np.float32):
        super().__init__()
        if role not in MGL_ROLES:
            raise ValueError(f"role must be one of {MGL_ROLES}, got {role!r}")
        self.role = role
        self.shift = shift
        self.norm1 = LayerNorm(dim, dtype=dtype)
        self.attn = WindowAttention(dim, heads, window, rng.child("attn"), dtype=dtype)
        self.norm2 = LayerNorm(dim, dtype=dtype)
        self.mlp = Mlp(dim, rng.child("mlp"), dtype=dtype)

    def __call__(self, m: Tensor, t: Tensor) -> Tensor:
        if m.shape != t.shape:
            raise ValueError(f"carrier grid {m.shape} does not match guide {t.shape}")
        mn = _norm_map(self.norm1, m)
        if self.role == "agm":
            att = self.attn(t, t, mn, shift=self.shift)
        else:
            att = self.attn(mn, mn, t, shift=self.shift)
        m1 = ops.add(att, m)
        out = self.mlp.on_map(_norm_map(self.norm2, m1))
        return ops.add(ops.add(out, m1), m)


class GAL(Module):
    """Gated cross-attention block for haze-aware guidance.

    z_ln = LN(z);  gab = sigmoid(Conv1×1(gap(z_ln))) · z_ln;
    z' = MCA(LN(z_ln), t) + gab + t;  out = MLP(LN(z')) + z' + z_ln.
    Queries/keys come from the thermal map, values from the optical stream.
    """

    def __init__(self, dim: int, heads: int, window: int, rng: SeededRng,
                 shift: int = 0, dtype=np.float32):
        super().__init__()
        self.shift = shift
        self.norm1 = LayerNorm(dim, dtype=dtype)
        self.gate = Conv2d(dim, dim, 1, rng.child("gate"), dtype=dtype)
        self.norm2 = LayerNorm(dim, dtype=dtype)
        self.attn = WindowAttention(dim, heads, window, rng.child("attn"), dtype=dtype)
        self.norm3 = LayerNorm(dim, dtype=dtype)
        self.mlp = Mlp(dim, rng.child("mlp"), dtype=dtype)

    def gate_map(self, z_ln: Tensor) -> Tensor:
        """Per-channel gate in (0,1) from the pooled descriptor."""
        return ops.sigmoid(self.gate(ops.global_avg_pool(z_ln)))

    def __call__(self, z: Tensor, t: Tensor) -> Tensor:
        if z.shape != t.shape:
            raise ValueError(f"stream grid {z.shape} does not match guide {t.shape}")
        z_ln = _norm_map(self.norm1, z)
        gab = ops.mul(self.gate_map(z_ln), z_ln)
        zn = _norm_map(self.norm2, z_ln)
        att = self.attn(t, t, zn, shift=self.shift)
        zl = ops.add(ops.add(att, gab), t)
        out = self.mlp.on_map(_norm_map(self.norm3, zl))
        return ops.add(ops.add(out, zl), z_ln)


class OMCL(Module):
    """Overlapping cross-attention block fusing the optical feature into the stream.

    Queries come from the fused optical map s (plain windows); keys/values
    from LN(x) over enlarged overlapping windows.  The stream x carries the
    residuals:  x̂ = OMCA(s, LN(x)) + x;  out = MLP(LN(x̂)) + x̂.
    """

    def __init__(self, dim: int, heads: int, window: int, overlap_ratio: float,
                 rng: SeededRng, dtype=np.float32):
        super().__init__()
        self.norm1 = LayerNorm(dim, dtype=dtype)
        self.attn = WindowAttention(dim, heads, window, rng.child("attn"),
                                    overlap_ratio=overlap_ratio, dtype=dtype)
        self.norm2 = LayerNorm(dim, dtype=dtype)
        self.mlp = Mlp(dim, rng.child("mlp"), dtype=dtype)

    def __call__(self, x: Tensor, s: Tensor) -> Tensor:
        if x.shape != s.shape:
            raise ValueError(f"stream grid {x.shape} does not match query grid {s.shape}")
        xn = _norm_map(self.norm1, x)
        x = ops.add(x, self.attn(s, xn, xn))
        return ops.add(x, self.mlp.on_map(_norm_map(self.norm2, x)))


class OTL(Module):
    """Overlapping self-attention block: single-modality queries over enlarged
    key/value windows, with the STL residual pattern."""

    def __init__(self, dim: int, heads: int, window: int, overlap_ratio: float,
                 rng: SeededRng, dtype=np.float32):
        super().__init__()
        self.norm1 = LayerNorm(dim, dtype=dtype)
        self.attn = WindowAttention(dim, heads, window, rng.child("attn"),
                                    overlap_ratio=overlap_ratio, dtype=dtype)
        self.norm2 = LayerNorm(dim, dtype=dtype)
        self.mlp = Mlp(dim, rng.child("mlp"), dtype=dtype)

    def __call__(self, x: Tensor) -> Tensor:
        y = _norm_map(self.norm1, x)
        x = ops.add(x, self.attn(y, y, y))
        return ops.add(x, self.mlp.on_map(_norm_map(self.norm2, x)))
