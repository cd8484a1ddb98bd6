"""Multi-head windowed attention with learned relative position bias.

One module covers every attention arrangement in the network:

- self-attention: q = k = v source;
- cross-attention: q,k from one modality, v from the other — softmax(QK^T/√d + B)V;
- overlapping cross-attention: M×M query windows attending over enlarged
  Mo×Mo key/value windows, Mo = (1+overlap)·M, extracted with zero padding.

Projections are applied on the full token grid before windowing, so the
overlapping and tiled extraction paths see identical per-token values.
"""

from __future__ import annotations

import numpy as np

from gdnet.numcore import Linear, Module, ops
from gdnet.numcore.module import trunc_normal
from gdnet.numcore.rng import SeededRng
from gdnet.numcore.tensor import Parameter, Tensor

from gdnet.layers.windows import (
    WindowBatch,
    shift_attention_mask,
    window_partition,
    window_reverse,
)


def _relative_index(m_q: int, m_kv: int) -> np.ndarray:
    """Map each (query pos, key pos) pair to a row of the bias table.

    Key windows may be larger than query windows; they are centred, extending
    d = (m_kv − m_q)/2 beyond the query window on each side.  Displacements
    along one axis then span m_q + m_kv − 1 distinct values.
    """
    if (m_kv - m_q) % 2:
        raise ValueError(f"key window {m_kv} minus query window {m_q} must be even")
    d = (m_kv - m_q) // 2
    qy, qx = np.meshgrid(np.arange(m_q), np.arange(m_q), indexing="ij")
    ky, kx = np.meshgrid(np.arange(m_kv), np.arange(m_kv), indexing="ij")
    q = np.stack([qy.ravel(), qx.ravel()], axis=1)
    k = np.stack([ky.ravel() - d, kx.ravel() - d], axis=1)
    rel = q[:, None, :] - k[None, :, :] + (m_kv - 1 - d)
    size = m_q + m_kv - 1
    return (rel[..., 0] * size + rel[..., 1]).astype(np.int64)


class RelativePositionBias(Module):
    """Learnable bias over relative token displacements within a window pair."""

    def __init__(self, window_q: int, window_kv: int, heads: int, rng: SeededRng,
                 dtype=np.float32):
        super().__init__()
        self.window_q = window_q
        self.window_kv = window_kv
        self.heads = heads
        size = (window_q + window_kv - 1) ** 2
        self.table = Parameter(trunc_normal(rng, (size, heads)).astype(dtype))
        self.index = _relative_index(window_q, window_kv)

    def __call__(self) -> Tensor:
        """Bias of shape (heads, M_q², M_kv²), broadcast over window batches."""
        nq, nk = self.index.shape
        flat = ops.gather_rows(self.table, self.index.ravel())
        return ops.transpose(ops.reshape(flat, (nq, nk, self.heads)), (2, 0, 1))


def multihead_attention(q: Tensor, k: Tensor, v: Tensor, heads: int, bias: Tensor,
                        mask: np.ndarray | None = None) -> Tensor:
    """Scaled dot-product over token windows: softmax(QK^T/√d_k + B)V per head.

    q: (B, Nq, C); k, v: (B, Nk, C); bias: (heads, Nq, Nk).  `mask`, when
    given, is an additive (numWindows, Nq, Nk) array with B a multiple of
    numWindows (batch-major over samples).
    """
    b, nq, c = q.shape
    _, nk, ck = k.shape
    if c % heads:
        raise ValueError(f"embed dim {c} not divisible by {heads} heads")
    if ck != c or v.shape[2] != c:
        raise ValueError("query/key/value channel widths differ")
    if v.shape[1] != nk:
        raise ValueError(f"key tokens {nk} != value tokens {v.shape[1]}")
    hd = c // heads
    qh = ops.transpose(ops.reshape(q, (b, nq, heads, hd)), (0, 2, 1, 3))
    kh = ops.transpose(ops.reshape(k, (b, nk, heads, hd)), (0, 2, 3, 1))
    vh = ops.transpose(ops.reshape(v, (b, nk, heads, hd)), (0, 2, 1, 3))
    logits = ops.matmul_batched(qh * float(hd) ** -0.5, kh)
    logits = ops.add(logits, bias)
    if mask is not None:
        nw = mask.shape[0]
        if b % nw:
            raise ValueError(f"batch {b} not a multiple of {nw} masked windows")
        add = Tensor(mask[None, :, None, :, :].astype(logits.data.dtype))
        logits = ops.reshape(logits, (b // nw, nw, heads, nq, nk))
        logits = ops.reshape(ops.add(logits, add), (b, heads, nq, nk))
    attn = ops.softmax_lastdim(logits)
    out = ops.matmul_batched(attn, vh)
    return ops.reshape(ops.transpose(out, (0, 2, 1, 3)), (b, nq, c))


def overlap_tokens(x: Tensor, window: int, window_kv: int) -> Tensor:
    """Extract zero-padded Mo×Mo windows on an M-stride grid as flat tokens.

    Output (N·numWindows, Mo², C) with numWindows matching the plain tiling,
    so each enlarged window is centred on the corresponding query window.
    """
    n, c, h, w = x.shape
    pad = (window_kv - window) // 2
    if window_kv == window:
        return window_partition(x, window).windows
    t = ops.extract_windows(x, kernel=window_kv, stride=window, pad=pad)
    nw = t.shape[1]
    return ops.reshape(t, (n * nw, window_kv * window_kv, c))


def _project_map(lin: Linear, x: Tensor) -> Tensor:
    """Apply a per-token affine map to an N×C×H×W feature map."""
    t = ops.transpose(x, (0, 2, 3, 1))
    return ops.transpose(lin(t), (0, 3, 1, 2))


class WindowAttention(Module):
    """Windowed multi-head attention over N×C×H×W maps.

    Queries always use plain M×M tiling; keys/values use tiling when
    overlap_ratio is 0 and centred zero-padded Mo×Mo windows otherwise.
    Shifted windows (self/cross) are supported only in the non-overlapping
    form, with the standard additive wrap mask.
    """

    def __init__(self, dim: int, heads: int, window: int, rng: SeededRng, *,
                 overlap_ratio: float = 0.0, dtype=np.float32):
        super().__init__()
        if dim % heads:
            raise ValueError(f"embed dim {dim} not divisible by {heads} heads")
        mo_f = (1.0 + overlap_ratio) * window
        mo = round(mo_f)
        if abs(mo_f - mo) > 1e-9:
            raise ValueError(
                f"overlap ratio {overlap_ratio} gives non-integral key window {mo_f}"
            )
        if (mo - window) % 2:
            raise ValueError(f"key window {mo} minus query window {window} must be even")
        self.dim = dim
        self.heads = heads
        self.window = window
        self.window_kv = mo
        self.wq = Linear(dim, dim, rng.child("wq"), dtype=dtype)
        self.wk = Linear(dim, dim, rng.child("wk"), dtype=dtype)
        self.wv = Linear(dim, dim, rng.child("wv"), dtype=dtype)
        self.proj = Linear(dim, dim, rng.child("proj"), dtype=dtype)
        self.bias = RelativePositionBias(window, mo, heads, rng.child("bias"), dtype=dtype)

    def __call__(self, q_map: Tensor, k_map: Tensor, v_map: Tensor,
                 shift: int = 0) -> Tensor:
        n, c, h, w = q_map.shape
        for name, m in (("key", k_map), ("value", v_map)):
            if m.shape != q_map.shape:
                raise ValueError(
                    f"{name} grid {m.shape} does not match query grid {q_map.shape}"
                )
        if c != self.dim:
            raise ValueError(f"feature width {c}, attention built for {self.dim}")
        if shift and self.window_kv != self.window:
            raise ValueError("shifted windows are not supported with overlapping keys")
        q_wb = window_partition(_project_map(self.wq, q_map), self.window, shift)
        k_full = _project_map(self.wk, k_map)
        v_full = _project_map(self.wv, v_map)
        if shift:
            k_full = ops.roll2d(k_full, -shift, -shift)
            v_full = ops.roll2d(v_full, -shift, -shift)
            mask = shift_attention_mask(h, w, self.window, shift)
        else:
            mask = None
        k_tok = overlap_tokens(k_full, self.window, self.window_kv)
        v_tok = overlap_tokens(v_full, self.window, self.window_kv)
        out = multihead_attention(q_wb.windows, k_tok, v_tok, self.heads,
                                  self.bias(), mask)
        out = self.proj(out)
        return window_reverse(q_wb.with_windows(out))
