"""Differentiable neural-network primitives.

All spatial ops take NCHW tensors.  Convolution and window extraction are
written as per-offset slice loops over the kernel footprint: each iteration
is a fully vectorised copy, and the backward pass scatter-adds through the
same slices, so no gather/scatter indexing is needed.
"""

from __future__ import annotations

import numpy as np

from gdnet.numcore.tensor import Tensor, _record, _unbroadcast

# re-exported so callers can reach the whole op surface from one module
from gdnet.numcore.tensor import (  # noqa: F401
    add,
    sub,
    mul,
    pow_const,
    absolute,
    reshape,
    transpose,
    concat,
    slice_axis,
    roll2d,
    sum_all,
    mean_all,
    matmul_batched,
)


# -- convolution ----------------------------------------------------------------


def conv2d(x: Tensor, w: Tensor, b: Tensor | None = None, stride: int = 1,
           pad: int | None = None) -> Tensor:
    """2-d convolution (cross-correlation) over NCHW input.

    Args:
        x: input, shape (N, InC, H, W).
        w: kernel, shape (OutC, InC, kh, kw) with kh == kw.
        b: optional bias, shape (OutC,).
        stride: spatial stride.
        pad: zero padding per side; defaults to kernel//2 (same-size at stride 1).
    """
    n, cin, h, wdim = x.data.shape
    cout, cin_w, kh, kw = w.data.shape
    if kh != kw:
        raise ValueError(f"square kernels only, got {kh}x{kw}")
    if cin != cin_w:
        raise ValueError(f"conv2d channel mismatch: input has {cin}, kernel expects {cin_w}")
    if pad is None:
        pad = kh // 2
    oh = (h + 2 * pad - kh) // stride + 1
    ow = (wdim + 2 * pad - kw) // stride + 1
    if oh <= 0 or ow <= 0:
        raise ValueError(f"conv2d output would be empty: input {h}x{wdim}, kernel {kh}, pad {pad}")

    xp = np.pad(x.data, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    cols = np.empty((n, cin, kh, kw, oh, ow), dtype=x.data.dtype)
    for i in range(kh):
        for j in range(kw):
            cols[:, :, i, j] = xp[:, :, i:i + stride * oh:stride, j:j + stride * ow:stride]
    cols2 = cols.reshape(n, cin * kh * kw, oh * ow)
    w2 = w.data.reshape(cout, cin * kh * kw)
    out_data = np.matmul(w2, cols2)  # (n, cout, oh*ow)
    if b is not None:
        out_data = out_data + b.data[:, None]
    out = Tensor(out_data.reshape(n, cout, oh, ow))

    parents = (x, w) if b is None else (x, w, b)

    def _bw():
        g2 = out.grad.reshape(n, cout, oh * ow)
        if b is not None and b.requires_grad:
            b._accumulate(g2.sum(axis=(0, 2)))
        if w.requires_grad:
            gw = np.matmul(g2, cols2.transpose(0, 2, 1)).sum(axis=0)
            w._accumulate(gw.reshape(w.data.shape))
        if x.requires_grad:
            gcols = np.matmul(w2.T, g2)  # (n, cin*kh*kw, oh*ow)
            gcols = gcols.reshape(n, cin, kh, kw, oh, ow)
            gxp = np.zeros_like(xp)
            for i in range(kh):
                for j in range(kw):
                    gxp[:, :, i:i + stride * oh:stride, j:j + stride * ow:stride] += gcols[:, :, i, j]
            if pad:
                gxp = gxp[:, :, pad:-pad, pad:-pad]
            x._accumulate(gxp)

    return _record(out, parents, _bw)


def extract_windows(x: Tensor, kernel: int, stride: int, pad: int) -> Tensor:
    """Unfold NCHW into per-window token blocks.

    Returns shape (N, nH*nW, kernel*kernel, C) with windows in row-major
    scan order and tokens in row-major order inside each window.  Padding
    is zero-fill.  Inverse of the slicing is a scatter-add, so overlapping
    windows backpropagate correctly.
    """
    n, c, h, w = x.data.shape
    nh = (h + 2 * pad - kernel) // stride + 1
    nw = (w + 2 * pad - kernel) // stride + 1
    if nh <= 0 or nw <= 0:
        raise ValueError(f"extract_windows: no windows fit {h}x{w} with kernel {kernel}")
    xp = np.pad(x.data, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    buf = np.empty((n, c, kernel, kernel, nh, nw), dtype=x.data.dtype)
    for i in range(kernel):
        for j in range(kernel):
            buf[:, :, i, j] = xp[:, :, i:i + stride * nh:stride, j:j + stride * nw:stride]
    out = Tensor(
        buf.transpose(0, 4, 5, 2, 3, 1).reshape(n, nh * nw, kernel * kernel, c).copy()
    )

    def _bw():
        g = out.grad.reshape(n, nh, nw, kernel, kernel, c).transpose(0, 5, 3, 4, 1, 2)
        gxp = np.zeros_like(xp)
        for i in range(kernel):
            for j in range(kernel):
                gxp[:, :, i:i + stride * nh:stride, j:j + stride * nw:stride] += g[:, :, i, j]
        if pad:
            gxp = gxp[:, :, pad:-pad, pad:-pad]
        x._accumulate(gxp)

    return _record(out, (x,), _bw)


# -- normalisation and attention pieces ------------------------------------------


def softmax_lastdim(x: Tensor) -> Tensor:
    """Softmax over the last dim, computed with max subtraction."""
    shifted = x.data - x.data.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    s = e / e.sum(axis=-1, keepdims=True)
    out = Tensor(s)

    def _bw():
        g = out.grad
        dot = (g * s).sum(axis=-1, keepdims=True)
        x._accumulate(s * (g - dot))

    return _record(out, (x,), _bw)


def layer_norm(x: Tensor, gamma: Tensor, beta: Tensor, eps: float = 1e-5) -> Tensor:
    """Normalise each token over its channel (last) dim, then affine."""
    mu = x.data.mean(axis=-1, keepdims=True)
    xc = x.data - mu
    var = (xc * xc).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = xc * inv
    out = Tensor(gamma.data * xhat + beta.data)
    c = x.data.shape[-1]
    lead = tuple(range(x.data.ndim - 1))

    def _bw():
        g = out.grad
        if beta.requires_grad:
            beta._accumulate(g.sum(axis=lead))
        if gamma.requires_grad:
            gamma._accumulate((g * xhat).sum(axis=lead))
        if x.requires_grad:
            dxhat = g * gamma.data
            term = dxhat - dxhat.mean(axis=-1, keepdims=True) \
                - xhat * (dxhat * xhat).mean(axis=-1, keepdims=True)
            x._accumulate(inv * term)

    return _record(out, (x, gamma, beta), _bw)


# -- activations ------------------------------------------------------------------


def leaky_relu(x: Tensor, slope: float = 0.2) -> Tensor:
    out = Tensor(np.where(x.data >= 0, x.data, slope * x.data))

    def _bw():
        x._accumulate(out.grad * np.where(x.data >= 0, 1.0, slope).astype(x.data.dtype))

    return _record(out, (x,), _bw)


def sigmoid(x: Tensor) -> Tensor:
    s = 1.0 / (1.0 + np.exp(-x.data))
    out = Tensor(s)

    def _bw():
        x._accumulate(out.grad * s * (1.0 - s))

    return _record(out, (x,), _bw)


_GELU_C = np.sqrt(2.0 / np.pi)


def gelu(x: Tensor) -> Tensor:
    """Tanh-form GELU (keeps the package free of special-function deps)."""
    d = x.data
    inner = _GELU_C * (d + 0.044715 * d ** 3)
    t = np.tanh(inner)
    out = Tensor(0.5 * d * (1.0 + t))

    def _bw():
        dinner = _GELU_C * (1.0 + 3 * 0.044715 * d ** 2)
        grad = 0.5 * (1.0 + t) + 0.5 * d * (1.0 - t * t) * dinner
        x._accumulate(out.grad * grad)

    return _record(out, (x,), _bw)


# -- pooling ----------------------------------------------------------------------


def global_avg_pool(x: Tensor) -> Tensor:
    """NCHW -> NxCx1x1 spatial mean."""
    n, c, h, w = x.data.shape
    out = Tensor(x.data.mean(axis=(2, 3), keepdims=True))

    def _bw():
        x._accumulate(np.broadcast_to(out.grad / (h * w), x.data.shape))

    return _record(out, (x,), _bw)


def channel_avg_pool(x: Tensor) -> Tensor:
    """NCHW -> Nx1xHxW mean over channels."""
    c = x.data.shape[1]
    out = Tensor(x.data.mean(axis=1, keepdims=True))

    def _bw():
        x._accumulate(np.broadcast_to(out.grad / c, x.data.shape))

    return _record(out, (x,), _bw)


def channel_max_pool(x: Tensor) -> Tensor:
    """NCHW -> Nx1xHxW max over channels; gradient goes to the first argmax."""
    idx = x.data.argmax(axis=1)[:, None]  # first index on ties
    out = Tensor(x.data.max(axis=1, keepdims=True))

    def _bw():
        g = np.zeros_like(x.data)
        np.put_along_axis(g, idx, out.grad, axis=1)
        x._accumulate(g)

    return _record(out, (x,), _bw)


# -- pixel shuffle ------------------------------------------------------------------


def pixel_shuffle(x: Tensor, r: int) -> Tensor:
    """Rearrange (N, C*r^2, H, W) -> (N, C, H*r, W*r).

    out[n, c, h*r + a, w*r + b] = in[n, c*r^2 + a*r + b, h, w]
    """
    n, crr, h, w = x.data.shape
    if crr % (r * r) != 0:
        raise ValueError(f"pixel_shuffle: {crr} channels not divisible by r^2={r * r}")
    c = crr // (r * r)
    out = Tensor(
        x.data.reshape(n, c, r, r, h, w)
        .transpose(0, 1, 4, 2, 5, 3)
        .reshape(n, c, h * r, w * r)
        .copy()
    )

    def _bw():
        g = (
            out.grad.reshape(n, c, h, r, w, r)
            .transpose(0, 1, 3, 5, 2, 4)
            .reshape(n, crr, h, w)
        )
        x._accumulate(g)

    return _record(out, (x,), _bw)


# -- table lookup --------------------------------------------------------------------


def gather_rows(table: Tensor, index: np.ndarray) -> Tensor:
    """Select rows of a 2-d table by integer index array.

    Output shape is index.shape + (table.shape[1],).  Used for relative
    position bias lookup; backward scatter-adds into the table.
    """
    index = np.asarray(index)
    out = Tensor(table.data[index])

    def _bw():
        g = np.zeros_like(table.data)
        np.add.at(g, index.reshape(-1), out.grad.reshape(-1, table.data.shape[1]))
        table._accumulate(g)

    return _record(out, (table,), _bw)
