"""Plain-ndarray image resampling: bicubic resize and Gaussian blur.

These run outside the autodiff tape; the degradation pipeline and the
evaluation baseline are data preparation, not learned computation.
"""

from __future__ import annotations

import numpy as np


def _keys_weight(t: np.ndarray, a: float = -0.5) -> np.ndarray:
    """Keys cubic convolution kernel."""
    t = np.abs(t)
    w = np.zeros_like(t)
    near = t <= 1
    far = (t > 1) & (t < 2)
    w[near] = (a + 2) * t[near] ** 3 - (a + 3) * t[near] ** 2 + 1
    w[far] = a * t[far] ** 3 - 5 * a * t[far] ** 2 + 8 * a * t[far] - 4 * a
    return w


def _resize_axis(img: np.ndarray, out_len: int, axis: int) -> np.ndarray:
    in_len = img.shape[axis]
    if out_len == in_len:
        return img
    ratio = out_len / in_len
    centers = (np.arange(out_len) + 0.5) / ratio - 0.5
    base = np.floor(centers).astype(int)
    frac = centers - base
    taps = np.stack([base - 1, base, base + 1, base + 2], axis=1)
    offsets = np.stack([1 + frac, frac, 1 - frac, 2 - frac], axis=1)
    weights = _keys_weight(offsets)
    weights /= weights.sum(axis=1, keepdims=True)  # exact partition of unity

    # Odd reflection about the border value: linear signals continue exactly,
    # so ramps survive a down/up round-trip losslessly.  Taps reach at most
    # two samples past either end for any scale.
    moved = np.moveaxis(img, axis, 0)
    pads = [(2, 2)] + [(0, 0)] * (moved.ndim - 1)
    padded = np.pad(moved, pads, mode="reflect", reflect_type="odd")
    gathered = padded[taps + 2]  # (out_len, 4, ...)
    wshape = (out_len, 4) + (1,) * (gathered.ndim - 2)
    res = (gathered * weights.reshape(wshape)).sum(axis=1)
    return np.moveaxis(res, 0, axis)


def bicubic_resize(img: np.ndarray, scale: float) -> np.ndarray:
    """Resample an image by `scale` with the Keys kernel (a = -0.5).

    Accepts (H, W) or (H, W, C) float arrays; borders reflect.  Output
    dims are round(input dims * scale).
    """
    img = np.asarray(img, dtype=np.float64)
    out_h = int(round(img.shape[0] * scale))
    out_w = int(round(img.shape[1] * scale))
    if out_h <= 0 or out_w <= 0:
        raise ValueError(f"bicubic_resize: target dims {out_h}x{out_w} not positive")
    if scale == 1.0:
        return img.copy()
    out = _resize_axis(img, out_h, 0)
    return _resize_axis(out, out_w, 1)


def gaussian_kernel1d(sigma: float, radius: int | None = None) -> np.ndarray:
    if radius is None:
        radius = max(1, int(round(3 * sigma)))
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-(x * x) / (2 * sigma * sigma))
    return k / k.sum()


def _conv1d_reflect(img: np.ndarray, kernel: np.ndarray, axis: int) -> np.ndarray:
    r = len(kernel) // 2
    pads = [(0, 0)] * img.ndim
    pads[axis] = (r, r)
    xp = np.pad(img, pads, mode="reflect")
    out = np.zeros_like(img)
    for t, w in enumerate(kernel):
        sl = [slice(None)] * img.ndim
        sl[axis] = slice(t, t + img.shape[axis])
        out += w * xp[tuple(sl)]
    return out


def gaussian_blur(img: np.ndarray, sigma: float, radius: int | None = None) -> np.ndarray:
    """Separable Gaussian blur over the first two (spatial) axes, reflect borders."""
    img = np.asarray(img, dtype=np.float64)
    k = gaussian_kernel1d(sigma, radius)
    out = _conv1d_reflect(img, k, axis=0)
    return _conv1d_reflect(out, k, axis=1)
