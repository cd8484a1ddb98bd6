"""Bayer mosaic/demosaic and the camera response curve.

Layout is RGGB: (0,0)=R, (0,1)=G, (1,0)=G, (1,1)=B.  Demosaicing is
bilinear interpolation of the missing samples; the raw frame is padded by
two pixels with mirror extension, which keeps the Bayer phase intact
(index -k reflects to +k, same parity) and makes constant images
round-trip exactly.
"""

from __future__ import annotations

import numpy as np

# bilinear interpolation stencils over a sparse color plane
_KERNEL_G = np.array([[0, 1, 0], [1, 4, 1], [0, 1, 0]], dtype=np.float64) / 4.0
_KERNEL_RB = np.array([[1, 2, 1], [2, 4, 2], [1, 2, 1]], dtype=np.float64) / 4.0


def crf(x: np.ndarray, direction: str) -> np.ndarray:
    """Gamma-2.2 response curve: 'inverse' maps to linear light (x^2.2),
    'forward' maps back to stored values (x^(1/2.2))."""
    x = np.clip(np.asarray(x, dtype=np.float64), 0.0, 1.0)
    if direction == "inverse":
        return x ** 2.2
    if direction == "forward":
        return x ** (1.0 / 2.2)
    raise ValueError(f"crf direction must be 'forward' or 'inverse', got {direction!r}")


def _check_even(img: np.ndarray):
    h, w = img.shape[:2]
    if h % 2 or w % 2:
        raise ValueError(f"Bayer ops need even dimensions, got {h}x{w}")


def bayer_mosaic(img: np.ndarray) -> np.ndarray:
    """Sample one channel per pixel from an (H, W, 3) image, RGGB tiling."""
    img = np.asarray(img, dtype=np.float64)
    _check_even(img)
    raw = np.empty(img.shape[:2], dtype=np.float64)
    raw[0::2, 0::2] = img[0::2, 0::2, 0]
    raw[0::2, 1::2] = img[0::2, 1::2, 1]
    raw[1::2, 0::2] = img[1::2, 0::2, 1]
    raw[1::2, 1::2] = img[1::2, 1::2, 2]
    return raw


def _site_mask(shape, phases) -> np.ndarray:
    m = np.zeros(shape, dtype=np.float64)
    for (pi, pj) in phases:
        m[pi::2, pj::2] = 1.0
    return m


def _stencil_fill(sparse: np.ndarray, kernel: np.ndarray, h: int, w: int) -> np.ndarray:
    """3x3 correlation of a (H+4, W+4) sparse plane, evaluated on the core."""
    out = np.zeros((h, w), dtype=np.float64)
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            k = kernel[di + 1, dj + 1]
            if k:
                out += k * sparse[2 + di:2 + di + h, 2 + dj:2 + dj + w]
    return out


def bayer_demosaic(raw: np.ndarray) -> np.ndarray:
    """Bilinear reconstruction of an RGGB raw plane into (H, W, 3)."""
    raw = np.asarray(raw, dtype=np.float64)
    _check_even(raw)
    h, w = raw.shape
    # pad by 2 so reflection supplies genuine same-color samples at borders
    padded = np.pad(raw, 2, mode="reflect")
    r_plane = padded * _site_mask(padded.shape, [(0, 0)])
    g_plane = padded * _site_mask(padded.shape, [(0, 1), (1, 0)])
    b_plane = padded * _site_mask(padded.shape, [(1, 1)])
    out = np.empty((h, w, 3), dtype=np.float64)
    out[..., 0] = _stencil_fill(r_plane, _KERNEL_RB, h, w)
    out[..., 1] = _stencil_fill(g_plane, _KERNEL_G, h, w)
    out[..., 2] = _stencil_fill(b_plane, _KERNEL_RB, h, w)
    return out
