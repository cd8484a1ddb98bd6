"""Window bookkeeping: tiling feature maps into token windows and back.

Attention operates on flat token windows of shape (N·numWindows) × M² × C.
Shifted variants cyclically roll the map by −shift before tiling; tokens that
wrap across a border must not attend to each other, which the additive mask
from `shift_attention_mask` enforces.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

from gdnet.numcore import ops
from gdnet.numcore.tensor import Tensor


@dataclass
class WindowBatch:
    """Flat token windows plus the metadata needed to invert the tiling."""

    windows: Tensor  # (N * numWindows) x M^2 x C
    n: int
    c: int
    h: int
    w: int
    window: int
    shift: int

    def with_windows(self, windows: Tensor) -> "WindowBatch":
        if windows.shape != self.windows.shape:
            raise ValueError(
                f"window batch shape {windows.shape} does not match metadata "
                f"{self.windows.shape}"
            )
        return replace(self, windows=windows)


def _check_geometry(h: int, w: int, window: int, shift: int):
    if h % window or w % window:
        raise ValueError(f"feature dims {h}x{w} not divisible by window {window}")
    if shift not in (0, window // 2):
        raise ValueError(f"shift must be 0 or window/2, got {shift}")


def window_partition(x: Tensor, window: int, shift: int = 0) -> WindowBatch:
    """Tile an N×C×H×W map into non-overlapping M×M token windows.

    With shift > 0 the map is first rolled by (−shift, −shift) so that a
    second attention pass sees windows straddling the original boundaries.
    """
    n, c, h, w = x.shape
    _check_geometry(h, w, window, shift)
    if shift:
        x = ops.roll2d(x, -shift, -shift)
    t = ops.transpose(x, (0, 2, 3, 1))  # N,H,W,C
    t = ops.reshape(t, (n, h // window, window, w // window, window, c))
    t = ops.transpose(t, (0, 1, 3, 2, 4, 5))  # N, nH, nW, M, M, C
    t = ops.reshape(t, (n * (h // window) * (w // window), window * window, c))
    return WindowBatch(windows=t, n=n, c=c, h=h, w=w, window=window, shift=shift)


def window_reverse(wb: WindowBatch) -> Tensor:
    """Exact inverse of `window_partition`, including the un-shift."""
    n, c, h, w, m = wb.n, wb.c, wb.h, wb.w, wb.window
    expect = (n * (h // m) * (w // m), m * m, c)
    if wb.windows.shape != expect:
        raise ValueError(f"window batch shape {wb.windows.shape}, expected {expect}")
    t = ops.reshape(wb.windows, (n, h // m, w // m, m, m, c))
    t = ops.transpose(t, (0, 1, 3, 2, 4, 5))  # N, nH, M, nW, M, C
    t = ops.reshape(t, (n, h, w, c))
    x = ops.transpose(t, (0, 3, 1, 2))
    if wb.shift:
        x = ops.roll2d(x, wb.shift, wb.shift)
    return x


@lru_cache(maxsize=128)
def shift_attention_mask(h: int, w: int, window: int, shift: int) -> np.ndarray:
    """Additive (numWindows, M², M²) mask of {0, −inf} for shifted windows.

    After rolling by −shift, the last `window` rows/cols of the map mix pixels
    from opposite borders.  Pixels are labelled by which of the nine border
    regions they came from; pairs with different labels get −inf pre-softmax.
    """
    _check_geometry(h, w, window, shift)
    if shift == 0:
        raise ValueError("no mask is needed for unshifted windows")
    labels = np.zeros((h, w))
    cnt = 0
    for hs in (slice(0, h - window), slice(h - window, h - shift), slice(h - shift, None)):
        for ws in (slice(0, w - window), slice(w - window, w - shift), slice(w - shift, None)):
            labels[hs, ws] = cnt
            cnt += 1
    tiled = (
        labels.reshape(h // window, window, w // window, window)
        .transpose(0, 2, 1, 3)
        .reshape(-1, window * window)
    )
    diff = tiled[:, :, None] - tiled[:, None, :]
    mask = np.where(diff != 0, -np.inf, 0.0)
    mask.setflags(write=False)
    return mask
