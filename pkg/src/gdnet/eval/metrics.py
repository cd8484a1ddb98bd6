"""Reference image-quality metrics on [0, 1] planes."""

from __future__ import annotations

import numpy as np

PSNR_CAP = 99.0

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03
SSIM_L = 1.0


def psnr(a: np.ndarray, b: np.ndarray) -> float:
    """Peak signal-to-noise ratio in dB for unit dynamic range.

    Identical images (zero MSE) report the 99 dB cap; every value is capped
    there so the scale has a finite top.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"psnr shapes differ: {a.shape} vs {b.shape}")
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return PSNR_CAP
    return min(PSNR_CAP, -10.0 * np.log10(mse))


def _gaussian_kernel1d(sigma: float, radius: int) -> np.ndarray:
    t = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-0.5 * (t / sigma) ** 2)
    return k / k.sum()


def _filter_valid(img: np.ndarray, k: np.ndarray) -> np.ndarray:
    """Separable valid-mode correlation with a symmetric 1-d kernel.

    Accumulates tap by tap with plain elementwise ufuncs instead of a matmul
    reduction: the summation order is then fixed, so bit-identical inputs give
    bit-identical results regardless of buffer alignment.
    """
    win = len(k)

    def one_axis(x: np.ndarray, axis: int) -> np.ndarray:
        n = x.shape[axis] - win + 1
        sl = [slice(None)] * x.ndim
        sl[axis] = slice(0, n)
        out = k[0] * x[tuple(sl)]
        for t in range(1, win):
            sl[axis] = slice(t, t + n)
            out += k[t] * x[tuple(sl)]
        return out

    return one_axis(one_axis(img, 0), 1)


def ssim(a: np.ndarray, b: np.ndarray) -> float:
    """Mean structural similarity with the standard Gaussian window.

    11x11 window, sigma 1.5, K1=0.01, K2=0.03 on unit dynamic range; local
    statistics are taken over valid window positions only.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"ssim shapes differ: {a.shape} vs {b.shape}")
    if a.ndim != 2:
        raise ValueError(f"ssim expects 2-d planes, got shape {a.shape}")
    if min(a.shape) < SSIM_WINDOW:
        raise ValueError(
            f"image {a.shape} smaller than the {SSIM_WINDOW}x{SSIM_WINDOW} "
            f"ssim window"
        )
    k = _gaussian_kernel1d(SSIM_SIGMA, SSIM_WINDOW // 2)
    mu_a = _filter_valid(a, k)
    mu_b = _filter_valid(b, k)
    var_a = _filter_valid(a * a, k) - mu_a * mu_a
    var_b = _filter_valid(b * b, k) - mu_b * mu_b
    cov = _filter_valid(a * b, k) - mu_a * mu_b
    c1 = (SSIM_K1 * SSIM_L) ** 2
    c2 = (SSIM_K2 * SSIM_L) ** 2
    num = (2 * mu_a * mu_b + c1) * (2 * cov + c2)
    den = (mu_a ** 2 + mu_b ** 2 + c1) * (var_a + var_b + c2)
    return float(np.mean(num / den))
