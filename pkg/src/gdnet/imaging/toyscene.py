"""Procedural optical/thermal scene pairs.

Each scene is a gradient background with random rectangles and disks on
top.  The thermal plane is a fixed nonlinear remap of the scene luminance
followed by a light Gaussian blur, so thermal and optical edges coincide
by construction and the optical frame genuinely predicts the thermal one.
"""

from __future__ import annotations

import colorsys

import numpy as np

from gdnet.numcore.imageops import gaussian_blur
from gdnet.numcore.rng import SeededRng

_LUMA = np.array([0.299, 0.587, 0.114])


def _random_color(rng: SeededRng) -> np.ndarray:
    hue = float(rng.uniform(0.0, 1.0))
    sat = float(rng.uniform(0.25, 0.9))
    val = float(rng.uniform(0.45, 0.95))
    return np.array(colorsys.hsv_to_rgb(hue, sat, val))


def thermal_from_luminance(luma: np.ndarray, blur_sigma: float = 1.2) -> np.ndarray:
    """Deterministic luminance-to-temperature curve plus sensor blur."""
    remapped = 0.1 + 0.8 * np.clip(luma, 0.0, 1.0) ** 1.3
    return np.clip(gaussian_blur(remapped, sigma=blur_sigma, radius=3), 0.0, 1.0)


def generate_toy_pair(rng: SeededRng, h: int, w: int) -> tuple[np.ndarray, np.ndarray]:
    """Build one aligned (optical HxWx3, thermal HxW) pair.

    Dimensions must be multiples of 8 so every downstream window grid fits.
    """
    if h % 8 or w % 8:
        raise ValueError(f"scene dims must be multiples of 8, got {h}x{w}")

    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    yy /= max(h - 1, 1)
    xx /= max(w - 1, 1)

    # gradient background along a random direction
    angle = float(rng.uniform(0.0, 2 * np.pi))
    field = xx * np.cos(angle) + yy * np.sin(angle)
    field = (field - field.min()) / max(field.max() - field.min(), 1e-9)
    c0, c1 = _random_color(rng), _random_color(rng)
    optical = c0 + field[..., None] * (c1 - c0)

    n_shapes = int(rng.integers(6, 13))
    for _ in range(n_shapes):
        color = _random_color(rng)
        cx = float(rng.uniform(0.1, 0.9)) * w
        cy = float(rng.uniform(0.1, 0.9)) * h
        size = float(rng.uniform(0.06, 0.22)) * min(h, w)
        if rng.uniform() < 0.5:
            mask = (np.mgrid[0:h, 0:w][1] - cx) ** 2 + (np.mgrid[0:h, 0:w][0] - cy) ** 2 <= size ** 2
        else:
            aspect = float(rng.uniform(0.5, 2.0))
            half_w, half_h = size, size * aspect
            mask = (np.abs(np.mgrid[0:h, 0:w][1] - cx) <= half_w) & (
                np.abs(np.mgrid[0:h, 0:w][0] - cy) <= half_h
            )
        optical[mask] = color

    optical = np.clip(optical, 0.0, 1.0)
    thermal = thermal_from_luminance(optical @ _LUMA)
    return optical, thermal
