"""Optical and thermal degradations.

Optical frames pick up attribute-specific corruption (power-law darkening
with sensor noise, or synthetic haze); thermal ground truth is reduced to
low resolution by bicubic interpolation (BI) or blur-then-downsample (BD).
Every sampled parameter comes from the record's SeededRng, so the whole
pipeline is bit-reproducible per (record, seed).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from gdnet.numcore.imageops import bicubic_resize, gaussian_blur
from gdnet.numcore.rng import SeededRng
from gdnet.imaging.bayer import bayer_demosaic, bayer_mosaic, crf


def _clip01(x: np.ndarray) -> np.ndarray:
    return np.clip(x, 0.0, 1.0)


# -- low light (power-law darkening) ---------------------------------------------


@dataclass
class LowLightParams:
    """Per-channel darkening: out_i = eta_i * (zeta_i * in_i) ** theta_i."""

    zeta: np.ndarray
    eta: np.ndarray
    theta: np.ndarray


def sample_lowlight_params(rng: SeededRng) -> LowLightParams:
    return LowLightParams(
        zeta=rng.uniform(0.6, 0.9, size=3),
        eta=rng.uniform(0.3, 0.5, size=3),
        theta=rng.uniform(3.0, 5.0, size=3),
    )


def simulate_low_light(img: np.ndarray, params: LowLightParams) -> np.ndarray:
    theta = np.asarray(params.theta, dtype=np.float64)
    if np.any(theta <= 0):
        raise ValueError(f"low-light exponent must be positive, got {theta}")
    zeta = np.asarray(params.zeta, dtype=np.float64)
    eta = np.asarray(params.eta, dtype=np.float64)
    img = np.asarray(img, dtype=np.float64)
    out = eta * (zeta * img) ** theta
    return _clip01(out)


# -- sensor noise (shot + read, on the raw mosaic in linear light) -----------------


@dataclass
class NoiseParams:
    sigma_g: float        # Gaussian read-noise std
    photon_scale: float   # Poisson rate multiplier; larger = cleaner


def sample_noise_params(rng: SeededRng) -> NoiseParams:
    return NoiseParams(
        sigma_g=float(rng.uniform(1e-3, 1e-2)),
        photon_scale=float(rng.uniform(500.0, 5000.0)),
    )


def poisson_stage(x: np.ndarray, photon_scale: float, rng: SeededRng) -> np.ndarray:
    """Shot noise: Poisson(photon_scale*x)/photon_scale.

    Mean equals the input; per-pixel variance is x/photon_scale.  An
    infinite photon_scale short-circuits to the noise-free identity.
    """
    if photon_scale <= 0:
        raise ValueError(f"photon_scale must be positive, got {photon_scale}")
    if np.isinf(photon_scale):
        return np.asarray(x, dtype=np.float64).copy()
    lam = photon_scale * np.clip(np.asarray(x, dtype=np.float64), 0.0, None)
    return rng.poisson(lam).astype(np.float64) / photon_scale


def gaussian_poisson_noise(img: np.ndarray, params: NoiseParams,
                           rng: SeededRng) -> np.ndarray:
    """Sensor-noise chain: to linear light, mosaic, shot noise, read noise,
    demosaic, back to stored values.  Clamped to [0,1] at each stage."""
    lin = crf(img, "inverse")
    raw = bayer_mosaic(lin)
    raw = poisson_stage(raw, params.photon_scale, rng)
    if params.sigma_g > 0:
        raw = raw + rng.normal(0.0, params.sigma_g, size=raw.shape)
    raw = _clip01(raw)
    rgb = _clip01(bayer_demosaic(raw))
    return _clip01(crf(rgb, "forward"))


# -- haze ---------------------------------------------------------------------------


@dataclass
class HazeParams:
    beta: float                  # scattering coefficient, >= 0
    A: float                     # atmospheric light in [0,1]
    center: tuple[float, float]  # (cx, cy), normalized [0,1] image coords


def _distance_field(h: int, w: int, center: tuple[float, float]) -> np.ndarray:
    """Distance of each pixel from the haze center over the image diagonal."""
    cx = center[0] * (w - 1)
    cy = center[1] * (h - 1)
    yy, xx = np.mgrid[0:h, 0:w]
    d = np.sqrt((xx - cx) ** 2 + (yy - cy) ** 2)
    return d / np.hypot(h, w)


def sample_haze_params(rng: SeededRng, h: int, w: int) -> HazeParams:
    """A in U[0.7,1], center uniform, beta set so the farthest pixel keeps
    a transmission drawn from U[0.2, 0.7]."""
    a = float(rng.uniform(0.7, 1.0))
    center = (float(rng.uniform(0.0, 1.0)), float(rng.uniform(0.0, 1.0)))
    t_far = float(rng.uniform(0.2, 0.7))
    d_far = float(_distance_field(h, w, center).max())
    beta = -np.log(t_far) / max(d_far, 1e-9)
    return HazeParams(beta=beta, A=a, center=center)


def synthesize_haze(img: np.ndarray, params: HazeParams) -> np.ndarray:
    """Scattering model: out = img * e^(-beta*d) + A * (1 - e^(-beta*d))."""
    if params.beta < 0:
        raise ValueError(f"scattering coefficient must be >= 0, got {params.beta}")
    img = np.asarray(img, dtype=np.float64)
    h, w = img.shape[:2]
    d = _distance_field(h, w, params.center)
    t = np.exp(-params.beta * d)
    if img.ndim == 3:
        t = t[..., None]
    return _clip01(img * t + params.A * (1.0 - t))


def value_noise_mask(rng: SeededRng, h: int, w: int, cells: int = 6) -> np.ndarray:
    """Smooth low-frequency mask in [0,1]: a coarse uniform grid upsampled
    to image size, blurred, then min-max normalized."""
    coarse = rng.uniform(0.0, 1.0, size=(cells, cells))
    up = bicubic_resize(coarse, max(h, w) / cells)[:h, :w]
    sm = gaussian_blur(up, sigma=max(h, w) / 24.0, radius=max(2, int(max(h, w) / 16)))
    lo, hi = sm.min(), sm.max()
    if hi - lo < 1e-12:
        return np.zeros((h, w))
    return (sm - lo) / (hi - lo)


def apply_haze_mask(img: np.ndarray, mask: np.ndarray, a: float) -> np.ndarray:
    """Blend toward atmospheric light by a spatial mask: img*(1-m) + A*m."""
    img = np.asarray(img, dtype=np.float64)
    mask = np.asarray(mask, dtype=np.float64)
    if mask.shape != img.shape[:2]:
        raise ValueError(f"mask shape {mask.shape} does not match image {img.shape[:2]}")
    if img.ndim == 3:
        mask = mask[..., None]
    return _clip01(img * (1.0 - mask) + a * mask)


# -- thermal downscaling --------------------------------------------------------------


def degrade_thermal(hr: np.ndarray, scale: int, mode: str) -> np.ndarray:
    """HR thermal -> LR by 1/scale.  BI resamples directly; BD blurs with a
    7x7 Gaussian (sigma 1.6) first."""
    hr = np.asarray(hr, dtype=np.float64)
    h, w = hr.shape
    if h % scale or w % scale:
        raise ValueError(f"HR dims {h}x{w} not divisible by scale {scale}")
    if mode == "BD":
        hr = gaussian_blur(hr, sigma=1.6, radius=3)
    elif mode != "BI":
        raise ValueError(f"degradation mode must be 'BI' or 'BD', got {mode!r}")
    return _clip01(bicubic_resize(hr, 1.0 / scale))


# -- per-record optical degradation ----------------------------------------------------


def degrade_optical(img: np.ndarray, attr: str, rng: SeededRng) -> np.ndarray:
    """Apply the attribute's corruption to a clean optical frame.

    normal   -> unchanged
    lowlight -> power-law darkening, then sensor noise
    fog      -> scattering-model haze, or a smooth haze mask half the time
    """
    if attr == "normal":
        return _clip01(np.asarray(img, dtype=np.float64))
    if attr == "lowlight":
        dark = simulate_low_light(img, sample_lowlight_params(rng))
        return gaussian_poisson_noise(dark, sample_noise_params(rng), rng)
    if attr == "fog":
        h, w = np.asarray(img).shape[:2]
        use_mask = rng.uniform() < 0.5
        if use_mask:
            a = float(rng.uniform(0.7, 1.0))
            strength = float(rng.uniform(0.5, 0.9))
            mask = value_noise_mask(rng, h, w) * strength
            return apply_haze_mask(img, mask, a)
        return synthesize_haze(img, sample_haze_params(rng, h, w))
    raise ValueError(f"unknown attribute {attr!r}")
