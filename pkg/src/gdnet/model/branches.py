"""Guidance branches: shared conv backbone, Retinex-style low-light
enhancement, and the three attribute-specific layer stacks (NC/LI/FO)."""

from __future__ import annotations

import numpy as np

from gdnet.layers import GAL, MGL
from gdnet.numcore import Conv2d, Module, ModuleList, gaussian_blur, ops
from gdnet.numcore.rng import SeededRng
from gdnet.numcore.tensor import Tensor

from gdnet.model.config import GDNetConfig


class Backbone(Module):
    """Conv+LeakyReLU pairs that reduce the optical grid to the LR grid.

    Strides alternate [2, 1, 2, 1, ...]; their product equals the scale, so a
    scale·h × scale·w input lands on the h × w thermal grid.
    """

    def __init__(self, in_ch: int, cfg: GDNetConfig, rng: SeededRng,
                 dtype=np.float32):
        super().__init__()
        self.scale = cfg.scale
        convs = []
        ch = in_ch
        for i, stride in enumerate(cfg.backbone_strides):
            convs.append(Conv2d(ch, cfg.embed_dim, 3, rng.child(f"conv{i}"),
                                stride=stride, dtype=dtype))
            ch = cfg.embed_dim
        self.convs = ModuleList(convs)

    def __call__(self, x: Tensor) -> Tensor:
        h, w = x.shape[2], x.shape[3]
        if h % self.scale or w % self.scale:
            raise ValueError(
                f"optical dims {h}x{w} not divisible by scale {self.scale}"
            )
        for conv in self.convs:
            x = ops.leaky_relu(conv(x), 0.2)
        return x


def retinex_decompose_default(img: np.ndarray):
    """Classical single-scale decomposition with a gamma lift.

    illumination: max over channels, smoothed (Gaussian sigma 5);
    reflectance:  img / (illumination + 1e-4);
    enhanced:     reflectance · illumination^0.4, clamped to [0, 1].

    Dark regions get brightened (ill^0.4 ≥ ill on [0,1]); well-lit regions
    pass through nearly unchanged.  Returns (reflectance, illumination,
    enhanced) for an H×W×3 image in [0, 1].
    """
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError(f"expected an HxWx3 image, got shape {img.shape}")
    illumination = gaussian_blur(img.max(axis=2), 5.0)
    illumination = np.clip(illumination, 0.0, 1.0)
    reflectance = img / (illumination[..., None] + 1e-4)
    enhanced = np.clip(reflectance * (illumination[..., None] ** 0.4), 0.0, 1.0)
    return reflectance, illumination, enhanced


def enhance_with(decomposer, optical: np.ndarray) -> np.ndarray:
    """Run a plug-in decomposer over an N×3×H×W batch; returns same layout.

    The decomposer is treated as a fixed preprocessing network: no gradient
    flows through it.  Its output is validated before use.
    """
    out = np.empty_like(np.asarray(optical, dtype=np.float64))
    for i in range(optical.shape[0]):
        hwc = np.transpose(optical[i], (1, 2, 0))
        _, _, enhanced = decomposer(hwc)
        enhanced = np.asarray(enhanced, dtype=np.float64)
        if enhanced.shape != hwc.shape:
            raise ValueError(
                f"decomposer changed image shape {hwc.shape} -> {enhanced.shape}"
            )
        if not np.isfinite(enhanced).all():
            raise ValueError("decomposer produced non-finite values")
        if enhanced.min() < -1e-9 or enhanced.max() > 1.0 + 1e-9:
            raise ValueError("decomposer output escapes [0, 1]")
        out[i] = np.transpose(enhanced, (2, 0, 1))
    return out


def _alternating_shifts(count: int, window: int):
    return [0 if i % 2 == 0 else window // 2 for i in range(count)]


class NCBranch(Module):
    """Normal-condition guidance: cross-attention stack denoising the optical
    stream against the thermal feature (queries/keys thermal, values optical)."""

    def __init__(self, cfg: GDNetConfig, rng: SeededRng, dtype=np.float32):
        super().__init__()
        self.mgls = ModuleList([
            MGL(cfg.embed_dim, cfg.heads, cfg.window, "agm", rng.child(f"mgl{i}"),
                shift=s, dtype=dtype)
            for i, s in enumerate(_alternating_shifts(cfg.nc_mgl, cfg.window))
        ])

    def __call__(self, feat: Tensor, f_initial: Tensor) -> Tensor:
        for mgl in self.mgls:
            feat = mgl(feat, f_initial)
        return feat


class LIBranch(Module):
    """Low-illumination guidance: the enhanced optical stream (decomposed and
    relit before the backbone) refined by a deeper cross-attention stack."""

    def __init__(self, cfg: GDNetConfig, rng: SeededRng, dtype=np.float32):
        super().__init__()
        self.mgls = ModuleList([
            MGL(cfg.embed_dim, cfg.heads, cfg.window, "agm", rng.child(f"mgl{i}"),
                shift=s, dtype=dtype)
            for i, s in enumerate(_alternating_shifts(cfg.li_mgl, cfg.window))
        ])

    def __call__(self, feat: Tensor, f_initial: Tensor) -> Tensor:
        for mgl in self.mgls:
            feat = mgl(feat, f_initial)
        return feat


class FOBranch(Module):
    """Fog-obstruction guidance: gated cross-attention emphasising channels
    that survive haze."""

    def __init__(self, cfg: GDNetConfig, rng: SeededRng, dtype=np.float32):
        super().__init__()
        self.gals = ModuleList([
            GAL(cfg.embed_dim, cfg.heads, cfg.window, rng.child(f"gal{i}"),
                shift=s, dtype=dtype)
            for i, s in enumerate(_alternating_shifts(cfg.fo_gal, cfg.window))
        ])

    def __call__(self, feat: Tensor, f_initial: Tensor) -> Tensor:
        for gal in self.gals:
            feat = gal(feat, f_initial)
        return feat


class AGM(Module):
    """The three attribute-specific guidance stacks under one namespace."""

    def __init__(self, cfg: GDNetConfig, rng: SeededRng, dtype=np.float32):
        super().__init__()
        self.nc = NCBranch(cfg, rng.child("nc"), dtype=dtype)
        self.li = LIBranch(cfg, rng.child("li"), dtype=dtype)
        self.fo = FOBranch(cfg, rng.child("fo"), dtype=dtype)
