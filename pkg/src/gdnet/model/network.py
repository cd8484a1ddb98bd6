"""The full guidance-disentanglement super-resolution network.

Data flow (full mode):

    f_init = shallow(x_lr)                       # thermal entry conv
    f_n/f_l/f_f = branch(backbone(optical'), f_init)   # per attribute
    s = afm(f_n, f_l, f_f)                       # fused optical guidance
    f = rmag_k(... rmag_1(f_init, s) ...) each + w_i·f_init
    sr = upsample(f)                             # conv → pixel shuffle → conv

stage_mode selects how the guidance map s is produced:
    stage1      s = backbone(optical)        (branches and fusion bypassed)
    nc/li/fo    s = that single branch's output (fusion bypassed)
    full        s = afm over all three branches
"""

from __future__ import annotations

import numpy as np

from gdnet.layers import MGL, OMCL, OTL, STL
from gdnet.numcore import Conv2d, Module, ModuleList, ops
from gdnet.numcore.rng import SeededRng
from gdnet.numcore.tensor import Parameter, Tensor

from gdnet.model.branches import AGM, Backbone, enhance_with, retinex_decompose_default
from gdnet.model.config import STAGE_MODES, GDNetConfig
from gdnet.model.fusion import AFM


class ShallowExtract(Module):
    """Single 3×3 conv lifting the LR thermal plane to embed_dim channels."""

    def __init__(self, cfg: GDNetConfig, rng: SeededRng, dtype=np.float32):
        super().__init__()
        self.conv = Conv2d(1, cfg.embed_dim, 3, rng.child("conv"), dtype=dtype)

    def __call__(self, x_lr: Tensor) -> Tensor:
        return self.conv(x_lr)


class RMAG(Module):
    """Residual attention group: guidance injection, window self-attention
    refinement, overlapping fusion, and a learnable-scaled thermal skip.

        body = Conv(OTL(OMCL(STL×n(MGL(s, f_prev)), s)))
        out  = body + w_i · f_initial
    """

    def __init__(self, cfg: GDNetConfig, rng: SeededRng, dtype=np.float32):
        super().__init__()
        d, h, m = cfg.embed_dim, cfg.heads, cfg.window
        self.mgl = MGL(d, h, m, "mogm", rng.child("mgl"), dtype=dtype)
        self.stls = ModuleList([
            STL(d, h, m, 0 if i % 2 == 0 else m // 2, rng.child(f"stl{i}"),
                dtype=dtype)
            for i in range(cfg.stl_per_rmag)
        ])
        self.omcl = OMCL(d, h, m, cfg.overlap_ratio, rng.child("omcl"), dtype=dtype)
        self.otl = OTL(d, h, m, cfg.overlap_ratio, rng.child("otl"), dtype=dtype)
        self.conv = Conv2d(d, d, 3, rng.child("conv"), dtype=dtype)
        self.w_i = Parameter(np.ones((), dtype=dtype))

    def __call__(self, f_prev: Tensor, s: Tensor, f_initial: Tensor) -> Tensor:
        x = self.mgl(s, f_prev)
        for stl in self.stls:
            x = stl(x)
        x = self.omcl(x, s)
        x = self.otl(x)
        x = self.conv(x)
        return ops.add(x, ops.mul(self.w_i, f_initial))


class UpsampleHead(Module):
    """conv(embed → mid·scale²) → pixel shuffle → conv(mid → 1)."""

    def __init__(self, cfg: GDNetConfig, rng: SeededRng, dtype=np.float32):
        super().__init__()
        self.scale = cfg.scale
        mid = cfg.upsample_mid_channels
        self.conv1 = Conv2d(cfg.embed_dim, mid * cfg.scale ** 2, 3,
                            rng.child("conv1"), dtype=dtype)
        self.conv2 = Conv2d(mid, 1, 3, rng.child("conv2"), dtype=dtype)

    def __call__(self, f_last: Tensor) -> Tensor:
        return self.conv2(ops.pixel_shuffle(self.conv1(f_last), self.scale))


class GDNet(Module):
    """Guidance-disentangled thermal super-resolution network."""

    def __init__(self, cfg: GDNetConfig, rng: SeededRng | None = None,
                 dtype=np.float32, decomposer=retinex_decompose_default):
        super().__init__()
        rng = rng if rng is not None else SeededRng(0)
        self.cfg = cfg
        self.decomposer = decomposer
        self.shallow = ShallowExtract(cfg, rng.child("shallow"), dtype=dtype)
        self.backbone = Backbone(3, cfg, rng.child("backbone"), dtype=dtype)
        self.agm = AGM(cfg, rng.child("agm"), dtype=dtype)
        self.afm = AFM(cfg, rng.child("afm"), dtype=dtype)
        self.mogm = ModuleList([
            RMAG(cfg, rng.child(f"rmag{i}"), dtype=dtype)
            for i in range(cfg.rmag_count)
        ])
        self.upsample = UpsampleHead(cfg, rng.child("upsample"), dtype=dtype)
        self.bind_names()

    # -- guidance -----------------------------------------------------------------

    def _enhanced_optical(self, y: Tensor) -> Tensor:
        """Frozen low-light enhancement; gradients do not cross this step."""
        data = enhance_with(self.decomposer, y.data)
        return Tensor(data.astype(y.data.dtype))

    def guidance(self, y: Tensor, f_initial: Tensor, stage_mode: str) -> Tensor:
        if stage_mode == "stage1":
            return self.backbone(y)
        if stage_mode == "nc":
            return self.agm.nc(self.backbone(y), f_initial)
        if stage_mode == "li":
            return self.agm.li(self.backbone(self._enhanced_optical(y)), f_initial)
        if stage_mode == "fo":
            return self.agm.fo(self.backbone(y), f_initial)
        feat = self.backbone(y)
        f_n = self.agm.nc(feat, f_initial)
        f_l = self.agm.li(self.backbone(self._enhanced_optical(y)), f_initial)
        f_f = self.agm.fo(feat, f_initial)
        return self.afm(f_n, f_l, f_f)

    # -- full pass ----------------------------------------------------------------

    def __call__(self, x_lr: Tensor, y: Tensor, stage_mode: str = "full") -> Tensor:
        if stage_mode not in STAGE_MODES:
            raise ValueError(f"stage_mode must be one of {STAGE_MODES}, got {stage_mode!r}")
        n, c, h, w = x_lr.shape
        ny, cy, hy, wy = y.shape
        if c != 1 or cy != 3 or ny != n:
            raise ValueError(
                f"expected thermal Nx1xhxw and optical Nx3xHxW, got {x_lr.shape} / {y.shape}"
            )
        if (hy, wy) != (h * self.cfg.scale, w * self.cfg.scale):
            raise ValueError(
                f"optical {hy}x{wy} is not thermal {h}x{w} times scale {self.cfg.scale}"
            )
        if h % self.cfg.window or w % self.cfg.window:
            raise ValueError(
                f"LR dims {h}x{w} not divisible by window {self.cfg.window}"
            )
        f_initial = self.shallow(x_lr)
        s = self.guidance(y, f_initial, stage_mode)
        f = f_initial
        for rmag in self.mogm:
            f = rmag(f, s, f_initial)
        return self.upsample(f)
