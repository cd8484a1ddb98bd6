"""Network hyper-parameters and the two shipped presets."""

from __future__ import annotations

from dataclasses import dataclass, fields

STAGE_MODES = ("stage1", "nc", "li", "fo", "full")


@dataclass
class GDNetConfig:
    scale: int = 4
    embed_dim: int = 96
    heads: int = 6
    window: int = 8
    rmag_count: int = 4
    stl_per_rmag: int = 6
    nc_mgl: int = 2
    li_mgl: int = 6
    fo_gal: int = 4
    backbone_k: int | None = None  # conv+LeakyReLU pairs; None → 4 (×4) / 6 (×8)
    overlap_ratio: float = 0.5
    upsample_mid_channels: int = 32

    def __post_init__(self):
        if self.scale not in (4, 8):
            raise ValueError(f"scale must be 4 or 8, got {self.scale}")
        if self.backbone_k is None:
            self.backbone_k = 4 if self.scale == 4 else 6
        counts = {
            "embed_dim": self.embed_dim,
            "heads": self.heads,
            "window": self.window,
            "rmag_count": self.rmag_count,
            "stl_per_rmag": self.stl_per_rmag,
            "nc_mgl": self.nc_mgl,
            "li_mgl": self.li_mgl,
            "fo_gal": self.fo_gal,
            "backbone_k": self.backbone_k,
            "upsample_mid_channels": self.upsample_mid_channels,
        }
        for name, v in counts.items():
            if v <= 0:
                raise ValueError(f"{name} must be positive, got {v}")
        if self.embed_dim % self.heads:
            raise ValueError(
                f"embed_dim {self.embed_dim} not divisible by heads {self.heads}"
            )
        if self.backbone_k % 2:
            raise ValueError(
                f"backbone_k must be even (stride pattern [2,1,...]), got {self.backbone_k}"
            )
        # strides alternate [2,1,2,1,...]; their product must equal the scale
        if 2 ** (self.backbone_k // 2) != self.scale:
            raise ValueError(
                f"backbone stride product {2 ** (self.backbone_k // 2)} "
                f"does not match scale {self.scale} (backbone_k={self.backbone_k})"
            )

    @property
    def backbone_strides(self) -> tuple[int, ...]:
        return tuple(2 if i % 2 == 0 else 1 for i in range(self.backbone_k))

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_dict(cls, d: dict) -> "GDNetConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)


def paper_preset(scale: int = 4) -> GDNetConfig:
    """Full-size network: 96-dim, 6 heads, 4 RMAGs of 6 STLs each."""
    return GDNetConfig(scale=scale)


def tiny_preset(scale: int = 4) -> GDNetConfig:
    """Desk-scale network for tests and demos: one RMAG, two STLs, 32-dim."""
    return GDNetConfig(
        scale=scale,
        embed_dim=32,
        heads=4,
        rmag_count=1,
        stl_per_rmag=2,
        nc_mgl=2,
        li_mgl=2,
        fo_gal=2,
    )


PRESETS = {"paper": paper_preset, "tiny": tiny_preset}
