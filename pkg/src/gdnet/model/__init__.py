"""Network assembly: config, branches, fusion, and the full model."""

from gdnet.model.branches import (
    AGM,
    Backbone,
    FOBranch,
    LIBranch,
    NCBranch,
    enhance_with,
    retinex_decompose_default,
)
from gdnet.model.config import PRESETS, STAGE_MODES, GDNetConfig, paper_preset, tiny_preset
from gdnet.model.fusion import AFM
from gdnet.model.network import RMAG, GDNet, ShallowExtract, UpsampleHead

__all__ = [
    "AFM",
    "AGM",
    "Backbone",
    "FOBranch",
    "GDNet",
    "GDNetConfig",
    "LIBranch",
    "NCBranch",
    "PRESETS",
    "RMAG",
    "STAGE_MODES",
    "ShallowExtract",
    "UpsampleHead",
    "enhance_with",
    "paper_preset",
    "retinex_decompose_default",
    "tiny_preset",
]
