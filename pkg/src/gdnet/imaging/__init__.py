"""Degradation pipeline, toy scenes, NetPBM i/o, dataset manifests."""

from gdnet.imaging.netpbm import read_pgm16, read_ppm8, write_pgm16, write_ppm8
from gdnet.imaging.bayer import bayer_demosaic, bayer_mosaic, crf
from gdnet.imaging.degrade import (
    HazeParams,
    LowLightParams,
    NoiseParams,
    apply_haze_mask,
    degrade_optical,
    degrade_thermal,
    gaussian_poisson_noise,
    poisson_stage,
    sample_haze_params,
    sample_lowlight_params,
    sample_noise_params,
    simulate_low_light,
    synthesize_haze,
    value_noise_mask,
)
from gdnet.imaging.toyscene import generate_toy_pair
from gdnet.imaging.manifest import (
    ATTRIBUTES,
    ManifestRecord,
    assign_attribute,
    guide_path,
    lr_path,
    read_manifest,
    record_stem,
    sr_path,
    write_manifest,
)

__all__ = [
    "read_pgm16",
    "read_ppm8",
    "write_pgm16",
    "write_ppm8",
    "bayer_mosaic",
    "bayer_demosaic",
    "crf",
    "LowLightParams",
    "NoiseParams",
    "HazeParams",
    "simulate_low_light",
    "gaussian_poisson_noise",
    "poisson_stage",
    "synthesize_haze",
    "apply_haze_mask",
    "value_noise_mask",
    "degrade_thermal",
    "degrade_optical",
    "sample_lowlight_params",
    "sample_noise_params",
    "sample_haze_params",
    "generate_toy_pair",
    "ManifestRecord",
    "ATTRIBUTES",
    "read_manifest",
    "write_manifest",
    "assign_attribute",
    "record_stem",
    "lr_path",
    "guide_path",
    "sr_path",
]
