"""Optics-guided thermal image super-resolution, desk scale.

Subpackages:
    numcore     tensor arithmetic and reverse-mode autodiff
    imaging     synthetic scenes, degradations, NetPBM i/o, manifests
    layers      windowed attention blocks
    model       branches, fusion, reconstruction network
    train       loss, optimizer, staged training, checkpoints
    evaluation  PSNR/SSIM and report generation
"""

__version__ = "0.1.0"
