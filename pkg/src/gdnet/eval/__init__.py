"""Image-quality metrics and dataset evaluation reports."""

from gdnet.eval.metrics import (
    PSNR_CAP,
    SSIM_K1,
    SSIM_K2,
    SSIM_L,
    SSIM_SIGMA,
    SSIM_WINDOW,
    psnr,
    ssim,
)
from gdnet.eval.report import (
    MetricReport,
    PairMetrics,
    evaluate_pairs,
    format_report,
    write_report,
    write_report_figure,
)

__all__ = [
    "MetricReport",
    "PairMetrics",
    "PSNR_CAP",
    "SSIM_K1",
    "SSIM_K2",
    "SSIM_L",
    "SSIM_SIGMA",
    "SSIM_WINDOW",
    "evaluate_pairs",
    "format_report",
    "psnr",
    "ssim",
    "write_report",
    "write_report_figure",
]
