"""Dataset-level evaluation: per-image metrics, attribute groups, baselines.

The bicubic baseline is computed from the LR files exactly as a written SR
file would score: the upsampled plane is passed through the same 16-bit
quantization as the PGM codec, so an SR directory that literally contains
bicubic upsamples reproduces the baseline numbers bit-for-bit.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from gdnet.eval.metrics import psnr, ssim
from gdnet.imaging.manifest import (
    ATTRIBUTES,
    lr_path,
    read_manifest,
    record_stem,
    sr_path,
)
from gdnet.imaging.netpbm import read_pgm16
from gdnet.numcore.imageops import bicubic_resize


@dataclass(frozen=True)
class PairMetrics:
    stem: str
    attr: str
    psnr: float
    ssim: float


@dataclass(frozen=True)
class MetricReport:
    """Per-image rows (sorted by id), aligned bicubic rows, missing ids."""

    records: tuple[PairMetrics, ...]
    baseline: tuple[PairMetrics, ...]
    missing: tuple[tuple[str, str], ...]  # (stem, attr), sorted

    def group(self, attr: str | None = None, *, baseline: bool = False):
        rows = self.baseline if baseline else self.records
        return [r for r in rows if attr is None or r.attr == attr]

    def mean(self, attr: str | None = None, *, baseline: bool = False):
        """(mean psnr, mean ssim) over a group, or None for an empty group."""
        rows = self.group(attr, baseline=baseline)
        if not rows:
            return None
        return (
            float(np.mean([r.psnr for r in rows])),
            float(np.mean([r.ssim for r in rows])),
        )


def _quantize16(plane: np.ndarray) -> np.ndarray:
    """Round-trip through the 16-bit PGM code space."""
    q = np.round(np.clip(plane, 0.0, 1.0) * 65535.0).astype(">u2")
    return q.astype(np.float64) / 65535.0


def _score_record(root: Path, sr_dir: Path, rec):
    stem = record_stem(rec)
    gt = read_pgm16(root / rec.thermal)
    lr = read_pgm16(lr_path(root, rec))
    up = _quantize16(bicubic_resize(lr, rec.scale))
    base = PairMetrics(stem, rec.attr, psnr(gt, up), ssim(gt, up))
    sr_file = sr_path(sr_dir, rec)
    if not sr_file.exists():
        return stem, rec.attr, None, base
    sr = read_pgm16(sr_file)
    row = PairMetrics(stem, rec.attr, psnr(gt, sr), ssim(gt, sr))
    return stem, rec.attr, row, base


def evaluate_pairs(manifest_path, sr_dir, *, workers: int = 1) -> MetricReport:
    """Score every manifest record against its SR file.

    Records without an SR file are listed in the report and excluded from
    aggregates.  Per-image work may run on `workers` threads; rows are
    reduced in sorted-id order either way, so the report is deterministic.
    """
    manifest_path = Path(manifest_path)
    sr_dir = Path(sr_dir)
    recs = sorted(read_manifest(manifest_path), key=record_stem)
    root = manifest_path.parent

    def job(rec):
        return _score_record(root, sr_dir, rec)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(job, recs))
    else:
        results = [job(rec) for rec in recs]

    rows, bases, missing = [], [], []
    for stem, attr, row, base in results:
        if row is None:
            missing.append((stem, attr))
        else:
            rows.append(row)
            bases.append(base)
    return MetricReport(tuple(rows), tuple(bases), tuple(missing))


def _fmt(x: float) -> str:
    return repr(float(x))


def write_report(report: MetricReport, path) -> None:
    """CSV with header id,attr,psnr,ssim; aggregate and missing footer rows.

    Footer ids are namespaced (mean:, bicubic:, missing:, count:) so the file
    stays a single flat table; aggregate values are full-precision reprs and
    therefore recomputable from the body rows.
    """
    lines = ["id,attr,psnr,ssim"]
    for r in report.records:
        lines.append(f"{r.stem},{r.attr},{_fmt(r.psnr)},{_fmt(r.ssim)}")
    for attr in ATTRIBUTES:
        m = report.mean(attr)
        if m is not None:
            lines.append(f"mean:{attr},{attr},{_fmt(m[0])},{_fmt(m[1])}")
    overall = report.mean()
    if overall is not None:
        lines.append(f"mean:all,all,{_fmt(overall[0])},{_fmt(overall[1])}")
    for attr in ATTRIBUTES:
        m = report.mean(attr, baseline=True)
        if m is not None:
            lines.append(f"bicubic:{attr},{attr},{_fmt(m[0])},{_fmt(m[1])}")
    b = report.mean(baseline=True)
    if b is not None:
        lines.append(f"bicubic:all,all,{_fmt(b[0])},{_fmt(b[1])}")
    for stem, attr in report.missing:
        lines.append(f"missing:{stem},{attr},,")
    lines.append(
        f"count:all,all,{len(report.records)},{len(report.missing)}"
    )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def format_report(report: MetricReport) -> str:
    """Human-readable table of group means with the bicubic baseline."""
    out = [f"{'group':<10} {'n':>4} {'psnr':>8} {'ssim':>8}"
           f" {'bicubic psnr':>13} {'bicubic ssim':>13}"]
    for attr in (*ATTRIBUTES, None):
        rows = report.group(attr)
        m = report.mean(attr)
        b = report.mean(attr, baseline=True)
        label = attr or "all"
        if m is None:
            out.append(f"{label:<10} {0:>4} {'-':>8} {'-':>8} {'-':>13} {'-':>13}")
        else:
            out.append(
                f"{label:<10} {len(rows):>4} {m[0]:>8.3f} {m[1]:>8.4f}"
                f" {b[0]:>13.3f} {b[1]:>13.4f}"
            )
    if report.missing:
        stems = ", ".join(stem for stem, _ in report.missing)
        out.append(f"missing SR outputs: {stems}")
    return "\n".join(out)


def write_report_figure(report: MetricReport, report_path) -> Path:
    """Bar charts of group means next to the CSV; returns the PNG path."""
    import matplotlib

    matplotlib.use("Agg", force=True)
    import matplotlib.pyplot as plt

    png = Path(report_path).with_suffix(".png")
    groups = [a for a in ATTRIBUTES if report.group(a)] or []
    labels = groups + ["all"] if report.records else []
    fig, axes = plt.subplots(1, 2, figsize=(10, 4))
    for ax, which, title in ((axes[0], 0, "PSNR (dB)"), (axes[1], 1, "SSIM")):
        if labels:
            model = [report.mean(a if a != "all" else None)[which] for a in labels]
            base = [
                report.mean(a if a != "all" else None, baseline=True)[which]
                for a in labels
            ]
            pos = np.arange(len(labels), dtype=np.float64)
            ax.bar(pos - 0.2, base, width=0.4, label="bicubic")
            ax.bar(pos + 0.2, model, width=0.4, label="model")
            ax.set_xticks(pos)
            ax.set_xticklabels(labels)
            ax.legend()
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(png, dpi=110)
    plt.close(fig)
    return png
