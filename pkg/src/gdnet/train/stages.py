"""Three-stage training orchestration with exact parameter freezing.

Stage 1 trains the thermal trunk (shallow extractor, backbone, reconstruction
groups, upsampler) on all data.  Stage 2 trains the three attribute branches
sequentially — NC, then LI, then FO — each on records carrying its own
attribute tag only.  Stage 3 trains the fusion module at the base rate and
fine-tunes the reconstruction groups at half rate while everything else stays
frozen (the upsampler may optionally join the half-rate group).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from gdnet.imaging.manifest import guide_path, lr_path, record_stem
from gdnet.imaging.netpbm import read_pgm16, read_ppm8
from gdnet.numcore import SeededRng
from gdnet.numcore.tensor import Tensor
from gdnet.train.loss import l1_loss
from gdnet.train.optim import Adam, lr_at_epoch

STAGE_IDS = ("1", "2nc", "2li", "2fo", "3")


def set_trainable(model, patterns) -> None:
    """Mark exactly the parameters whose dotted name starts with a pattern.

    Every other parameter is frozen: the optimizer skips it, so its bytes are
    bit-identical across any number of steps.  The empty-string pattern
    matches everything (no freezing).  A pattern matching nothing is a
    configuration error.
    """
    patterns = tuple(patterns)
    if not patterns:
        raise ValueError("no trainable patterns given")
    names = [name for name, _ in model.named_parameters()]
    for pat in patterns:
        if not any(name.startswith(pat) for name in names):
            raise ValueError(f"pattern {pat!r} matches no model parameters")
    for name, p in model.named_parameters():
        p.trainable = name.startswith(patterns)


@dataclass(frozen=True)
class StageSpec:
    """One stage: forward mode, trainable groups with rate scales, data filter."""

    stage_id: str
    stage_mode: str
    lr_groups: tuple[tuple[tuple[str, ...], float], ...]
    attrs: tuple[str, ...] | None  # None = all records

    @property
    def patterns(self) -> tuple[str, ...]:
        return tuple(p for prefixes, _ in self.lr_groups for p in prefixes)

    def __post_init__(self):
        if self.stage_id not in STAGE_IDS:
            raise ValueError(f"unknown stage id {self.stage_id!r}")
        if self.stage_id.startswith("2") and (
            self.attrs is None or len(self.attrs) != 1
        ):
            raise ValueError("stage-2 specs must filter exactly one attribute")


def stage_spec(stage_id: str, *, finetune_upsampler: bool = False) -> StageSpec:
    """Canonical StageSpec for one of {1, 2nc, 2li, 2fo, 3}."""
    if stage_id == "1":
        return StageSpec(
            "1", "stage1",
            ((("shallow.", "backbone.", "mogm.", "upsample."), 1.0),),
            None,
        )
    if stage_id == "2nc":
        return StageSpec("2nc", "nc", ((("agm.nc.",), 1.0),), ("normal",))
    if stage_id == "2li":
        return StageSpec("2li", "li", ((("agm.li.",), 1.0),), ("lowlight",))
    if stage_id == "2fo":
        return StageSpec("2fo", "fo", ((("agm.fo.",), 1.0),), ("fog",))
    if stage_id == "3":
        half = ("mogm.", "upsample.") if finetune_upsampler else ("mogm.",)
        return StageSpec("3", "full", ((("afm.",), 1.0), (half, 0.5)), None)
    raise ValueError(f"unknown stage id {stage_id!r}")


class PairLoader:
    """Serves (LR thermal, degraded optical guide, GT thermal) triples.

    Images come back as channel-first float32 arrays in [0, 1].  Every load
    is recorded in `.reads` as the record's attribute tag, so routing can be
    audited after a run.
    """

    def __init__(self, manifest_path):
        self.root = Path(manifest_path).parent
        self.reads: list[str] = []

    def load(self, rec):
        self.reads.append(rec.attr)
        lr = read_pgm16(lr_path(self.root, rec))
        guide = read_ppm8(guide_path(self.root, rec))
        gt = read_pgm16(self.root / rec.thermal)
        h, w = lr.shape
        if guide.shape[0] % h or gt.shape[0] % h:
            raise ValueError(
                f"record {record_stem(rec)}: guide/GT sizes are not an "
                f"integer multiple of the LR size"
            )
        return (
            lr[None].astype(np.float32),
            guide.transpose(2, 0, 1).astype(np.float32),
            gt[None].astype(np.float32),
        )


def _crop_size(h: int, w: int, crop_lr: int, window: int) -> int:
    c = min(crop_lr, h, w) // window * window
    if c < window:
        raise ValueError(
            f"LR images of {h}x{w} cannot fit one {window}-pixel window crop"
        )
    return c


def assemble_batch(records, loader: PairLoader, rng: SeededRng, *,
                   crop_lr: int, window: int, scale: int):
    """Window-aligned random crops, stacked channel-first.

    Crop origins are drawn from `rng` in window multiples so any shifted
    partition of the patch stays valid; the optical and GT crops are the
    co-located `scale`-times larger regions.
    """
    triples = [loader.load(rec) for rec in records]
    c = min(
        _crop_size(lr.shape[1], lr.shape[2], crop_lr, window)
        for lr, _, _ in triples
    )
    xs, ys, gts = [], [], []
    for lr, guide, gt in triples:
        _, h, w = lr.shape
        i = int(rng.integers(0, (h - c) // window + 1)) * window
        j = int(rng.integers(0, (w - c) // window + 1)) * window
        xs.append(lr[:, i:i + c, j:j + c])
        s = scale
        ys.append(guide[:, s * i:s * (i + c), s * j:s * (j + c)])
        gts.append(gt[:, s * i:s * (i + c), s * j:s * (j + c)])
    return (
        Tensor(np.stack(xs)),
        Tensor(np.stack(ys)),
        Tensor(np.stack(gts)),
    )


def run_stage(model, spec: StageSpec, records, loader: PairLoader, *,
              steps: int, batch_size: int = 8, base_lr: float = 1e-4,
              crop_lr: int = 48, seed: int = 0,
              steps_per_epoch: int | None = None):
    """Train one stage; returns the loss log as (step, stage, lr, loss) rows.

    The batch drawn at step k is a pure function of (seed, k): record indices
    and crop origins come from a per-step child stream, so runs are
    bit-reproducible and stages could prefetch batches without changing
    results.
    """
    records = [
        r for r in records if spec.attrs is None or r.attr in spec.attrs
    ]
    if not records:
        raise ValueError(
            f"stage {spec.stage_id}: no manifest records carry "
            f"attribute(s) {spec.attrs}"
        )
    set_trainable(model, spec.patterns)
    named = list(model.named_parameters())
    groups = []
    scales = []
    for prefixes, scale_factor in spec.lr_groups:
        params = [p for name, p in named if name.startswith(tuple(prefixes))]
        groups.append({"params": params, "lr": base_lr * scale_factor})
        scales.append(scale_factor)
    opt = Adam(groups)
    if steps_per_epoch is None:
        steps_per_epoch = max(1, math.ceil(len(records) / batch_size))
    root = SeededRng(seed).child("stage", spec.stage_id)
    rows = []
    for step in range(steps):
        step_rng = root.child("step", step)
        idx = step_rng.integers(0, len(records), size=batch_size)
        batch = [records[int(i)] for i in idx]
        x, y, gt = assemble_batch(
            batch, loader, step_rng,
            crop_lr=crop_lr, window=model.cfg.window, scale=model.cfg.scale,
        )
        model.zero_grad()
        out = model(x, y, spec.stage_mode)
        loss = l1_loss(out, gt)
        loss.backward()
        lr = lr_at_epoch(base_lr, step // steps_per_epoch)
        for g, scale_factor in zip(opt.groups, scales):
            g["lr"] = lr * scale_factor
        opt.step()
        rows.append((step, spec.stage_id, lr, float(loss.data)))
    return rows


def write_loss_log(path, rows) -> None:
    """Loss log as CSV: step,stage,lr,loss — stable bytes for a given log."""
    lines = ["step,stage,lr,loss"]
    for step, stage, lr, loss in rows:
        lines.append(f"{step},{stage},{lr!r},{loss!r}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def plot_loss_curve(path, rows) -> None:
    """Render the loss trajectory (one line per stage) to a PNG file."""
    import matplotlib

    matplotlib.use("Agg", force=True)
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(7, 4))
    by_stage: dict[str, list[tuple[int, float]]] = {}
    for step, stage, _, loss in rows:
        by_stage.setdefault(stage, []).append((step, loss))
    offset = 0
    for stage, pts in by_stage.items():
        xs = [offset + k for k in range(len(pts))]
        ax.plot(xs, [p[1] for p in pts], label=f"stage {stage}")
        offset += len(pts)
    ax.set_xlabel("step (stages concatenated)")
    ax.set_ylabel("L1 loss")
    ax.set_yscale("log")
    if by_stage:
        ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
