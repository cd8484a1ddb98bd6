"""Command-line front-end: synth, degrade, train, infer, eval.

Every command is a pure function of (config, seed, input files): reruns with
identical inputs produce byte-identical outputs.  GDNET_THREADS caps the
worker count of the internally parallel commands (degrade, eval); results do
not depend on it because per-record work is independently seeded and reduced
in manifest order.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from gdnet.eval.report import (
    evaluate_pairs,
    format_report,
    write_report,
    write_report_figure,
)
from gdnet.imaging.degrade import degrade_optical, degrade_thermal
from gdnet.imaging.manifest import (
    ManifestRecord,
    assign_attribute,
    guide_path,
    lr_path,
    read_manifest,
    record_stem,
    sr_path,
    write_manifest,
)
from gdnet.imaging.netpbm import read_pgm16, read_ppm8, write_pgm16, write_ppm8
from gdnet.imaging.toyscene import generate_toy_pair
from gdnet.model.config import PRESETS, GDNetConfig
from gdnet.model.network import GDNet
from gdnet.numcore.rng import SeededRng
from gdnet.numcore.tensor import Tensor
from gdnet.train.checkpoint import (
    load_checkpoint,
    read_checkpoint,
    save_checkpoint,
)
from gdnet.train.stages import (
    PairLoader,
    plot_loss_curve,
    run_stage,
    stage_spec,
    write_loss_log,
)

STAGE_CHOICES = ("1", "2nc", "2li", "2fo", "3", "all")


class ConfigError(ValueError):
    """Raised for unknown keys, type mismatches, or missing required values."""


def worker_count() -> int:
    """Worker cap: GDNET_THREADS when set, else the machine's CPU count."""
    env = os.environ.get("GDNET_THREADS")
    if env is not None:
        try:
            n = int(env)
        except ValueError:
            raise ConfigError(f"GDNET_THREADS must be an integer, got {env!r}")
        if n < 1:
            raise ConfigError(f"GDNET_THREADS must be >= 1, got {n}")
        return n
    return os.cpu_count() or 1


_REQUIRED = object()

# name -> (type, default); _REQUIRED means the config file must provide it.
TRAIN_SCHEMA = {
    "manifest": (str, _REQUIRED),
    "out": (str, _REQUIRED),
    "preset": (str, "tiny"),
    "scale": (int, 4),
    "seed": (int, 0),
    "stage": (str, "all"),
    "steps": (int, 500),
    "batch_size": (int, 8),
    "base_lr": (float, 1e-4),
    "crop_lr": (int, 48),
    "steps_per_epoch": (int, None),
    "finetune_upsampler": (bool, False),
    "init_checkpoint": (str, None),
}


def parse_config(path, overrides: dict | None = None) -> dict:
    """Resolve a JSON train config against the schema; flags take precedence.

    Unknown keys, wrong types, and missing required values raise ConfigError
    naming the offending key.
    """
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ConfigError(f"config {path} is not valid JSON: {e}")
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    for key, value in (overrides or {}).items():
        if value is not None:
            raw[key] = value
    cfg = {}
    for key, value in raw.items():
        if key not in TRAIN_SCHEMA:
            raise ConfigError(f"unknown config key {key!r}")
        want, default = TRAIN_SCHEMA[key]
        if value is None and default is not _REQUIRED:
            cfg[key] = None
            continue
        if want is float and isinstance(value, int) and not isinstance(value, bool):
            value = float(value)
        if not isinstance(value, want) or (
            want is int and isinstance(value, bool)
        ):
            raise ConfigError(
                f"config key {key!r} expects {want.__name__}, "
                f"got {type(value).__name__}"
            )
        cfg[key] = value
    for key, (_, default) in TRAIN_SCHEMA.items():
        if key not in cfg:
            if default is _REQUIRED:
                raise ConfigError(f"missing required config key {key!r}")
            cfg[key] = default
    if cfg["preset"] not in PRESETS:
        raise ConfigError(
            f"config key 'preset' must be one of {sorted(PRESETS)}, "
            f"got {cfg['preset']!r}"
        )
    if cfg["stage"] not in STAGE_CHOICES:
        raise ConfigError(
            f"config key 'stage' must be one of {STAGE_CHOICES}, "
            f"got {cfg['stage']!r}"
        )
    # Materialize the model preset now so bad scale/preset combos fail here.
    try:
        model_cfg = PRESETS[cfg["preset"]](cfg["scale"])
    except ValueError as e:
        raise ConfigError(str(e))
    return {**cfg, "model": model_cfg.to_dict()}


def cmd_synth(out_dir, n: int, seed: int, size: int) -> int:
    """Write n toy optical/thermal pairs plus a manifest under out_dir."""
    out = Path(out_dir)
    (out / "hr").mkdir(parents=True, exist_ok=True)
    (out / "optical").mkdir(parents=True, exist_ok=True)
    root = SeededRng(seed)
    records = []
    for i in range(n):
        stem = f"{i:05d}"
        optical, thermal = generate_toy_pair(root.child("pair", i), size, size)
        write_ppm8(out / "optical" / f"{stem}.ppm", optical)
        write_pgm16(out / "hr" / f"{stem}.pgm", thermal)
        records.append(ManifestRecord(
            optical=f"optical/{stem}.ppm",
            thermal=f"hr/{stem}.pgm",
            attr=assign_attribute(i),
            mode="BI",
            scale=4,
            seed=i,
        ))
    write_manifest(out / "manifest.jsonl", records)
    print(f"synth: wrote {n} pairs of {size}x{size} under {out}")
    return 0


def cmd_degrade(manifest_path, scale: int, mode: str, seed: int,
                workers: int | None = None) -> int:
    """Produce degraded guides and LR thermals for every manifest record.

    Rewrites the manifest with the chosen mode/scale.  Per-record randomness
    is keyed by (seed, record seed), so the output is identical no matter how
    many workers run.
    """
    manifest_path = Path(manifest_path)
    records = read_manifest(manifest_path)
    root = manifest_path.parent
    (root / "guide").mkdir(exist_ok=True)
    lr_dir = root / f"lr_{mode.lower()}_x{scale}"
    lr_dir.mkdir(exist_ok=True)
    base = SeededRng(seed)
    updated = [
        ManifestRecord(r.optical, r.thermal, r.attr, mode, scale, r.seed)
        for r in records
    ]

    def job(rec: ManifestRecord):
        rng = base.child("record", rec.seed)
        optical = read_ppm8(root / rec.optical)
        thermal = read_pgm16(root / rec.thermal)
        guide = degrade_optical(optical, rec.attr, rng)
        lr = degrade_thermal(thermal, scale, mode)
        write_ppm8(guide_path(root, rec), guide)
        write_pgm16(lr_path(root, rec), lr)

    nw = workers if workers is not None else worker_count()
    if nw > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=nw) as pool:
            list(pool.map(job, updated))
    else:
        for rec in updated:
            job(rec)
    write_manifest(manifest_path, updated)
    print(f"degrade: {len(records)} records -> {lr_dir.name}, guide ({mode} x{scale})")
    return 0


def _build_model(cfg: dict) -> GDNet:
    model_cfg = GDNetConfig.from_dict(cfg["model"])
    return GDNet(model_cfg, SeededRng(cfg["seed"]).child("init"))


def cmd_train(config_path, stage: str | None = None,
              seed: int | None = None) -> int:
    """Run the requested stage (or the full three-stage protocol)."""
    cfg = parse_config(config_path, {"stage": stage, "seed": seed})
    print("train config:", json.dumps(cfg, sort_keys=True))
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    model = _build_model(cfg)
    if cfg["init_checkpoint"]:
        load_checkpoint(cfg["init_checkpoint"], model)
    records = read_manifest(cfg["manifest"])
    loader = PairLoader(cfg["manifest"])
    stages = (
        ("1", "2nc", "2li", "2fo", "3") if cfg["stage"] == "all"
        else (cfg["stage"],)
    )
    echo = {"model": cfg["model"], "train": {
        k: v for k, v in cfg.items() if k != "model"
    }}
    rows = []
    for sid in stages:
        spec = stage_spec(sid, finetune_upsampler=cfg["finetune_upsampler"])
        rows += run_stage(
            model, spec, records, loader,
            steps=cfg["steps"], batch_size=cfg["batch_size"],
            base_lr=cfg["base_lr"], crop_lr=cfg["crop_lr"],
            seed=cfg["seed"], steps_per_epoch=cfg["steps_per_epoch"],
        )
        save_checkpoint(out / f"stage{sid}.ckpt", model, echo)
        print(f"train: stage {sid} done, loss {rows[-1][3]:.6f}")
    save_checkpoint(out / "final.ckpt", model, echo)
    write_loss_log(out / "loss_log.csv", rows)
    plot_loss_curve(out / "loss_curve.png", rows)
    print(f"train: wrote {out / 'final.ckpt'}, loss_log.csv, loss_curve.png")
    return 0


def cmd_infer(checkpoint_path, manifest_path, out_dir) -> int:
    """Super-resolve every manifest record's LR thermal into out_dir."""
    checkpoint_path = Path(checkpoint_path)
    if not checkpoint_path.exists():
        raise ConfigError(f"missing checkpoint: {checkpoint_path}")
    manifest_path = Path(manifest_path)
    records = read_manifest(manifest_path)
    root = manifest_path.parent
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    # The checkpoint's config echo fixes the architecture.
    echo, _ = read_checkpoint(checkpoint_path)
    model_cfg = GDNetConfig.from_dict(echo["model"])
    model = GDNet(model_cfg, SeededRng(0))
    load_checkpoint(checkpoint_path, model)
    for rec in records:
        lr = read_pgm16(lr_path(root, rec))
        guide = read_ppm8(guide_path(root, rec))
        x = Tensor(lr[None, None].astype(np.float32))
        y = Tensor(guide.transpose(2, 0, 1)[None].astype(np.float32))
        sr = model(x, y, "full").data[0, 0]
        write_pgm16(sr_path(out, rec), np.clip(sr, 0.0, 1.0))
    print(f"infer: wrote {len(records)} SR planes to {out}")
    return 0


def cmd_eval(manifest_path, sr_dir, report_path) -> int:
    """Score SR outputs, write the CSV report and its figure, print a table."""
    report = evaluate_pairs(manifest_path, sr_dir, workers=worker_count())
    report_file = Path(report_path)
    report_file.parent.mkdir(parents=True, exist_ok=True)
    write_report(report, report_file)
    png = write_report_figure(report, report_file)
    print(format_report(report))
    print(f"eval: wrote {report_file} and {png}")
    if report.missing:
        print(f"eval: {len(report.missing)} record(s) missing SR output",
              file=sys.stderr)
        return 1
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="gdnet",
        description="Optics-guided thermal super-resolution toolkit",
    )
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", help="generate toy optical/thermal pairs")
    s.add_argument("--out", required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--size", type=int, required=True)

    d = sub.add_parser("degrade", help="derive guides and LR thermals")
    d.add_argument("--manifest", required=True)
    d.add_argument("--scale", type=int, choices=(4, 8), required=True)
    d.add_argument("--mode", choices=("BI", "BD"), required=True)
    d.add_argument("--seed", type=int, required=True)

    t = sub.add_parser("train", help="run training stages")
    t.add_argument("--config", required=True)
    t.add_argument("--stage", choices=STAGE_CHOICES)
    t.add_argument("--seed", type=int)

    i = sub.add_parser("infer", help="super-resolve manifest records")
    i.add_argument("--checkpoint", required=True)
    i.add_argument("--manifest", required=True)
    i.add_argument("--out", required=True)

    e = sub.add_parser("eval", help="score SR outputs against ground truth")
    e.add_argument("--manifest", required=True)
    e.add_argument("--sr", required=True)
    e.add_argument("--report", required=True)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "synth":
            return cmd_synth(args.out, args.n, args.seed, args.size)
        if args.command == "degrade":
            return cmd_degrade(args.manifest, args.scale, args.mode, args.seed)
        if args.command == "train":
            return cmd_train(args.config, args.stage, args.seed)
        if args.command == "infer":
            return cmd_infer(args.checkpoint, args.manifest, args.out)
        if args.command == "eval":
            return cmd_eval(args.manifest, args.sr, args.report)
        raise AssertionError(f"unreachable command {args.command!r}")
    except (ValueError, FileNotFoundError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
