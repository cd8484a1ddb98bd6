"""Dataset manifests: one JSON record per line.

A record names the clean optical frame and the HR thermal ground truth,
plus the attribute tag, degradation mode, scale, and per-record seed.
Derived artifacts (degraded guide, LR thermal, super-resolved output)
live at conventional paths computed from the record, never stored.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

ATTRIBUTES = ("normal", "fog", "lowlight")
MODES = ("BI", "BD")
SCALES = (4, 8)


@dataclass
class ManifestRecord:
    optical: str   # path to clean optical PPM, relative to the manifest
    thermal: str   # path to HR thermal PGM, relative to the manifest
    attr: str
    mode: str
    scale: int
    seed: int


def assign_attribute(index: int) -> str:
    """Round-robin tagging keeps the three attributes balanced 1:1:1."""
    return ATTRIBUTES[index % 3]


def write_manifest(path, records: list[ManifestRecord]):
    path = Path(path)
    with open(path, "w", encoding="utf-8") as f:
        for rec in records:
            f.write(json.dumps(asdict(rec)) + "\n")


def read_manifest(path, check_files: bool = True) -> list[ManifestRecord]:
    path = Path(path)
    root = path.parent
    records = []
    seeds = set()
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                raise ValueError(f"{path}:{lineno}: invalid JSON record: {e}") from None
            missing = {"optical", "thermal", "attr", "mode", "scale", "seed"} - obj.keys()
            if missing:
                raise ValueError(f"{path}:{lineno}: missing keys {sorted(missing)}")
            rec = ManifestRecord(
                optical=str(obj["optical"]),
                thermal=str(obj["thermal"]),
                attr=str(obj["attr"]),
                mode=str(obj["mode"]),
                scale=int(obj["scale"]),
                seed=int(obj["seed"]),
            )
            if rec.attr not in ATTRIBUTES:
                raise ValueError(f"{path}:{lineno}: unknown attribute {rec.attr!r}")
            if rec.mode not in MODES:
                raise ValueError(f"{path}:{lineno}: unknown mode {rec.mode!r}")
            if rec.scale not in SCALES:
                raise ValueError(f"{path}:{lineno}: unsupported scale {rec.scale}")
            if rec.seed in seeds:
                raise ValueError(f"{path}:{lineno}: duplicate seed {rec.seed}")
            seeds.add(rec.seed)
            if check_files:
                for p in (rec.optical, rec.thermal):
                    if not (root / p).exists():
                        raise FileNotFoundError(f"{path}:{lineno}: missing file {root / p}")
            records.append(rec)
    return records


def record_stem(rec: ManifestRecord) -> str:
    return Path(rec.thermal).stem


def lr_path(root, rec: ManifestRecord) -> Path:
    """LR thermal input produced by `degrade` for this mode and scale."""
    return Path(root) / f"lr_{rec.mode.lower()}_x{rec.scale}" / f"{record_stem(rec)}.pgm"


def guide_path(root, rec: ManifestRecord) -> Path:
    """Attribute-degraded optical guide produced by `degrade`."""
    return Path(root) / "guide" / f"{record_stem(rec)}.ppm"


def sr_path(sr_dir, rec: ManifestRecord) -> Path:
    """Super-resolved output written by `infer` for this record."""
    return Path(sr_dir) / f"{record_stem(rec)}.pgm"
