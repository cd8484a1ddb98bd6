"""Named-parameter checkpoint store.

Binary layout, all integers little-endian:

    magic   4 bytes  b"GDNT"
    version u32
    cfg_len u32, then cfg_len bytes of UTF-8 JSON (the model config echo)
    repeated parameter records until end of file:
        name_len u32, name_len bytes UTF-8 name
        rank     u32, rank dims as u64
        payload  prod(dims) float32 values

Every model parameter appears exactly once; loads verify shape per name and
may restore just a name-prefix subset, which is how later training stages
reuse earlier ones.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

MAGIC = b"GDNT"
VERSION = 1


class CheckpointError(ValueError):
    """Raised for malformed checkpoint files or name/shape conflicts."""


class _Reader:
    def __init__(self, buf: bytes):
        self.buf = buf
        self.off = 0

    def take(self, n: int) -> bytes:
        if self.off + n > len(self.buf):
            raise CheckpointError(
                f"truncated checkpoint: need {n} bytes at offset {self.off}, "
                f"file ends at {len(self.buf)}"
            )
        out = self.buf[self.off:self.off + n]
        self.off += n
        return out

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    @property
    def exhausted(self) -> bool:
        return self.off >= len(self.buf)


def save_checkpoint(path, model, config: dict) -> None:
    """Write every named parameter of `model` plus a config echo."""
    blob = bytearray()
    blob += MAGIC
    blob += struct.pack("<I", VERSION)
    cfg_json = json.dumps(dict(config), sort_keys=True).encode("utf-8")
    blob += struct.pack("<I", len(cfg_json))
    blob += cfg_json
    for name, p in model.named_parameters():
        nb = name.encode("utf-8")
        # asarray (not ascontiguousarray) so rank-0 parameters keep shape ().
        arr = np.asarray(p.data, dtype="<f4")
        blob += struct.pack("<I", len(nb))
        blob += nb
        blob += struct.pack("<I", arr.ndim)
        blob += np.asarray(arr.shape, dtype="<u8").tobytes()
        blob += arr.tobytes()
    Path(path).write_bytes(blob)


def read_checkpoint(path):
    """Parse a checkpoint file into (config dict, {name: float32 array})."""
    r = _Reader(Path(path).read_bytes())
    magic = r.take(4)
    if magic != MAGIC:
        raise CheckpointError(f"bad magic {magic!r}, expected {MAGIC!r}")
    version = r.u32()
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    cfg = json.loads(r.take(r.u32()).decode("utf-8"))
    arrays: dict[str, np.ndarray] = {}
    while not r.exhausted:
        name = r.take(r.u32()).decode("utf-8")
        if name in arrays:
            raise CheckpointError(f"duplicate parameter record {name!r}")
        rank = r.u32()
        dims = np.frombuffer(r.take(8 * rank), dtype="<u8").astype(np.int64)
        count = int(np.prod(dims)) if rank else 1
        payload = r.take(4 * count)
        arrays[name] = np.frombuffer(payload, dtype="<f4").reshape(tuple(dims))
    return cfg, arrays


def load_checkpoint(path, model, prefix: str | None = None) -> dict:
    """Restore parameters from `path` into `model`; returns the config echo.

    With `prefix`, only records whose name starts with it are applied and the
    rest of the file is ignored; without it the file must cover the model's
    parameter set exactly.
    """
    cfg, arrays = read_checkpoint(path)
    params = dict(model.named_parameters())
    if prefix is None:
        unknown = sorted(set(arrays) - set(params))
        if unknown:
            raise CheckpointError(f"checkpoint names unknown to model: {unknown}")
        missing = sorted(set(params) - set(arrays))
        if missing:
            raise CheckpointError(f"checkpoint missing parameters: {missing}")
        chosen = arrays
    else:
        chosen = {n: a for n, a in arrays.items() if n.startswith(prefix)}
        if not chosen:
            raise CheckpointError(f"no checkpoint record matches prefix {prefix!r}")
        unknown = sorted(set(chosen) - set(params))
        if unknown:
            raise CheckpointError(f"checkpoint names unknown to model: {unknown}")
    for name, arr in chosen.items():
        p = params[name]
        if tuple(arr.shape) != tuple(p.data.shape):
            raise CheckpointError(
                f"shape conflict for {name!r}: file {tuple(arr.shape)} "
                f"vs model {tuple(p.data.shape)}"
            )
        p.data = arr.astype(p.data.dtype).copy()
    return cfg
