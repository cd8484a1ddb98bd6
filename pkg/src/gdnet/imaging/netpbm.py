"""Binary NetPBM image files.

Thermal planes are 16-bit P5 PGM (maxval 65535, big-endian samples);
optical frames are 8-bit P6 PPM (maxval 255).  Values map linearly to
[0,1] on read, and write(read(file)) reproduces the file byte for byte.
"""

from __future__ import annotations

import numpy as np


class NetpbmError(ValueError):
    """Malformed NetPBM data; carries the byte offset of the failure."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


def _read_header_token(buf: bytes, pos: int) -> tuple[bytes, int]:
    """Next whitespace-delimited token, skipping '#' comments."""
    n = len(buf)
    while pos < n:
        c = buf[pos:pos + 1]
        if c == b"#":
            while pos < n and buf[pos:pos + 1] != b"\n":
                pos += 1
        elif c.isspace():
            pos += 1
        else:
            break
    if pos >= n:
        raise NetpbmError("unexpected end of header", pos)
    start = pos
    while pos < n and not buf[pos:pos + 1].isspace():
        pos += 1
    return buf[start:pos], pos


def _parse_header(buf: bytes, magic: bytes, maxval: int):
    tok, pos = _read_header_token(buf, 0)
    if tok != magic:
        raise NetpbmError(f"expected {magic.decode()} magic, found {tok[:8].decode(errors='replace')}", 0)
    fields = []
    for name in ("width", "height", "maxval"):
        tok, pos = _read_header_token(buf, pos)
        try:
            fields.append(int(tok))
        except ValueError:
            raise NetpbmError(f"non-numeric {name} field", pos - len(tok)) from None
    width, height, mv = fields
    if width <= 0 or height <= 0:
        raise NetpbmError(f"non-positive dimensions {width}x{height}", pos)
    if mv != maxval:
        raise NetpbmError(f"expected maxval {maxval}, found {mv}", pos)
    # exactly one whitespace byte separates header from raster
    if pos >= len(buf) or not buf[pos:pos + 1].isspace():
        raise NetpbmError("missing raster separator", pos)
    return width, height, pos + 1


def read_pgm16(path) -> np.ndarray:
    """Read a 16-bit P5 PGM into an (H, W) float array in [0,1]."""
    with open(path, "rb") as f:
        buf = f.read()
    width, height, pos = _parse_header(buf, b"P5", 65535)
    need = width * height * 2
    if len(buf) - pos < need:
        raise NetpbmError(
            f"truncated raster: need {need} bytes, have {len(buf) - pos}", len(buf)
        )
    raw = np.frombuffer(buf, dtype=">u2", count=width * height, offset=pos)
    return raw.reshape(height, width).astype(np.float64) / 65535.0


def write_pgm16(path, img: np.ndarray):
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 2:
        raise ValueError(f"thermal plane must be 2-d, got shape {img.shape}")
    h, w = img.shape
    q = np.round(np.clip(img, 0.0, 1.0) * 65535.0).astype(">u2")
    with open(path, "wb") as f:
        f.write(b"P5\n%d %d\n65535\n" % (w, h))
        f.write(q.tobytes())


def read_ppm8(path) -> np.ndarray:
    """Read an 8-bit P6 PPM into an (H, W, 3) float array in [0,1]."""
    with open(path, "rb") as f:
        buf = f.read()
    width, height, pos = _parse_header(buf, b"P6", 255)
    need = width * height * 3
    if len(buf) - pos < need:
        raise NetpbmError(
            f"truncated raster: need {need} bytes, have {len(buf) - pos}", len(buf)
        )
    raw = np.frombuffer(buf, dtype=np.uint8, count=need, offset=pos)
    return raw.reshape(height, width, 3).astype(np.float64) / 255.0


def write_ppm8(path, img: np.ndarray):
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError(f"optical image must be HxWx3, got shape {img.shape}")
    h, w, _ = img.shape
    q = np.round(np.clip(img, 0.0, 1.0) * 255.0).astype(np.uint8)
    with open(path, "wb") as f:
        f.write(b"P6\n%d %d\n255\n" % (w, h))
        f.write(q.tobytes())
