"""8-bit grayscale images and binary PGM (P5) I/O."""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

__all__ = ["GrayImage", "read_pgm", "write_pgm", "to_luma", "PgmError"]


class PgmError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class GrayImage:
    pixels: np.ndarray  # (height, width) uint8

    def __post_init__(self):
        p = np.asarray(self.pixels)
        if p.ndim != 2 or p.size == 0:
            raise ValueError("image must be a nonempty 2-D array")
        if p.dtype != np.uint8:
            if np.any((p < 0) | (p > 255)) or np.any(p != np.round(p)):
                raise ValueError("pixels must be integers in [0, 255]")
            p = p.astype(np.uint8)
        object.__setattr__(self, "pixels", np.ascontiguousarray(p))

    @property
    def height(self):
        return self.pixels.shape[0]

    @property
    def width(self):
        return self.pixels.shape[1]

    def __eq__(self, other):
        return isinstance(other, GrayImage) and np.array_equal(self.pixels, other.pixels)

    __hash__ = None


_TOKEN = re.compile(rb"(?:\s|#[^\n]*\n)*(\S+)")


def _parse_header(data):
    pos = 0
    fields = []
    for _ in range(4):
        m = _TOKEN.match(data, pos)
        if not m:
            raise PgmError("truncated PGM header")
        fields.append(m.group(1))
        pos = m.end()
    return fields, pos + 1  # single whitespace byte before the raster


def read_pgm(path_or_bytes):
    """Read a binary 8-bit PGM file (or its bytes)."""
    if isinstance(path_or_bytes, (bytes, bytearray)):
        data = bytes(path_or_bytes)
    else:
        with open(path_or_bytes, "rb") as f:
            data = f.read()
    (magic, w, h, maxval), start = _parse_header(data)
    if magic != b"P5":
        raise PgmError("only binary P5 PGM is supported")
    try:
        w, h, maxval = int(w), int(h), int(maxval)
    except ValueError:
        raise PgmError("non-numeric PGM header field") from None
    if maxval != 255:
        raise PgmError("only 8-bit PGM (maxval 255) is supported")
    raster = data[start:start + w * h]
    if len(raster) != w * h:
        raise PgmError("truncated PGM raster")
    return GrayImage(np.frombuffer(raster, dtype=np.uint8).reshape(h, w).copy())


def pgm_bytes(img):
    return b"P5\n%d %d\n255\n" % (img.width, img.height) + img.pixels.tobytes()


def write_pgm(path, img):
    with open(path, "wb") as f:
        f.write(pgm_bytes(img))


def to_luma(rgb):
    """Integer BT.601 luma: ``(77 R + 150 G + 29 B + 128) >> 8``."""
    rgb = np.asarray(rgb).astype(np.int32)
    y = (77 * rgb[..., 0] + 150 * rgb[..., 1] + 29 * rgb[..., 2] + 128) >> 8
    return GrayImage(np.clip(y, 0, 255).astype(np.uint8))
