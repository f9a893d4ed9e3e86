"""Block stages of the codec: patching, DC prediction, quantization and
run-length coding of coefficient vectors."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .image import GrayImage

__all__ = [
    "PatchGrid",
    "QuantizerConfig",
    "EOB",
    "round_half_away",
    "to_patches",
    "from_patches",
    "dc_dpcm_encode",
    "dc_dpcm_decode",
    "quantize",
    "dequantize",
    "runlength_encode",
    "runlength_decode",
]

#: end-of-block marker in run-length sequences
EOB = None


def round_half_away(x):
    x = np.asarray(x, dtype=float)
    return (np.sign(x) * np.floor(np.abs(x) + 0.5)).astype(np.int64)


@dataclass
class PatchGrid:
    """Patches in raster order; residual vectors are the columns of ``residuals``."""

    patch_size: int
    cols: int
    rows: int
    width: int
    height: int
    dc: np.ndarray  # (rows * cols,)
    residuals: np.ndarray  # (patch_size**2, rows * cols)

    @property
    def count(self):
        return self.rows * self.cols


def to_patches(img, patch_size=8):
    """Split into non-overlapping patches; partial edge patches are padded by
    edge replication.  Each patch is flattened column-major after its mean
    (the DC) is removed."""
    if patch_size < 1:
        raise ValueError("patch_size must be >= 1")
    px = img.pixels if isinstance(img, GrayImage) else np.asarray(img)
    if px.size == 0:
        raise ValueError("empty image")
    h, w = px.shape
    rows = -(-h // patch_size)
    cols = -(-w // patch_size)
    padded = np.pad(
        px.astype(float), ((0, rows * patch_size - h), (0, cols * patch_size - w)), mode="edge"
    )
    # (rows, p, cols, p) -> (rows, cols, p_col, p_row) so ravel is column-major
    blocks = padded.reshape(rows, patch_size, cols, patch_size).transpose(0, 2, 3, 1)
    vecs = blocks.reshape(rows * cols, patch_size * patch_size).T
    dc = vecs.mean(axis=0)
    return PatchGrid(patch_size, cols, rows, w, h, dc, vecs - dc)


def from_patches(vectors, patch_size, rows, cols, width, height):
    """Inverse of the patch layout: columns of ``vectors`` back to an image
    array (float), cropped to ``height x width``."""
    p = patch_size
    blocks = np.asarray(vectors).T.reshape(rows, cols, p, p).transpose(0, 3, 1, 2)
    return blocks.reshape(rows * p, cols * p)[:height, :width]


def _neighbors(i, rows, cols):
    r, c = divmod(i, cols)
    out = []
    if c > 0:
        out.append(i - 1)
    if r > 0:
        out.append(i - cols)
        if c > 0:
            out.append(i - cols - 1)
        if c + 1 < cols:
            out.append(i - cols + 1)
    return out


def _predict(dc_int, i, rows, cols):
    nb = _neighbors(i, rows, cols)
    if not nb:
        return 128
    return int(round_half_away(sum(int(dc_int[j]) for j in nb) / len(nb)))


def dc_dpcm_encode(dc, rows, cols):
    """Residuals of rounded DCs against the mean of the causal neighbors
    (left, top, top-left, top-right); the first patch predicts 128."""
    q = round_half_away(dc)
    return np.array([int(q[i]) - _predict(q, i, rows, cols) for i in range(rows * cols)], dtype=np.int64)


def dc_dpcm_decode(residuals, rows, cols):
    q = np.zeros(rows * cols, dtype=np.int64)
    for i in range(rows * cols):
        q[i] = int(residuals[i]) + _predict(q, i, rows, cols)
    return q


@dataclass(frozen=True)
class QuantizerConfig:
    step: float

    def __post_init__(self):
        if not self.step > 0:
            raise ValueError("quantizer step must be positive")


def quantize(coeffs, q):
    """Uniform mid-tread quantizer, round half away from zero."""
    step = q.step if isinstance(q, QuantizerConfig) else float(q)
    return round_half_away(np.asarray(coeffs, dtype=float) / step)


def dequantize(levels, q):
    step = q.step if isinstance(q, QuantizerConfig) else float(q)
    return np.asarray(levels, dtype=float) * step


def runlength_encode(levels):
    """``[(zero_run, level), ..., EOB]``; EOB is omitted only when the last
    entry is nonzero."""
    out = []
    run = 0
    for v in levels:
        v = int(v)
        if v == 0:
            run += 1
        else:
            out.append((run, v))
            run = 0
    if run or not out:
        out.append(EOB)
    return out


def runlength_decode(pairs, m):
    levels = np.zeros(m, dtype=np.int64)
    pos = 0
    for item in pairs:
        if item is EOB:
            return levels
        run, v = item
        pos += run
        if pos >= m:
            raise ValueError("run-length pairs overflow the block")
        levels[pos] = v
        pos += 1
    if pos != m:
        raise ValueError("run-length block ended without EOB")
    return levels
