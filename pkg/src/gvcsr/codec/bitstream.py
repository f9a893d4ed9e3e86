"""Single-image bitstream: header, DC-DPCM stream, coefficient stream.

Layout (all integers little-endian)::

    magic "GVCB" | version u16 | width u32 | height u32 | patch_size u16
    | dictionary hash 16 bytes | quant step f64 | atom count M u32
    | dc bit length u32 | coef bit length u32 | dc bytes | coef bytes

Each stream is zero-padded to a byte boundary only at its end.  DC residuals
are signed Exp-Golomb.  Each patch's coefficient levels are run-length coded;
a run ``r`` is sent as unsigned Exp-Golomb ``r + 1`` with ``0`` reserved for
end-of-block, and each level as signed Exp-Golomb.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from ..admm import DictionaryFactors, SparseCodingParams, sparse_code
from ..pursuit import PursuitStop, omp_batch
from .bitio import BitReader, BitWriter, TruncatedStream
from .blocks import (
    EOB,
    QuantizerConfig,
    dc_dpcm_decode,
    dc_dpcm_encode,
    dequantize,
    from_patches,
    quantize,
    round_half_away,
    runlength_decode,
    runlength_encode,
    to_patches,
)
from .entropy import read_se, read_ue, write_se, write_ue
from .image import GrayImage

__all__ = [
    "Bitstream",
    "BitstreamError",
    "DictionaryMismatch",
    "EncodeResult",
    "encode_image",
    "encode_image_full",
    "decode_image",
    "code_coefficients",
    "psnr",
    "bpp",
]

MAGIC = b"GVCB"
VERSION = 1
_HEADER = struct.Struct("<4sHIIH16sdIII")


class BitstreamError(ValueError):
    pass


class DictionaryMismatch(BitstreamError):
    pass


@dataclass
class Bitstream:
    width: int
    height: int
    patch_size: int
    dict_hash: bytes
    step: float
    m: int
    dc_stream: bytes
    dc_bits: int
    coef_stream: bytes
    coef_bits: int
    version: int = VERSION

    def to_bytes(self):
        head = _HEADER.pack(
            MAGIC, self.version, self.width, self.height, self.patch_size,
            self.dict_hash, self.step, self.m, self.dc_bits, self.coef_bits,
        )
        return head + self.dc_stream + self.coef_stream

    @classmethod
    def from_bytes(cls, buf):
        buf = bytes(buf)
        if len(buf) < _HEADER.size:
            raise BitstreamError("truncated header")
        magic, ver, w, h, p, dh, step, m, dcb, cfb = _HEADER.unpack_from(buf)
        if magic != MAGIC:
            raise BitstreamError("bad magic")
        if ver != VERSION:
            raise BitstreamError(f"unsupported version {ver}")
        n_dc = (dcb + 7) // 8
        n_cf = (cfb + 7) // 8
        if len(buf) != _HEADER.size + n_dc + n_cf:
            raise BitstreamError("stream length does not match header")
        off = _HEADER.size
        return cls(w, h, p, dh, step, m, buf[off:off + n_dc], dcb,
                   buf[off + n_dc:off + n_dc + n_cf], cfb, ver)

    @property
    def total_bits(self):
        return 8 * (_HEADER.size + len(self.dc_stream) + len(self.coef_stream))


@dataclass
class EncodeResult:
    bitstream: Bitstream
    reconstruction: GrayImage
    coefficients: np.ndarray  # unquantized codes, (M, patches)
    levels: np.ndarray  # quantized levels, (M, patches)


def code_coefficients(residuals, atoms, coder, factors=None):
    """Sparse-code patch residuals with GVCSR (``SparseCodingParams``) or OMP
    (``PursuitStop``); all patches of the image are coded jointly."""
    if isinstance(coder, SparseCodingParams):
        a, _ = sparse_code(residuals, atoms, coder, factors=factors)
        return a
    if isinstance(coder, PursuitStop):
        return omp_batch(residuals, atoms, coder)[0]
    raise TypeError(f"unknown coder {coder!r}")


def _reconstruct(levels, atoms, step, dc_q, p, rows, cols, w, h):
    vecs = atoms @ dequantize(levels, step) + dc_q.astype(float)
    px = from_patches(vecs, p, rows, cols, w, h)
    return GrayImage(np.clip(round_half_away(px), 0, 255).astype(np.uint8))


def _atoms(d):
    return d.atoms if hasattr(d, "atoms") else np.asarray(d, dtype=float)


def encode_image_full(img, d, coder, q, factors=None):
    """Encode and also return the encoder-side reconstruction."""
    atoms = _atoms(d)
    step = q.step if isinstance(q, QuantizerConfig) else float(QuantizerConfig(q).step)
    n = atoms.shape[0]
    p = int(round(np.sqrt(n)))
    if p * p != n:
        raise ValueError(f"dictionary rows ({n}) are not a square patch size")
    grid = to_patches(img, p)
    coeffs = code_coefficients(grid.residuals, atoms, coder, factors)
    levels = quantize(coeffs, step)

    dc_res = dc_dpcm_encode(grid.dc, grid.rows, grid.cols)
    w_dc = BitWriter()
    for v in dc_res:
        write_se(w_dc, int(v))
    w_cf = BitWriter()
    for k in range(grid.count):
        for item in runlength_encode(levels[:, k]):
            if item is EOB:
                write_ue(w_cf, 0)
            else:
                write_ue(w_cf, item[0] + 1)
                write_se(w_cf, item[1])

    bs = Bitstream(
        width=grid.width, height=grid.height, patch_size=p,
        dict_hash=d.hash if hasattr(d, "hash") else bytes(16),
        step=step, m=atoms.shape[1],
        dc_stream=w_dc.getvalue(), dc_bits=w_dc.nbits,
        coef_stream=w_cf.getvalue(), coef_bits=w_cf.nbits,
    )
    dc_q = round_half_away(grid.dc)
    recon = _reconstruct(levels, atoms, step, dc_q, p, grid.rows, grid.cols, grid.width, grid.height)
    return EncodeResult(bs, recon, coeffs, levels)


def encode_image(img, d, coder, q):
    return encode_image_full(img, d, coder, q).bitstream


def decode_image(bs, d):
    """Reconstruct the image from a :class:`Bitstream` (or its bytes)."""
    if isinstance(bs, (bytes, bytearray)):
        bs = Bitstream.from_bytes(bs)
    atoms = _atoms(d)
    if hasattr(d, "hash") and d.hash != bs.dict_hash:
        raise DictionaryMismatch("dictionary hash does not match bitstream")
    if atoms.shape != (bs.patch_size ** 2, bs.m):
        raise DictionaryMismatch("dictionary shape does not match bitstream")
    p = bs.patch_size
    rows = -(-bs.height // p)
    cols = -(-bs.width // p)
    count = rows * cols
    try:
        r_dc = BitReader(bs.dc_stream, bs.dc_bits)
        dc_res = [read_se(r_dc) for _ in range(count)]
        r_cf = BitReader(bs.coef_stream, bs.coef_bits)
        levels = np.zeros((bs.m, count), dtype=np.int64)
        for k in range(count):
            pairs = []
            pos = 0
            while pos < bs.m:
                u = read_ue(r_cf)
                if u == 0:
                    pairs.append(EOB)
                    break
                level = read_se(r_cf)
                pairs.append((u - 1, level))
                pos += u
            levels[:, k] = runlength_decode(pairs, bs.m)
    except TruncatedStream as exc:
        raise BitstreamError(str(exc)) from exc
    if r_dc.remaining or r_cf.remaining:
        raise BitstreamError("trailing bits in stream")
    dc_q = dc_dpcm_decode(dc_res, rows, cols)
    return _reconstruct(levels, atoms, bs.step, dc_q, p, rows, cols, bs.width, bs.height)


def psnr(a, b):
    """PSNR in dB over the 8-bit range; ``inf`` for identical images."""
    pa = a.pixels if isinstance(a, GrayImage) else np.asarray(a)
    pb = b.pixels if isinstance(b, GrayImage) else np.asarray(b)
    if pa.shape != pb.shape:
        raise ValueError("image dimensions differ")
    mse = np.mean((pa.astype(float) - pb.astype(float)) ** 2)
    if mse == 0:
        return float("inf")
    return float(10.0 * np.log10(255.0 ** 2 / mse))


def bpp(bs, img):
    px = img.width * img.height if isinstance(img, GrayImage) else int(img)
    return bs.total_bits / px
