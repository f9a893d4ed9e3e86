"""Block-based sparse-representation image codec."""

from .bitstream import (
    Bitstream,
    BitstreamError,
    DictionaryMismatch,
    EncodeResult,
    bpp,
    code_coefficients,
    decode_image,
    encode_image,
    encode_image_full,
    psnr,
)
from .blocks import (
    EOB,
    PatchGrid,
    QuantizerConfig,
    dc_dpcm_decode,
    dc_dpcm_encode,
    dequantize,
    from_patches,
    quantize,
    runlength_decode,
    runlength_encode,
    to_patches,
)
from .image import GrayImage, PgmError, read_pgm, to_luma, write_pgm

__all__ = [
    "Bitstream", "BitstreamError", "DictionaryMismatch", "EncodeResult", "bpp",
    "code_coefficients", "decode_image", "encode_image", "encode_image_full", "psnr",
    "EOB", "PatchGrid", "QuantizerConfig", "dc_dpcm_decode", "dc_dpcm_encode",
    "dequantize", "from_patches", "quantize", "runlength_decode", "runlength_encode",
    "to_patches", "GrayImage", "PgmError", "read_pgm", "to_luma", "write_pgm",
]
