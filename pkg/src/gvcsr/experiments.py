"""Experiment drivers behind the CLI: variance-vs-bits, convergence traces
and rate-distortion sweeps.  Each returns plain row tuples; the CLI writes
them as CSV."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .admm import DictionaryFactors, SparseCodingParams, sparse_code
from .codec.bitstream import encode_image_full, psnr
from .codec.blocks import quantize, to_patches
from .codec.entropy import huffman_bits
from .pursuit import PursuitStop
from .rate_model import gaussian_entropy_bound, laplacian_entropy

__all__ = [
    "VARBITS_SCHEMA",
    "TRACE_SCHEMA",
    "RD_SCHEMA",
    "VARBITS_COLUMNS",
    "TRACE_COLUMNS",
    "RD_COLUMNS",
    "RdPoint",
    "laplacian_bits_per_sample",
    "varbits_rows",
    "trace_rows",
    "rd_point",
    "rd_sweep",
    "parse_coder",
]

VARBITS_SCHEMA = "gvcsr-varbits/1"
TRACE_SCHEMA = "gvcsr-trace/1"
RD_SCHEMA = "gvcsr-rd/1"
VARBITS_COLUMNS = ("variance", "bits_per_sample", "gaussian_bound", "laplacian_entropy")
TRACE_COLUMNS = ("iteration", "mse", "variance", "objective")
RD_COLUMNS = ("coder", "params", "quant", "bpp", "psnr", "mean_l0")


def laplacian_bits_per_sample(variance, n=20000, step=1.0, seed=0):
    """Huffman-coded bits/sample of a quantized zero-mean Laplacian source."""
    rng = np.random.default_rng(seed)
    if variance == 0:
        x = np.zeros(n)
    else:
        x = rng.laplace(0.0, np.sqrt(variance / 2.0), n)
    levels = quantize(x, step)
    return huffman_bits(levels.tolist()) / n


def varbits_rows(variances, n=20000, step=1.0, seed=0):
    rows = []
    for i, v in enumerate(variances):
        bits = laplacian_bits_per_sample(v, n, step, seed + i)
        g = gaussian_entropy_bound(v) - np.log2(step)
        lap = laplacian_entropy(v) - np.log2(step) if v > 0 else float("-inf")
        rows.append((float(v), bits, g, lap))
    return rows


def trace_rows(s, d, params):
    """Per-iteration ``(iteration, mse, variance, objective)`` of one solve.

    ``mse`` is ``||S - DA||_F^2 / S.size``; the objective includes both
    weights.
    """
    _, report = sparse_code(s, d, params, record=True)
    size = np.asarray(s).size
    return [(it, 2.0 * fid / size, var, obj) for it, fid, var, obj in report.trajectory], report


def parse_coder(text, alpha=None, beta=None, max_iters=2000):
    """``gvcsr`` | ``omp-l:L`` | ``omp-e:EPS`` -> coder object."""
    text = text.strip().lower()
    if text == "gvcsr":
        return SparseCodingParams(alpha=alpha, beta=beta, max_iters=max_iters)
    kind, _, arg = text.partition(":")
    if kind == "omp-l" and arg:
        return PursuitStop.L(int(arg))
    if kind == "omp-e" and arg:
        return PursuitStop.E(float(arg))
    raise ValueError(f"unknown coder {text!r}; use gvcsr, omp-l:L or omp-e:EPS")


def coder_label(coder):
    if isinstance(coder, SparseCodingParams):
        return "gvcsr", f"alpha={coder.alpha:g};beta={coder.beta:g}"
    kind, _, arg = str(coder).partition(":")
    return kind, (f"L={arg}" if kind == "omp-l" else f"eps={arg}")


@dataclass
class RdPoint:
    coder: str
    params: str
    quant: float
    bpp: float
    psnr: float
    mean_l0: float

    def row(self):
        return (self.coder, self.params, self.quant, self.bpp, self.psnr, self.mean_l0)


def rd_point(images, d, coder, step, factors=None):
    """Corpus-mean (bpp, PSNR, nonzeros per patch) for one coder at one step."""
    if factors is None and isinstance(coder, SparseCodingParams):
        factors = DictionaryFactors.from_dictionary(d.atoms)
    bpps, psnrs, l0s = [], [], []
    for img in images:
        res = encode_image_full(img, d, coder, step, factors=factors)
        bpps.append(res.bitstream.total_bits / (img.width * img.height))
        psnrs.append(psnr(img, res.reconstruction))
        l0s.append(np.count_nonzero(res.levels) / res.levels.shape[1])
    name, label = coder_label(coder)
    return RdPoint(name, label, float(step), float(np.mean(bpps)), float(np.mean(psnrs)), float(np.mean(l0s)))


def rd_sweep(images, d, coders, steps):
    factors = DictionaryFactors.from_dictionary(d.atoms)
    return [rd_point(images, d, c, q, factors) for c in coders for q in steps]


def mean_patch_count(images, patch_size=8):
    return float(np.mean([to_patches(im, patch_size).count for im in images]))
