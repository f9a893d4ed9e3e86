"""Exp-Golomb codes for the bitstream, plus a canonical Huffman coder used to
measure empirical coding cost of synthetic sources."""

from __future__ import annotations

import heapq
from collections import Counter

from .bitio import BitReader, BitWriter, TruncatedStream

__all__ = [
    "zigzag",
    "unzigzag",
    "ue_length",
    "se_length",
    "ue_code",
    "se_code",
    "write_ue",
    "write_se",
    "read_ue",
    "read_se",
    "huffman_code_lengths",
    "canonical_huffman",
    "huffman_bits",
]


def zigzag(v):
    """0, -1, 1, -2, 2, ... -> 0, 1, 2, 3, 4, ..."""
    return 2 * v if v >= 0 else -2 * v - 1


def unzigzag(u):
    return u >> 1 if u % 2 == 0 else -((u + 1) >> 1)


def ue_length(u):
    return 2 * (u + 1).bit_length() - 1


def se_length(v):
    return ue_length(zigzag(v))


def ue_code(u):
    """Order-0 Exp-Golomb codeword of ``u >= 0`` as a '0'/'1' string."""
    if u < 0:
        raise ValueError("unsigned Exp-Golomb needs u >= 0")
    x = u + 1
    return "0" * (x.bit_length() - 1) + format(x, "b")


def se_code(v):
    return ue_code(zigzag(v))


def write_ue(w: BitWriter, u):
    if u < 0:
        raise ValueError("unsigned Exp-Golomb needs u >= 0")
    x = u + 1
    nb = x.bit_length()
    w.write(0, nb - 1)
    w.write(x, nb)


def write_se(w: BitWriter, v):
    write_ue(w, zigzag(v))


def read_ue(r: BitReader):
    zeros = 0
    while r.read_bit() == 0:
        zeros += 1
        if zeros > 64:
            raise TruncatedStream("Exp-Golomb prefix too long")
    return ((1 << zeros) | r.read(zeros)) - 1


def read_se(r: BitReader):
    return unzigzag(read_ue(r))


def huffman_code_lengths(counts):
    """Code length per symbol for a Huffman code built from ``counts``.

    A single-symbol alphabet gets a 1-bit code.  Ties are broken by symbol
    order so the result is deterministic.
    """
    counts = {s: c for s, c in counts.items() if c > 0}
    if not counts:
        return {}
    if len(counts) == 1:
        return {next(iter(counts)): 1}
    heap = [(c, i, [s]) for i, (s, c) in enumerate(sorted(counts.items()))]
    heapq.heapify(heap)
    lengths = dict.fromkeys(counts, 0)
    tick = len(heap)
    while len(heap) > 1:
        c1, _, s1 = heapq.heappop(heap)
        c2, _, s2 = heapq.heappop(heap)
        for s in s1 + s2:
            lengths[s] += 1
        heapq.heappush(heap, (c1 + c2, tick, s1 + s2))
        tick += 1
    return lengths


def canonical_huffman(lengths):
    """Canonical codewords (as bit strings) from code lengths."""
    code = 0
    prev = 0
    out = {}
    for sym, ln in sorted(lengths.items(), key=lambda kv: (kv[1], kv[0])):
        code <<= ln - prev
        out[sym] = format(code, f"0{ln}b")
        code += 1
        prev = ln
    return out


def huffman_bits(symbols):
    """Total payload bits of ``symbols`` under their own empirical Huffman code."""
    counts = Counter(symbols)
    lengths = huffman_code_lengths(counts)
    return sum(counts[s] * lengths[s] for s in counts)
