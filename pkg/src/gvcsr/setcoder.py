"""Image-set compression over an MST reference structure.

Each non-root image is coded with a dictionary learned from the *decoded*
version of its MST parent, so the decoder can retrain the same dictionary
and no dictionary bits are sent.  The root uses a fixed global dictionary.
"""

from __future__ import annotations

import hashlib
import struct
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .admm import SparseCodingParams
from .codec.bitstream import (
    Bitstream,
    BitstreamError,
    DictionaryMismatch,
    decode_image,
    encode_image_full,
)
from .codec.blocks import to_patches
from .dictlearn import LearnParams, learn

__all__ = [
    "SetParams",
    "SetManifestEntry",
    "SetEncodeResult",
    "ArchiveError",
    "similarity",
    "distance_matrix",
    "build_mst",
    "topological_order",
    "identity_transform",
    "train_reference_dictionary",
    "encode_set",
    "decode_set",
    "read_archive",
]

MAGIC = b"GVCS"
VERSION = 1
SIMILARITY_TAG = b"ds64mse\0"
_HEAD = struct.Struct("<4sHI")
_PARAMS = struct.Struct("<ddddIHHQ16s8s")
_ENTRY = struct.Struct("<IiQQ16s")


class ArchiveError(BitstreamError):
    pass


@dataclass(frozen=True)
class SetParams:
    alpha: float = 50.0
    beta: float = 1e-4
    step: float = 8.0
    gamma: int = 14
    outer_iters: int = 5
    kappa: float = 4.0
    max_iters: int = 2000
    seed: int = 0

    def sparse(self):
        return SparseCodingParams(alpha=self.alpha, beta=self.beta, max_iters=self.max_iters)


@dataclass(frozen=True)
class SetManifestEntry:
    id: int
    parent: int  # -1 for the root
    offset: int
    length: int
    dict_hash: bytes


@dataclass
class SetEncodeResult:
    archive: bytes
    reconstructions: list
    parents: list
    dict_hashes: list
    bits: list = field(default_factory=list)


def _box_matrix(n_in, n_out):
    """Row i averages input cells overlapping ``[i, i+1) * n_in / n_out``."""
    edges = np.arange(n_out + 1) * (n_in / n_out)
    lo, hi = edges[:-1, None], edges[1:, None]
    cells = np.arange(n_in)[None, :]
    overlap = np.clip(np.minimum(hi, cells + 1) - np.maximum(lo, cells), 0, None)
    return overlap / (n_in / n_out)


def _downsample(img, size=64):
    px = img.pixels.astype(float)
    return _box_matrix(px.shape[0], size) @ px @ _box_matrix(px.shape[1], size).T


def similarity(a, b):
    """MSE between the two images box-averaged to 64 x 64 (0 means identical)."""
    da, db = _downsample(a), _downsample(b)
    return float(np.mean((da - db) ** 2))


def distance_matrix(images):
    k = len(images)
    small = [_downsample(im) for im in images]
    out = np.zeros((k, k))
    for i in range(k):
        for j in range(i + 1, k):
            out[i, j] = out[j, i] = float(np.mean((small[i] - small[j]) ** 2))
    return out


def build_mst(distances):
    """Prim's algorithm; returns the parent list (root has parent -1).

    The root is the image with the lowest total distance to all others.
    Ties (root choice and edge weights) go to the lowest index.
    """
    dist = np.asarray(distances, dtype=float)
    k = dist.shape[0]
    if dist.shape != (k, k) or k < 1:
        raise ValueError("need a square, nonempty distance matrix")
    if not np.all(np.isfinite(dist)) or np.any(dist < 0):
        raise ValueError("distances must be finite and nonnegative")
    root = int(np.argmin(dist.sum(axis=1)))
    parent = [-1] * k
    in_tree = [False] * k
    in_tree[root] = True
    best = dist[root].copy()
    via = [root] * k
    for _ in range(k - 1):
        cand = [(best[v], v) for v in range(k) if not in_tree[v]]
        _, v = min(cand)
        in_tree[v] = True
        parent[v] = via[v]
        for u in range(k):
            if not in_tree[u] and dist[v, u] < best[u]:
                best[u] = dist[v, u]
                via[u] = v
    return parent


def topological_order(parents):
    """Breadth-first order from the root; raises on cycles or multiple roots."""
    k = len(parents)
    roots = [i for i, p in enumerate(parents) if p == -1]
    if len(roots) != 1:
        raise ArchiveError(f"expected one root, found {len(roots)}")
    children = [[] for _ in range(k)]
    for i, p in enumerate(parents):
        if p != -1:
            if not 0 <= p < k:
                raise ArchiveError(f"image {i} has missing parent {p}")
            children[p].append(i)
    order = []
    queue = deque(roots)
    while queue:
        v = queue.popleft()
        order.append(v)
        queue.extend(children[v])
    if len(order) != k:
        raise ArchiveError("reference structure contains a cycle")
    return order


def identity_transform(reference, target=None):
    """Hook for aligning a reference to its target before training; no-op."""
    return reference


def _seed_from(img, base):
    h = hashlib.sha256(img.pixels.tobytes()).digest()
    return (int.from_bytes(h[:8], "little") ^ int(base)) & (2**63 - 1)


def train_reference_dictionary(reference, params, patch_size=8):
    """Learn the coding dictionary for a child from its decoded parent."""
    ref = identity_transform(reference)
    s = to_patches(ref, patch_size).residuals
    lp = LearnParams(
        sparse=params.sparse(),
        outer_iters=params.outer_iters,
        kappa=params.kappa,
        seed=_seed_from(ref, params.seed),
    )
    d, _, _ = learn(s, params.gamma * patch_size * patch_size, lp)
    return d


def _pack(params, global_hash, entries, streams):
    head = _HEAD.pack(MAGIC, VERSION, len(entries))
    pblock = _PARAMS.pack(
        params.alpha, params.beta, params.step, params.kappa,
        params.max_iters, params.gamma, params.outer_iters, params.seed,
        global_hash, SIMILARITY_TAG,
    )
    table = b"".join(_ENTRY.pack(e.id, e.parent, e.offset, e.length, e.dict_hash) for e in entries)
    return head + pblock + table + b"".join(streams)


def read_archive(buf):
    """Parse an archive into ``(params, global_hash, entries, payload)``."""
    buf = bytes(buf)
    if len(buf) < _HEAD.size + _PARAMS.size:
        raise ArchiveError("truncated archive header")
    magic, version, count = _HEAD.unpack_from(buf)
    if magic != MAGIC:
        raise ArchiveError("bad magic")
    if version != VERSION:
        raise ArchiveError(f"unsupported version {version}")
    (alpha, beta, step, kappa, max_iters, gamma, outer, seed, ghash, _tag) = (
        _PARAMS.unpack_from(buf, _HEAD.size)
    )
    params = SetParams(alpha=alpha, beta=beta, step=step, gamma=gamma, outer_iters=outer,
                       kappa=kappa, max_iters=max_iters, seed=seed)
    off = _HEAD.size + _PARAMS.size
    if len(buf) < off + count * _ENTRY.size:
        raise ArchiveError("truncated manifest")
    entries = [SetManifestEntry(*_ENTRY.unpack_from(buf, off + i * _ENTRY.size)) for i in range(count)]
    payload = buf[off + count * _ENTRY.size:]
    for e in entries:
        if e.offset + e.length > len(payload):
            raise ArchiveError(f"missing stream for image {e.id}")
    return params, ghash, entries, payload


def encode_set(images, global_dict, params=None, patch_size=8):
    """Encode a set of images; returns a :class:`SetEncodeResult`."""
    if not images:
        raise ValueError("empty image set")
    if params is None:
        params = SetParams()
    parents = build_mst(distance_matrix(images))
    order = topological_order(parents)
    recon = [None] * len(images)
    hashes = [None] * len(images)
    streams = [None] * len(images)
    coder = params.sparse()
    for i in order:
        if parents[i] == -1:
            d = global_dict
        else:
            d = train_reference_dictionary(recon[parents[i]], params, patch_size)
        res = encode_image_full(images[i], d, coder, params.step)
        recon[i] = res.reconstruction
        hashes[i] = d.hash
        streams[i] = res.bitstream.to_bytes()
    entries = []
    offset = 0
    for i, s in enumerate(streams):
        entries.append(SetManifestEntry(i, parents[i], offset, len(s), hashes[i]))
        offset += len(s)
    archive = _pack(params, global_dict.hash, entries, streams)
    return SetEncodeResult(archive, recon, parents, hashes, [8 * len(s) for s in streams])


def decode_set(archive, global_dict, order=None, patch_size=8):
    """Decode every image of an archive.

    ``order`` may override the decode order; it must list each parent before
    its children.  Returns ``(images, dictionary_hashes)``.
    """
    params, ghash, entries, payload = read_archive(archive)
    if global_dict.hash != ghash:
        raise DictionaryMismatch("global dictionary hash does not match archive")
    parents = [e.parent for e in entries]
    if [e.id for e in entries] != list(range(len(entries))):
        raise ArchiveError("manifest ids are not sequential")
    topo = topological_order(parents)
    order = topo if order is None else list(order)
    if sorted(order) != list(range(len(entries))):
        raise ArchiveError("decode order is not a permutation of the set")
    out = [None] * len(entries)
    hashes = [None] * len(entries)
    for i in order:
        e = entries[i]
        if e.parent == -1:
            d = global_dict
        else:
            if out[e.parent] is None:
                raise ArchiveError(f"parent {e.parent} of image {i} not decoded yet")
            d = train_reference_dictionary(out[e.parent], params, patch_size)
        if d.hash != e.dict_hash:
            raise DictionaryMismatch(f"retrained dictionary for image {i} does not match")
        hashes[i] = d.hash
        out[i] = decode_image(Bitstream.from_bytes(payload[e.offset:e.offset + e.length]), d)
    return out, hashes
