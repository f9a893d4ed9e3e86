"""Dictionary learning with the variance-constrained sparse coder.

Alternates ADMM sparse coding (run to convergence) with a K-SVD style atom
sweep.  After each sweep the coefficients are reset to ``D^+ S``, the
multipliers to zero, and the penalty is rescheduled from the smallest
surviving coefficient.
"""

from __future__ import annotations

import hashlib
import struct
import zlib
from dataclasses import dataclass, field

import numpy as np

from .admm import (
    AdmmState,
    DictionaryFactors,
    SolveReport,
    SparseCodingParams,
    objective_terms,
    pinv_init,
    run_admm,
)
from .pursuit import PursuitStop, omp_batch

__all__ = [
    "Dictionary",
    "DictionaryFormatError",
    "LearnParams",
    "RoundReport",
    "LearnReport",
    "init_dictionary",
    "update_dictionary",
    "penalty_reschedule",
    "penalty_bound",
    "learn",
    "learn_ksvd_omp",
]

MAGIC = b"GVCD"
VERSION = 1
_HEADER = struct.Struct("<4sHII")


class DictionaryFormatError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Dictionary:
    """N x M atom matrix; columns are the atoms."""

    atoms: np.ndarray

    def __post_init__(self):
        a = np.ascontiguousarray(self.atoms, dtype=np.float64)
        if a.ndim != 2 or 0 in a.shape:
            raise ValueError("atoms must be a nonempty 2-D array")
        if not np.all(np.isfinite(a)):
            raise ValueError("atoms must be finite")
        object.__setattr__(self, "atoms", a)

    @property
    def n(self):
        return self.atoms.shape[0]

    @property
    def m(self):
        return self.atoms.shape[1]

    @property
    def completeness(self):
        return self.m / self.n

    def to_bytes(self):
        payload = self.atoms.astype("<f8").tobytes(order="F")
        return (
            _HEADER.pack(MAGIC, VERSION, self.n, self.m)
            + payload
            + struct.pack("<I", zlib.crc32(payload))
        )

    @classmethod
    def from_bytes(cls, buf):
        if len(buf) < _HEADER.size + 4:
            raise DictionaryFormatError("truncated dictionary file")
        magic, version, n, m = _HEADER.unpack_from(buf)
        if magic != MAGIC:
            raise DictionaryFormatError("bad magic")
        if version != VERSION:
            raise DictionaryFormatError(f"unsupported version {version}")
        size = 8 * n * m
        payload = bytes(buf[_HEADER.size:_HEADER.size + size])
        if len(payload) != size or len(buf) != _HEADER.size + size + 4:
            raise DictionaryFormatError("dictionary length mismatch")
        (crc,) = struct.unpack_from("<I", buf, _HEADER.size + size)
        if crc != zlib.crc32(payload):
            raise DictionaryFormatError("checksum mismatch")
        atoms = np.frombuffer(payload, dtype="<f8").reshape((n, m), order="F")
        return cls(atoms.astype(np.float64))

    def save(self, path):
        with open(path, "wb") as f:
            f.write(self.to_bytes())

    @classmethod
    def load(cls, path):
        with open(path, "rb") as f:
            return cls.from_bytes(f.read())

    @property
    def hash(self):
        """16-byte SHA-256 prefix of the serialized file."""
        return hashlib.sha256(self.to_bytes()).digest()[:16]


@dataclass(frozen=True)
class LearnParams:
    sparse: SparseCodingParams = field(default_factory=SparseCodingParams)
    outer_iters: int = 20
    kappa: float = 4.0
    seed: int = 0

    def __post_init__(self):
        if self.kappa < 1:
            raise ValueError("kappa must be >= 1")
        if self.outer_iters < 0:
            raise ValueError("outer_iters must be nonnegative")


@dataclass
class RoundReport:
    round: int
    fidelity: float
    l0: int
    variance: float
    objective: float
    inner: SolveReport
    mu_bound: float
    mu_exceeds_bound: bool


@dataclass
class LearnReport:
    rounds: list = field(default_factory=list)

    @property
    def converged(self):
        return all(r.inner.converged for r in self.rounds)


def _unit_columns(x):
    return x / np.linalg.norm(x, axis=0)


def _random_unit(rng, n):
    while True:
        v = rng.standard_normal(n)
        nv = np.linalg.norm(v)
        if nv > 0:
            return v / nv


def init_dictionary(s, m, seed=0):
    """Pick ``m`` distinct training columns at random and normalize them.

    Zero columns, and any atoms beyond the number of samples, are filled with
    seeded random unit vectors.
    """
    s = np.asarray(s, dtype=float)
    if m < 1:
        raise ValueError("atom count must be positive")
    if s.ndim != 2 or s.shape[1] < 1:
        raise ValueError("need an N x K training matrix with K >= 1")
    if not np.any(s):
        raise ValueError("training set is all zero")
    n, k = s.shape
    rng = np.random.default_rng(seed)
    picks = rng.permutation(k)[:m]
    atoms = np.empty((n, m))
    for i in range(m):
        col = s[:, picks[i]] if i < picks.size else None
        nv = np.linalg.norm(col) if col is not None else 0.0
        atoms[:, i] = col / nv if nv > 0 else _random_unit(rng, n)
    return Dictionary(atoms)


def _leading_pair(e):
    u, sv, vt = np.linalg.svd(e, full_matrices=False)
    u1, v1 = u[:, 0], vt[0]
    if u1[np.argmax(np.abs(u1))] < 0:
        u1, v1 = -u1, -v1
    return u1, sv[0] * v1


def update_dictionary(s, a, d):
    """One K-SVD sweep over the atoms in ascending order.

    Returns ``(new_dictionary, new_a)``: each used atom becomes the leading
    left singular vector of its restricted residual and its coefficient row
    is refreshed on the same support.  An unused atom is replaced by the
    normalized sample with the largest current reconstruction error.
    """
    s = np.asarray(s, dtype=float)
    a = np.array(a, dtype=float)
    atoms = np.array(d.atoms if isinstance(d, Dictionary) else d, dtype=float)
    resid = s - atoms @ a
    taken = set()
    for j in range(atoms.shape[1]):
        idx = np.flatnonzero(a[j])
        if idx.size == 0:
            err = np.einsum("ij,ij->j", resid, resid)
            err[list(taken)] = -1.0
            # stable argsort: ties go to the lowest index
            order = np.argsort(-err, kind="stable")
            pick = next(c for c in order if np.any(s[:, c])) if np.any(s) else None
            if pick is None:
                continue
            taken.add(int(pick))
            atoms[:, j] = s[:, pick] / np.linalg.norm(s[:, pick])
            continue
        e = resid[:, idx] + np.outer(atoms[:, j], a[j, idx])
        u1, row = _leading_pair(e)
        atoms[:, j] = u1
        a[j, idx] = row
        resid[:, idx] = e - np.outer(u1, row)
    return Dictionary(atoms), a


def penalty_reschedule(a, alpha, kappa, mu_max=1e8):
    """``kappa * alpha / min|A_nz|``, clamped to ``mu_max``.

    The next round's threshold ``sqrt(alpha/mu)`` is then
    ``sqrt(min|A_nz| / kappa)``.  An all-zero ``A`` gives ``mu_max``.
    """
    nz = np.abs(a[a != 0])
    if nz.size == 0:
        return mu_max
    return min(kappa * alpha / nz.min(), mu_max)


def penalty_bound(d):
    """``sqrt(2) * lambda_max(D^T D)``; the convergence guarantee needs mu above it."""
    atoms = d.atoms if isinstance(d, Dictionary) else np.asarray(d, dtype=float)
    smax = np.linalg.norm(atoms, 2)
    return np.sqrt(2.0) * smax * smax


def _round_report(i, s, d, a, params, inner, mu):
    fid, var = objective_terms(s, d.atoms, a)
    l0 = int(np.count_nonzero(a))
    sp = params.sparse
    bound = penalty_bound(d)
    return RoundReport(
        round=i,
        fidelity=fid,
        l0=l0,
        variance=var,
        objective=fid + sp.alpha * l0 + 0.5 * sp.beta * var,
        inner=inner,
        mu_bound=bound,
        mu_exceeds_bound=mu > bound,
    )


def learn(s, m, params=None, init=None):
    """Learn an ``m``-atom dictionary for the columns of ``s``.

    Each of the ``outer_iters`` rounds runs the ADMM sparse coder to
    convergence (or its iteration cap) and then sweeps the atoms.  The
    returned coefficients come from a final ADMM pass on the last dictionary.

    Returns ``(dictionary, a, report)``.
    """
    if params is None:
        params = LearnParams()
    s = np.asarray(s, dtype=float)
    sp = params.sparse
    d = init if init is not None else init_dictionary(s, m, params.seed)
    report = LearnReport()
    state = AdmmState.start(pinv_init(d.atoms, s), sp.mu0)
    for i in range(params.outer_iters + 1):
        factors = DictionaryFactors.from_dictionary(d.atoms)
        inner = run_admm(state, s, factors, sp)
        report.rounds.append(_round_report(i, s, d, state.a, params, inner, state.mu))
        if i == params.outer_iters:
            break
        d, _ = update_dictionary(s, state.a, d)
        mu = penalty_reschedule(state.a, sp.alpha, params.kappa, sp.mu_max)
        state = AdmmState.start(pinv_init(d.atoms, s), mu)
    return d, state.a, report


def learn_ksvd_omp(s, m, sparsity, outer_iters=20, seed=0, init=None):
    """Reference K-SVD learner with OMP_L coding; shares :func:`init_dictionary`.

    Returns ``(dictionary, a, fidelities)`` with one fidelity per round,
    measured after the final coding pass of that round.
    """
    s = np.asarray(s, dtype=float)
    d = init if init is not None else init_dictionary(s, m, seed)
    stop = PursuitStop.L(sparsity)
    fids = []
    a, _ = omp_batch(s, d.atoms, stop)
    for _ in range(outer_iters):
        d, _ = update_dictionary(s, a, d)
        a, _ = omp_batch(s, d.atoms, stop)
        fids.append(objective_terms(s, d.atoms, a)[0])
    return d, a, fids
