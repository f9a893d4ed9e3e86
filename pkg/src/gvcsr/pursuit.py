"""Orthogonal matching pursuit baselines (sparsity stop and error stop)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

__all__ = ["PursuitStop", "OmpResult", "omp", "omp_batch"]


@dataclass(frozen=True)
class PursuitStop:
    """Exactly one of ``sparsity`` (OMP_L) or ``error`` (OMP_E) is set."""

    sparsity: int | None = None
    error: float | None = None

    def __post_init__(self):
        if (self.sparsity is None) == (self.error is None):
            raise ValueError("set exactly one of sparsity or error")
        if self.sparsity is not None and self.sparsity < 1:
            raise ValueError("sparsity must be a positive integer")
        if self.error is not None and not self.error > 0:
            raise ValueError("error energy must be positive")

    @classmethod
    def L(cls, n):
        return cls(sparsity=int(n))

    @classmethod
    def E(cls, eps):
        return cls(error=float(eps))

    def __str__(self):
        if self.sparsity is not None:
            return f"omp-l:{self.sparsity}"
        return f"omp-e:{self.error:g}"


@dataclass
class OmpResult:
    coef: np.ndarray
    support: list
    residual_norms: list
    unreachable: bool = False


def _omp(s, d, gram_diag, stop, atol):
    n, m = d.shape
    coef = np.zeros(m)
    r = s.copy()
    support = []
    norms = [float(np.linalg.norm(r))]
    limit = m if stop.sparsity is None else min(stop.sparsity, m, n)
    active = np.zeros(m, dtype=bool)
    # Cholesky factor of the active Gram matrix, grown one row per step
    chol = np.zeros((limit, limit))
    x = np.zeros(0)

    def finished():
        e = norms[-1] ** 2
        if norms[-1] <= atol:
            return True
        if stop.error is not None:
            return e < stop.error
        return len(support) >= limit

    while not finished() and len(support) < min(limit, n):
        corr = np.abs(d.T @ r)
        corr[active] = -1.0
        corr[gram_diag == 0] = -1.0
        j = int(np.argmax(corr))  # argmax returns the lowest index on ties
        if corr[j] <= atol:
            break
        k = len(support)
        dj = d[:, j]
        if k:
            w = solve_triangular(chol[:k, :k], d[:, support].T @ dj, lower=True)
            rem = gram_diag[j] - w @ w
            if rem <= 1e-12 * gram_diag[j]:
                # atom (numerically) in the span of the active set
                active[j] = True
                continue
            chol[k, :k] = w
            chol[k, k] = np.sqrt(rem)
        else:
            chol[0, 0] = np.sqrt(gram_diag[j])
        support.append(j)
        active[j] = True
        k += 1
        ds = d[:, support]
        y = solve_triangular(chol[:k, :k], ds.T @ s, lower=True)
        x = solve_triangular(chol[:k, :k].T, y, lower=False)
        r = s - ds @ x
        norms.append(float(np.linalg.norm(r)))
    coef[support] = x
    unreachable = stop.error is not None and not norms[-1] ** 2 < stop.error
    return OmpResult(coef, support, norms, unreachable)


def omp(s_col, d, stop, atol=1e-12):
    """OMP on a single signal; returns an :class:`OmpResult`.

    Selection picks the atom most correlated with the residual (lowest index
    on ties), then refits all active coefficients by least squares.  Stops at
    the sparsity limit, when ``||r||^2 < error``, or when the residual
    vanishes.  ``unreachable`` flags an error target not met.
    """
    d = np.asarray(d, dtype=float)
    s_col = np.asarray(s_col, dtype=float).ravel()
    if d.size == 0:
        raise ValueError("empty dictionary")
    if d.shape[0] != s_col.size:
        raise ValueError("signal length does not match dictionary rows")
    return _omp(s_col, d, np.einsum("ij,ij->j", d, d), stop, atol)


def omp_batch(s, d, stop, atol=1e-12):
    """Column-wise OMP.  Returns ``(A, flags)`` with ``flags[k]`` the
    unreachable-error flag of column ``k``."""
    d = np.asarray(d, dtype=float)
    s = np.asarray(s, dtype=float)
    if s.ndim == 1:
        s = s[:, None]
    gd = np.einsum("ij,ij->j", d, d)
    a = np.zeros((d.shape[1], s.shape[1]))
    flags = np.zeros(s.shape[1], dtype=bool)
    for k in range(s.shape[1]):
        res = _omp(s[:, k], d, gd, stop, atol)
        a[:, k] = res.coef
        flags[k] = res.unreachable
    return a, flags
