"""Variance-based rate model.

The rate of a coefficient stack ``A`` (M x K) is estimated by the trace
``tr(A Z A^T)`` where ``Z = K*I - 1 1^T`` is the centering operator.  ``Z``
has only two distinct singular values (0 once, K with multiplicity K-1), so
its SVD and every product with it can be formed analytically.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "ZSvd",
    "RateEstimate",
    "centering_matrix",
    "fast_z_svd",
    "coefficient_variance",
    "gaussian_entropy_bound",
    "laplacian_entropy",
    "rate_estimate",
    "LAPLACE_GAP_BITS",
]

#: log2(sqrt(pi/e)), the gap between the Gaussian bound and Laplacian entropy.
LAPLACE_GAP_BITS = 0.5 * np.log2(np.pi / np.e)


class ZSvd:
    """Analytic SVD of the K x K centering operator.

    ``singular_values[0]`` is 0 (the all-ones direction); the rest equal K.
    The orthonormal basis is kept in factored form: column 0 is the
    normalized all-ones vector, column j >= 1 holds ``j`` ones above a
    ``-j`` on the diagonal, all times ``col_scale[j]``.  ``basis`` builds the
    dense K x K array on first access; :meth:`matvec` and :meth:`rmatvec`
    work in O(K) per vector.
    """

    def __init__(self, k, singular_values, col_scale):
        self.k = k
        self.singular_values = singular_values
        self.col_scale = col_scale
        self._basis = None

    @property
    def basis(self):
        if self._basis is None:
            k = self.k
            b = np.triu(np.ones((k, k)))
            idx = np.arange(k)
            b[idx[1:], idx[1:]] = -idx[1:]
            b[:, 0] = 1.0
            self._basis = b * self.col_scale
        return self._basis

    def matvec(self, y):
        """``V_Z @ y`` for y of shape (K,) or (K, n)."""
        y = np.asarray(y, dtype=float)
        c = (self.col_scale * y.T).T if y.ndim > 1 else self.col_scale * y
        # row i: c[0] + sum_{j > i} c[j] - i * c[i]
        after = np.zeros_like(c)
        after[:-1] = np.cumsum(c[::-1], axis=0)[::-1][1:]
        idx = np.arange(self.k, dtype=float)
        return c[0] + after - (idx * c.T).T

    def rmatvec(self, x):
        """``V_Z.T @ x`` for x of shape (K,) or (K, n)."""
        x = np.asarray(x, dtype=float)
        head = np.cumsum(x, axis=0)
        out = np.empty_like(x)
        out[0] = head[-1]
        idx = np.arange(1, self.k, dtype=float)
        if x.ndim > 1:
            out[1:] = head[:-1] - (idx * x[1:].T).T
            return (self.col_scale * out.T).T
        out[1:] = head[:-1] - idx * x[1:]
        return self.col_scale * out

    def reconstruct(self):
        return (self.basis * self.singular_values) @ self.basis.T


@dataclass(frozen=True)
class RateEstimate:
    variance: float
    gaussian_bound_bits: float
    laplacian_bits: float


def _check_k(k, minimum):
    if int(k) != k or k < minimum:
        raise ValueError(f"k must be an integer >= {minimum}, got {k!r}")
    return int(k)


def centering_matrix(k):
    """Dense centering operator: ``k-1`` on the diagonal, ``-1`` elsewhere."""
    k = _check_k(k, 1)
    return k * np.eye(k) - np.ones((k, k))


def fast_z_svd(k):
    """Closed-form SVD of :func:`centering_matrix`.

    Column 0 of the basis is the normalized all-ones vector.  Column j >= 1
    holds ``j`` ones followed by ``-j`` at row j and zeros below, scaled to
    unit norm.  Construction is O(K); no eigensolver is involved.
    """
    k = _check_k(k, 2)
    j = np.arange(1, k, dtype=float)
    col_scale = np.empty(k)
    col_scale[0] = 1.0 / np.sqrt(k)
    col_scale[1:] = 1.0 / np.sqrt(j * (j + 1.0))
    sv = np.full(k, float(k))
    sv[0] = 0.0
    return ZSvd(k, sv, col_scale)


def coefficient_variance(a):
    """Return ``tr(A Z A^T) = K ||A||_F^2 - ||A 1||^2`` without forming Z."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    if a.ndim != 2 or a.shape[1] < 1:
        raise ValueError("expected an M x K matrix with K >= 1")
    k = a.shape[1]
    # Row-wise centered form is numerically safer than the raw difference.
    centered = a - a.mean(axis=1, keepdims=True)
    return float(k * np.sum(centered * centered))


def gaussian_entropy_bound(variance):
    """Differential entropy bound ``log2(sqrt(2 pi e V))`` in bits.

    A zero variance yields ``-inf``.
    """
    if variance < 0:
        raise ValueError("variance must be nonnegative")
    if variance == 0:
        return float("-inf")
    return 0.5 * float(np.log2(2.0 * np.pi * np.e * variance))


def laplacian_entropy(variance):
    """Differential entropy of a Laplacian source with the given variance."""
    if variance <= 0:
        raise ValueError("variance must be positive")
    return gaussian_entropy_bound(variance) - LAPLACE_GAP_BITS


def rate_estimate(a):
    v = coefficient_variance(a)
    g = gaussian_entropy_bound(v)
    lap = laplacian_entropy(v) if v > 0 else float("-inf")
    return RateEstimate(variance=v, gaussian_bound_bits=g, laplacian_bits=lap)
