"""ADMM solver for variance-constrained l0 sparse coding.

Solves, for a fixed dictionary ``D``,

    min_A  1/2 ||S - D A||_F^2 + alpha ||A||_0 + beta/2 tr(A Z A^T)

by splitting ``A`` into three copies (``A``, ``J``, ``G``) tied by equality
constraints.  Every subproblem has a closed form: a hard threshold for
``A``, a ridge solve through the SVD of ``D`` for ``J``, and a two-eigenvalue
filter for ``G``.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from .rate_model import coefficient_variance

__all__ = [
    "SparseCodingParams",
    "AdmmState",
    "DictionaryFactors",
    "SolveReport",
    "hard_threshold",
    "update_a",
    "update_j",
    "update_g",
    "update_multipliers",
    "update_penalty",
    "pinv_init",
    "run_admm",
    "sparse_code",
    "objective_value",
    "objective_terms",
]


@dataclass(frozen=True)
class SparseCodingParams:
    """Weights and schedule for :func:`sparse_code`.

    ``alpha`` weighs the l0 count and ``beta`` the variance rate term.  The
    penalty starts at ``mu0`` and grows by ``rho`` per iteration up to
    ``mu_max``.
    """

    alpha: float = 1.0
    beta: float = 0.0
    mu0: float = 1e-2
    mu_max: float = 1e8
    rho: float = 1.2
    eps: float = 1e-5
    max_iters: int = 2000

    def __post_init__(self):
        if self.alpha < 0:
            raise ValueError("alpha must be nonnegative")
        if self.beta < 0:
            raise ValueError("beta must be nonnegative")
        if not 0 < self.mu0 <= self.mu_max:
            raise ValueError("need 0 < mu0 <= mu_max")
        if self.rho < 1:
            raise ValueError("rho must be >= 1")
        if self.eps <= 0 or self.max_iters < 1:
            raise ValueError("eps and max_iters must be positive")


@dataclass
class AdmmState:
    a: np.ndarray
    j: np.ndarray
    g: np.ndarray
    r0: np.ndarray
    r1: np.ndarray
    mu: float
    iter: int = 0

    @classmethod
    def start(cls, a0, mu):
        """Primal copies all equal to ``a0``, multipliers zero."""
        a0 = np.array(a0, dtype=float)
        z = np.zeros_like(a0)
        return cls(a=a0, j=a0.copy(), g=a0.copy(), r0=z, r1=z.copy(), mu=float(mu))


@dataclass(frozen=True)
class DictionaryFactors:
    """SVD data of ``D`` needed by the J update, computed once per solve."""

    d: np.ndarray
    vd: np.ndarray
    sigma_sq: np.ndarray

    @classmethod
    def from_dictionary(cls, d):
        d = np.asarray(d, dtype=float)
        n, m = d.shape
        _, s, vt = np.linalg.svd(d, full_matrices=True)
        sigma_sq = np.zeros(m)
        sigma_sq[: s.size] = s * s
        return cls(d=d, vd=vt.T, sigma_sq=sigma_sq)


@dataclass
class SolveReport:
    iterations: int = 0
    converged: bool = False
    res_aj: float = float("nan")
    res_ag: float = float("nan")
    res_step: float = float("nan")
    final_mu: float = float("nan")
    # rows of (iteration, fidelity, variance, objective)
    trajectory: list = field(default_factory=list)

    def to_text(self):
        """Line-oriented record: a summary line then one line per iteration."""
        buf = io.StringIO()
        buf.write(
            f"# iterations={self.iterations} converged={int(self.converged)} "
            f"res_aj={self.res_aj:.6e} res_ag={self.res_ag:.6e} "
            f"res_step={self.res_step:.6e} mu={self.final_mu:.6e}\n"
        )
        for it, fid, var, obj in self.trajectory:
            buf.write(f"{it} {fid:.12e} {var:.12e} {obj:.12e}\n")
        return buf.getvalue()

    @classmethod
    def from_text(cls, text):
        lines = text.splitlines()
        head = dict(kv.split("=") for kv in lines[0].lstrip("# ").split())
        rep = cls(
            iterations=int(head["iterations"]),
            converged=bool(int(head["converged"])),
            res_aj=float(head["res_aj"]),
            res_ag=float(head["res_ag"]),
            res_step=float(head["res_step"]),
            final_mu=float(head["mu"]),
        )
        for line in lines[1:]:
            it, fid, var, obj = line.split()
            rep.trajectory.append((int(it), float(fid), float(var), float(obj)))
        return rep


def hard_threshold(x, eps):
    """Zero every entry with ``|x| <= eps``."""
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    x = np.asarray(x, dtype=float)
    return np.where(np.abs(x) > eps, x, 0.0)


def update_a(state, params):
    avg = 0.5 * (state.j + state.g - (state.r0 + state.r1) / state.mu)
    return hard_threshold(avg, np.sqrt(params.alpha / state.mu))


def update_j(state, factors, s=None, dts=None):
    """Ridge step ``(D^T D + mu I)^{-1} (D^T S + mu A + R0)`` via the SVD of D.

    ``dts`` (``D^T S``) may be passed in to avoid recomputing it.
    """
    if dts is None:
        dts = factors.d.T @ s
    rhs = dts + state.mu * state.a + state.r0
    vd = factors.vd
    return vd @ ((vd.T @ rhs) / (factors.sigma_sq + state.mu)[:, None])


def update_g(state, beta):
    """Apply ``(beta Z + mu I)^{-1}`` from the right to ``mu A + R1``.

    On the all-ones direction the filter is ``1/mu``; on its complement it is
    ``1/(beta K + mu)``.
    """
    mu = state.mu
    w = mu * state.a + state.r1
    k = w.shape[1]
    c1 = 1.0 / (beta * k + mu)
    c2 = 1.0 / mu - c1
    return c1 * w + c2 * w.mean(axis=1, keepdims=True)


def update_multipliers(state):
    r0 = state.r0 + state.mu * (state.a - state.j)
    r1 = state.r1 + state.mu * (state.a - state.g)
    return r0, r1


def update_penalty(mu, params):
    return min(params.rho * mu, params.mu_max)


def pinv_init(d, s):
    """``D^+ S`` with singular values below ``1e-12 * sigma_max`` dropped."""
    return np.linalg.pinv(np.asarray(d, dtype=float), rcond=1e-12) @ s


def objective_terms(s, d, a, beta=0.0):
    """Return ``(fidelity, variance)``: 1/2 ||S - DA||_F^2 and tr(A Z A^T)."""
    r = s - d @ a
    return 0.5 * float(np.sum(r * r)), coefficient_variance(a)


def objective_value(s, d, a, alpha, beta):
    fid, var = objective_terms(s, d, a)
    return fid + alpha * np.count_nonzero(a) + 0.5 * beta * var


def _residuals(state, a_prev):
    na = np.linalg.norm(state.a)
    raj = np.linalg.norm(state.a - state.j)
    rag = np.linalg.norm(state.a - state.g)
    rstep = np.linalg.norm(state.a - a_prev)
    if na == 0:
        return raj, rag, rstep, True
    return raj / na, rag / na, rstep / na, False


def run_admm(state, s, factors, params, record=False, report=None):
    """Iterate the ADMM updates in place on ``state`` until convergence.

    Returns the :class:`SolveReport`.  Hitting ``max_iters`` is reported
    through ``report.converged = False``; it does not raise.
    """
    if report is None:
        report = SolveReport()
    dts = factors.d.T @ s
    d = factors.d
    for _ in range(params.max_iters):
        a_prev = state.a
        state.a = update_a(state, params)
        state.j = update_j(state, factors, dts=dts)
        state.g = update_g(state, params.beta)
        state.r0, state.r1 = update_multipliers(state)
        state.mu = update_penalty(state.mu, params)
        state.iter += 1
        report.iterations += 1

        if record:
            fid, var = objective_terms(s, d, state.a)
            obj = fid + params.alpha * np.count_nonzero(state.a) + 0.5 * params.beta * var
            report.trajectory.append((state.iter, fid, var, obj))

        raj, rag, rstep, degenerate = _residuals(state, a_prev)
        report.res_aj, report.res_ag, report.res_step = raj, rag, rstep
        if degenerate:
            # A == 0: fall back to absolute residuals of the two constraints
            done = raj <= params.eps and rag <= params.eps
        else:
            done = raj <= params.eps and rag <= params.eps and rstep <= params.eps
        if done:
            report.converged = True
            break
    report.final_mu = state.mu
    return report


def sparse_code(s, d, params=None, record=False, factors=None):
    """Variance-constrained sparse code of the columns of ``s`` over ``d``.

    Parameters
    ----------
    s : ndarray, shape (N, K)
        Signals, one per column.
    d : ndarray, shape (N, M)
        Dictionary with (sub-)unit-norm columns.
    params : SparseCodingParams, optional
    record : bool
        Store the per-iteration ``(fidelity, variance, objective)`` trajectory.
    factors : DictionaryFactors, optional
        Precomputed SVD of ``d``; reused when coding many batches.

    Returns
    -------
    a : ndarray, shape (M, K)
    report : SolveReport
    """
    if params is None:
        params = SparseCodingParams()
    s = np.asarray(s, dtype=float)
    d = np.asarray(d, dtype=float)
    if s.ndim == 1:
        s = s[:, None]
    if d.shape[0] != s.shape[0]:
        raise ValueError(f"dictionary has {d.shape[0]} rows, signals {s.shape[0]}")
    if factors is None:
        factors = DictionaryFactors.from_dictionary(d)
    state = AdmmState.start(pinv_init(d, s), params.mu0)
    report = run_admm(state, s, factors, params, record=record)
    return state.a, report
