"""Benchmark problems on SO(n) and SL(n), two primal elements each.

P1 (SO(n))::

    min  1/2 sum_i ||log(Gd^T G_i)||_F
    s.t. G_i[0,0] - 0.5 <= 0,  G_i[1,1] - 0.3 <= 0

P2 (SL(n))::

    min  1/2 sum_i tr(Gd^{-1} G_i)^2
    s.t. -tr(Gd^{-1} G_i)^2 + 0.2 <= 0

``Gd`` and the start are drawn from one generator seeded with the trial
seed; the start is redrawn until every inequality is strictly satisfied.
"""
from __future__ import annotations

import math

import numpy as np

from .diff import ScalarField
from .errors import SamplingError
from .lie import SLn, SOn, GroupTuple, _basis, random_element
from .matfun import logm
from .solver import ProblemSpec

MAX_START_ATTEMPTS = 200
P1_SMOOTHING = 1e-18  # eps^2 inside the square root of the unsquared norm
EXACT = "exact"
SQUARED = "squared"


def _block(X, i, values):
    out = np.zeros(X.total_dim)
    off = X.offsets()
    out[off[i]:off[i + 1]] = values
    return out


def _hess_block(X, i, values):
    n = X.total_dim
    out = np.zeros((n, n))
    off = X.offsets()
    out[off[i]:off[i + 1], off[i]:off[i + 1]] = values
    return out


def _trace_products(M, basis):
    """``a[k] = tr(M E_k)`` and ``B[c, k] = tr(M E_c E_k)``."""
    ME = np.einsum("pq,cqr->cpr", M, basis)
    a = np.einsum("kpp->k", ME)
    B = np.einsum("cpq,kqp->ck", ME, basis)
    return a, B


def entry_constraint(i: int, row: int, bound: float) -> ScalarField:
    """``G_i[row, row] - bound``; analytic gradient and curvature."""

    def fn(X):
        return X[i].mat[row, row] - bound

    def grad(X):
        G = X[i].mat
        basis = _basis(X[i].kind)
        return _block(X, i, (G[row] @ basis)[:, row])

    def hess(X):
        G = X[i].mat
        basis = _basis(X[i].kind)
        # d/de_c (G e^{eE_c} E_k)[r, r] = (G E_c E_k)[r, r]
        GE = np.einsum("q,cqr->cr", G[row], basis)
        H = np.einsum("cq,kq->kc", GE, basis[:, :, row])
        return _hess_block(X, i, H)

    return ScalarField(fn, grad, hess, name=f"G{i + 1}[{row + 1},{row + 1}]-{bound:g}")


def _log_frechet_matrix(R: np.ndarray, basis: np.ndarray) -> np.ndarray:
    """``H[k, c] = <Dlog(R)[R E_c], E_k>_F`` for a normal (here orthogonal) ``R``.

    Uses the eigendecomposition ``R = U diag(l) U^*`` and the divided
    differences of the principal logarithm.
    """
    lam, U = np.linalg.eig(R)
    Uinv = np.linalg.inv(U)
    loglam = np.log(lam)
    li, lj = lam[:, None], lam[None, :]
    diff = li - lj
    close = np.abs(diff) <= 1e-6 * np.abs(lj)
    with np.errstate(all="ignore"):
        far = (loglam[:, None] - loglam[None, :]) / np.where(close, 1.0, diff)
        # nearby eigenvalues: log(1 + z) / z / l_j with z = (l_i - l_j) / l_j
        z = diff / lj
        near = np.where(z == 0, 1.0, np.log1p(z) / np.where(z == 0, 1.0, z)) / lj
    phi = np.where(close, near, far)
    # D[c] = Dlog(R)[R E_c] expressed back in the original basis
    C = np.einsum("ij,cjk,kl->cil", Uinv, np.einsum("ij,cjk->cik", R, basis), U)
    D = np.einsum("ij,cjk,kl->cil", U, C * phi, Uinv).real
    return np.einsum("kpq,cpq->kc", basis, D)


def log_distance_objective(Gd: np.ndarray, count: int, variant: str = EXACT,
                           smoothing: float = P1_SMOOTHING) -> ScalarField:
    """``1/2 sum_i ||log(Gd^T G_i)||`` (``exact``) or ``1/2 sum_i ||.||^2`` (``squared``).

    On SO(n) the chart derivative of ``1/2 ||log(R)||^2`` along ``E_j`` is
    ``<log R, E_j>_F``, which gives the analytic gradient; the curvature
    comes from the Frechet derivative of the logarithm.
    """
    if variant not in (EXACT, SQUARED):
        raise ValueError(f"unknown P1 norm variant {variant!r}")
    GdT = np.asarray(Gd, dtype=float).T

    def logs(X):
        return [logm(GdT @ X[i].mat) for i in range(count)]

    def fn(X):
        sq = [float(np.sum(L * L)) for L in logs(X)]
        if variant == SQUARED:
            return 0.5 * sum(sq)
        return 0.5 * sum(math.sqrt(v + smoothing) for v in sq)

    def grad(X):
        out = np.zeros(X.total_dim)
        off = X.offsets()
        for i, L in enumerate(logs(X)):
            basis = _basis(X[i].kind)
            inner = np.tensordot(basis, L, axes=([1, 2], [0, 1]))
            if variant == EXACT:
                inner = 0.5 * inner / math.sqrt(float(np.sum(L * L)) + smoothing)
            out[off[i]:off[i + 1]] = inner
        return out

    def hess(X):
        n = X.total_dim
        out = np.zeros((n, n))
        off = X.offsets()
        for i, L in enumerate(logs(X)):
            basis = _basis(X[i].kind)
            H = _log_frechet_matrix(GdT @ X[i].mat, basis)
            if variant == EXACT:
                u = np.tensordot(basis, L, axes=([1, 2], [0, 1]))
                r = float(np.sum(L * L)) + smoothing
                H = 0.5 * (H / math.sqrt(r) - np.outer(u, u) / r**1.5)
            out[off[i]:off[i + 1], off[i]:off[i + 1]] = H
        return out

    return ScalarField(fn, grad, hess, name=f"p1-{variant}")


def trace_objective(Gd: np.ndarray, count: int) -> ScalarField:
    """``1/2 sum_i tr(Gd^{-1} G_i)^2``."""
    A = np.linalg.inv(Gd)

    def fn(X):
        return 0.5 * sum(np.trace(A @ X[i].mat) ** 2 for i in range(count))

    def grad(X):
        out = np.zeros(X.total_dim)
        off = X.offsets()
        for i in range(count):
            M = A @ X[i].mat
            a, _ = _trace_products(M, _basis(X[i].kind))
            out[off[i]:off[i + 1]] = np.trace(M) * a
        return out

    def hess(X):
        n = X.total_dim
        out = np.zeros((n, n))
        off = X.offsets()
        for i in range(count):
            M = A @ X[i].mat
            a, B = _trace_products(M, _basis(X[i].kind))
            out[off[i]:off[i + 1], off[i]:off[i + 1]] = np.outer(a, a) + np.trace(M) * B.T
        return out

    return ScalarField(fn, grad, hess, name="p2-objective")


def trace_constraint(Gd: np.ndarray, i: int, bound: float = 0.2) -> ScalarField:
    """``-tr(Gd^{-1} G_i)^2 + bound``."""
    A = np.linalg.inv(Gd)

    def fn(X):
        return -np.trace(A @ X[i].mat) ** 2 + bound

    def grad(X):
        M = A @ X[i].mat
        a, _ = _trace_products(M, _basis(X[i].kind))
        return _block(X, i, -2.0 * np.trace(M) * a)

    def hess(X):
        M = A @ X[i].mat
        a, B = _trace_products(M, _basis(X[i].kind))
        return _hess_block(X, i, -2.0 * (np.outer(a, a) + np.trace(M) * B.T))

    return ScalarField(fn, grad, hess, name=f"-tr(Gd^-1 G{i + 1})^2+{bound:g}")


def _feasible_start(spec: ProblemSpec, rng) -> GroupTuple:
    for _ in range(MAX_START_ATTEMPTS):
        X0 = GroupTuple(random_element(k, rng) for k in spec.kinds)
        if all(c(X0) < 0 for c in spec.ineq):
            return X0
    raise SamplingError(f"no strictly feasible start for {spec.name} after {MAX_START_ATTEMPTS} draws")


def p1_spec(Gd: np.ndarray, variant: str = EXACT) -> ProblemSpec:
    n = Gd.shape[0]
    kind = SOn(n)
    ineq = []
    for i in range(2):
        ineq.append(entry_constraint(i, 0, 0.5))
        ineq.append(entry_constraint(i, 1, 0.3))
    return ProblemSpec((kind, kind), log_distance_objective(Gd, 2, variant), tuple(ineq), (),
                       name=f"P1-SO{n}")


def p2_spec(Gd: np.ndarray) -> ProblemSpec:
    n = Gd.shape[0]
    kind = SLn(n)
    ineq = (trace_constraint(Gd, 0), trace_constraint(Gd, 1))
    return ProblemSpec((kind, kind), trace_objective(Gd, 2), ineq, (), name=f"P2-SL{n}")


def build_p1(n: int, seed, variant: str = SQUARED):
    """P1 instance and a strictly feasible start, both drawn from ``seed``."""
    if n < 2:
        raise ValueError("P1 needs n >= 2")
    rng = np.random.default_rng(seed)
    Gd = random_element(SOn(n), rng).mat
    spec = p1_spec(Gd, variant)
    return spec, _feasible_start(spec, rng)


def build_p2(n: int, seed):
    """P2 instance and a strictly feasible start, both drawn from ``seed``."""
    if n < 2:
        raise ValueError("P2 needs n >= 2")
    rng = np.random.default_rng(seed)
    Gd = random_element(SLn(n), rng).mat
    spec = p2_spec(Gd)
    return spec, _feasible_start(spec, rng)


BUILDERS = {"p1": build_p1, "p2": build_p2}
