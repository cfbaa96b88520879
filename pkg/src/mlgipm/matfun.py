"""Dense real-matrix kernels: exponential, principal logarithm, guarded linear solve.

``expm`` is the degree-13 scaling-and-squaring scheme with the lower-order
Padé shortcuts for small norms.  ``logm`` is inverse scaling-and-squaring:
repeated principal square roots via the scaled product-form Denman-Beavers
iteration, then a Gauss-Legendre (diagonal Padé) evaluation of log(I + X).
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.linalg as sla
from scipy.linalg import lapack

from .errors import DimensionError, DomainError, NumericalError, SingularityError


@dataclass(frozen=True)
class MatfunOptions:
    # logm
    branch_tol: float = 1e-12
    sqrt_tol: float = 1e-14
    sqrt_max_iter: int = 100
    max_square_roots: int = 64
    log_theta: float = 0.5
    quad_nodes: int = 16
    # solve_dense
    cond_cap: float = 1e12
    tikhonov_scale: float = 1e-8


DEFAULT_OPTIONS = MatfunOptions()


def _as_square(A, name="A"):
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise DomainError(f"{name} has non-finite entries")
    return A


# Padé coefficients b_0..b_m, Higham (2005)
_PADE = {
    3: (120.0, 60.0, 12.0, 1.0),
    5: (30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0),
    7: (17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0),
    9: (17643225600.0, 8821612800.0, 2075673600.0, 302702400.0, 30270240.0,
        2162160.0, 110880.0, 3960.0, 90.0, 1.0),
    13: (64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
         1187353796428800.0, 129060195264000.0, 10559470521600.0,
         670442572800.0, 33522128640.0, 1323241920.0, 40840800.0, 960960.0,
         16380.0, 182.0, 1.0),
}
_THETA = {
    3: 1.495585217958292e-2,
    5: 2.539398330063230e-1,
    7: 9.504178996162932e-1,
    9: 2.097847961257068e0,
    13: 5.371920351148152e0,
}


def _pade_uv(A, m):
    b = _PADE[m]
    n = A.shape[0]
    ident = np.eye(n)
    A2 = A @ A
    if m == 13:
        A4 = A2 @ A2
        A6 = A4 @ A2
        U = A @ (A6 @ (b[13] * A6 + b[11] * A4 + b[9] * A2)
                 + b[7] * A6 + b[5] * A4 + b[3] * A2 + b[1] * ident)
        V = (A6 @ (b[12] * A6 + b[10] * A4 + b[8] * A2)
             + b[6] * A6 + b[4] * A4 + b[2] * A2 + b[0] * ident)
        return U, V
    powers = [ident, A2]
    while len(powers) <= m // 2:
        powers.append(powers[-1] @ A2)
    U = A @ sum(b[2 * k + 1] * powers[k] for k in range(m // 2 + 1))
    V = sum(b[2 * k] * powers[k] for k in range(m // 2 + 1))
    return U, V


def expm(A):
    """Matrix exponential e^A."""
    A = _as_square(A)
    if A.shape[0] == 0:
        return A.copy()
    norm1 = np.linalg.norm(A, 1)
    for m in (3, 5, 7, 9):
        if norm1 <= _THETA[m]:
            U, V = _pade_uv(A, m)
            return np.linalg.solve(V - U, V + U)
    s = max(0, int(np.ceil(np.log2(norm1 / _THETA[13]))))
    U, V = _pade_uv(A / 2.0**s, 13)
    X = np.linalg.solve(V - U, V + U)
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(s):
            X = X @ X
    if not np.all(np.isfinite(X)):
        raise NumericalError("matrix exponential overflowed", norm=norm1, squarings=s)
    return X


def sqrtm_db(A, opts=DEFAULT_OPTIONS):
    """Principal square root by the scaled product-form Denman-Beavers iteration."""
    A = _as_square(A)
    n = A.shape[0]
    ident = np.eye(n)
    M = A.copy()
    Y = A.copy()
    history = []
    for it in range(opts.sqrt_max_iter):
        err = np.linalg.norm(M - ident, 1)
        history.append(err)
        if err <= opts.sqrt_tol * n:
            return Y
        # stagnation at the rounding floor counts as converged
        if it > 3 and err < 1e-10 and err >= history[-2]:
            return Y
        Minv = np.linalg.inv(M)
        gamma = 1.0
        if err > 1e-2:
            det = abs(np.linalg.det(M))
            if det > 0.0 and np.isfinite(det):
                gamma = det ** (-1.0 / (2 * n))
        Y = 0.5 * gamma * Y @ (ident + Minv / gamma**2)
        M = 0.5 * (ident + 0.5 * (gamma**2 * M + Minv / gamma**2))
        if not np.all(np.isfinite(M)):
            break
    raise NumericalError(
        "square-root iteration did not converge",
        iterations=len(history),
        residual_history=history[-5:],
    )


def _check_branch(A, opts):
    eig = np.linalg.eigvals(A)
    scale = max(1.0, float(np.max(np.abs(eig))))
    on_cut = (np.abs(eig.imag) <= opts.branch_tol * scale) & (eig.real <= 0.0)
    if np.any(on_cut):
        raise DomainError(
            f"eigenvalue on the principal branch cut: {eig[on_cut][0]!r}")


@lru_cache(maxsize=8)
def _gauss_legendre01(m):
    nodes, weights = np.polynomial.legendre.leggauss(m)
    return 0.5 * (nodes + 1.0), 0.5 * weights


def logm(A, opts=DEFAULT_OPTIONS):
    """Principal matrix logarithm of a real matrix with no eigenvalue on (-inf, 0]."""
    A = _as_square(A)
    n = A.shape[0]
    if n == 0:
        return A.copy()
    _check_branch(A, opts)
    ident = np.eye(n)
    X = A
    k = 0
    while np.linalg.norm(X - ident, 1) > opts.log_theta:
        if k >= opts.max_square_roots:
            raise NumericalError("too many square roots in logm", square_roots=k)
        X = sqrtm_db(X, opts)
        k += 1
    E = X - ident
    nodes, weights = _gauss_legendre01(opts.quad_nodes)
    # log(I+E) = int_0^1 E (I + tE)^{-1} dt, all nodes in one batched solve
    shifted = ident + nodes[:, None, None] * E
    terms = np.linalg.solve(shifted.transpose(0, 2, 1), np.broadcast_to(E.T, shifted.shape))
    L = np.tensordot(weights, terms, axes=1).T
    return 2.0**k * L


@dataclass(frozen=True)
class LinearSolve:
    x: np.ndarray
    cond: float
    regularized: bool
    shift: float = 0.0


def _lu_cond(A):
    with warnings.catch_warnings():
        # exact singularity shows up as an infinite condition estimate instead
        warnings.simplefilter("ignore", sla.LinAlgWarning)
        lu, piv = sla.lu_factor(A, check_finite=False)
    anorm = np.linalg.norm(A, 1)
    rcond, info = lapack.dgecon(lu, anorm, norm="1")
    cond = np.inf if rcond == 0.0 or info != 0 else 1.0 / rcond
    return (lu, piv), cond


def solve_dense(A, b, opts=DEFAULT_OPTIONS):
    """Solve ``A x = b`` with partial-pivoting LU and a 1-norm condition estimate.

    If the estimate exceeds ``opts.cond_cap`` the system is retried with the
    shift ``A + delta I``, ``delta = tikhonov_scale * ||A||_F``, and the result
    is flagged as regularized.
    """
    A = _as_square(A)
    b = np.asarray(b, dtype=float)
    if b.shape[0] != A.shape[0]:
        raise DimensionError(
            f"right-hand side has length {b.shape[0]}, expected {A.shape[0]}")
    if not np.all(np.isfinite(b)):
        raise DomainError("right-hand side has non-finite entries")
    with np.errstate(all="ignore"):
        factor, cond = _lu_cond(A)
    if cond <= opts.cond_cap:
        return LinearSolve(sla.lu_solve(factor, b, check_finite=False), cond, False)
    delta = opts.tikhonov_scale * np.linalg.norm(A, "fro")
    if delta == 0.0:
        raise SingularityError("zero matrix cannot be regularized", cond=cond, shift=0.0)
    shifted = A + delta * np.eye(A.shape[0])
    with np.errstate(all="ignore"):
        factor, cond = _lu_cond(shifted)
    if not np.isfinite(cond) or cond > opts.cond_cap / opts.tikhonov_scale:
        raise SingularityError(
            "matrix is singular even after regularization", cond=cond, shift=delta)
    x = sla.lu_solve(factor, b, check_finite=False)
    return LinearSolve(x, cond, True, delta)
