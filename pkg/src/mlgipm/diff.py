"""Linearization of fields over group tuples in Lie-algebra coordinates.

For a scalar field ``f`` on a tuple ``X = (G_1, ..., G_n)`` the gradient row
has one entry per coordinate ``(i, j)``::

    d/de f(X with G_i -> G_i expm(e E_j)) at e = 0

concatenated block by block.  The sensitivity matrix stacks gradient rows of
a vector field, and the curvature matrix is the sensitivity of the gradient
(column ``c`` is the derivative of the whole row along coordinate ``c``).
Away from critical points the curvature need not be symmetric; its
symmetric part equals the Euclidean Hessian of the chart
``zeta -> f(X expm(hat(zeta)))`` at ``zeta = 0``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import FieldEvaluationError
from .lie import GroupElement, GroupKind, GroupTuple, _basis
from .matfun import expm

EPS = np.finfo(float).eps
FIRST_ORDER_STEP = EPS ** (1.0 / 3.0)
NESTED_STEP = EPS ** (1.0 / 4.0)
RICHARDSON_STEP = EPS ** (1.0 / 5.0)
GRADIENT_CHECK_TOL = 1e-5


@dataclass(frozen=True)
class ScalarField:
    """A real function of a group tuple with optional analytic derivatives.

    ``grad`` returns the stacked gradient row; ``hess`` returns the
    (unsymmetrized) curvature matrix.
    """

    fn: Callable[[GroupTuple], float]
    grad: Optional[Callable[[GroupTuple], np.ndarray]] = None
    hess: Optional[Callable[[GroupTuple], np.ndarray]] = None
    name: str = "f"

    def __call__(self, X: GroupTuple) -> float:
        return float(self.fn(X))


VectorField = Sequence[ScalarField]


def constant(value: float, name="const") -> ScalarField:
    return ScalarField(lambda X: value, lambda X: np.zeros(X.total_dim),
                       lambda X: np.zeros((X.total_dim, X.total_dim)), name=name)


def linear_combination(terms, name="sum") -> ScalarField:
    """Field ``sum_k a_k f_k`` for ``terms = [(a_k, f_k), ...]``.

    Analytic derivatives are carried over only if every term has them.
    """
    terms = [(float(a), f) for a, f in terms]

    def fn(X):
        return sum(a * f(X) for a, f in terms)

    grad = hess = None
    if all(f.grad is not None for _, f in terms):
        def grad(X):
            out = np.zeros(X.total_dim)
            for a, f in terms:
                if a != 0.0:
                    out += a * np.asarray(f.grad(X), dtype=float)
            return out
    if all(f.hess is not None for _, f in terms):
        def hess(X):
            out = np.zeros((X.total_dim, X.total_dim))
            for a, f in terms:
                if a != 0.0:
                    out += a * np.asarray(f.hess(X), dtype=float)
            return out
    return ScalarField(fn, grad, hess, name=name)


@lru_cache(maxsize=4096)
def _probe(kind: GroupKind, j: int, h: float) -> np.ndarray:
    return expm(h * _basis(kind)[j])


def _perturbed(X: GroupTuple, i: int, j: int, h: float) -> GroupTuple:
    G = X[i]
    return X.replace(i, GroupElement(G.kind, G.mat @ _probe(G.kind, j, h)))


def _eval(f, X, location):
    try:
        return f(X)
    except FieldEvaluationError:
        raise
    except Exception as exc:
        raise FieldEvaluationError(
            f"evaluating {getattr(f, 'name', f)!s} at {location} failed: {exc}",
            location=location) from exc


def directional_derivative(f: ScalarField, X: GroupTuple, i: int, j: int,
                           h: float = FIRST_ORDER_STEP) -> float:
    """Central difference of ``f`` along generator ``j`` of element ``i``."""
    if h <= 0:
        raise ValueError("step must be positive")
    fp = _eval(f, _perturbed(X, i, j, h), (i, j, +h))
    fm = _eval(f, _perturbed(X, i, j, -h), (i, j, -h))
    return (fp - fm) / (2.0 * h)


def fd_gradient(f: ScalarField, X: GroupTuple, h: float = FIRST_ORDER_STEP) -> np.ndarray:
    out = np.empty(X.total_dim)
    c = 0
    for i, G in enumerate(X):
        for j in range(G.kind.dim):
            out[c] = directional_derivative(f, X, i, j, h)
            c += 1
    return out


def gradient_row(f: ScalarField, X: GroupTuple, h: float = FIRST_ORDER_STEP) -> np.ndarray:
    """Gradient row, analytic if ``f`` provides one, else finite differences."""
    if f.grad is not None:
        try:
            row = np.asarray(f.grad(X), dtype=float).reshape(-1)
        except Exception as exc:
            raise FieldEvaluationError(f"analytic gradient of {f.name} failed: {exc}") from exc
        if row.shape[0] != X.total_dim:
            raise ValueError(f"gradient of {f.name} has length {row.shape[0]}, expected {X.total_dim}")
        return row
    return fd_gradient(f, X, h)


def sensitivity(F: VectorField, X: GroupTuple) -> np.ndarray:
    rows = np.zeros((len(F), X.total_dim))
    for k, f in enumerate(F):
        try:
            rows[k] = gradient_row(f, X)
        except FieldEvaluationError as exc:
            raise FieldEvaluationError(f"component {k}: {exc}", location=("row", k)) from exc
    return rows


@dataclass
class Curvature:
    values: np.ndarray
    symmetrized: bool
    warnings: list = field(default_factory=list)


def curvature(f: ScalarField, X: GroupTuple, symmetrize: bool = False,
              h: Optional[float] = None) -> Curvature:
    """Curvature matrix of ``f`` at ``X``.

    Uses the analytic ``hess`` hook when present; otherwise differentiates
    the gradient row by central differences (nested differences when the
    gradient itself is finite-differenced).
    """
    n = X.total_dim
    warnings = []
    if f.hess is not None:
        H = np.asarray(f.hess(X), dtype=float).reshape(n, n)
    else:
        if h is None:
            h = FIRST_ORDER_STEP if f.grad is not None else NESTED_STEP
        if h < 1e3 * EPS:
            warnings.append(f"step {h:.3e} is near machine precision")
        H = np.empty((n, n))
        c = 0
        for i, G in enumerate(X):
            for j in range(G.kind.dim):
                gp = gradient_row(f, _perturbed(X, i, j, h))
                gm = gradient_row(f, _perturbed(X, i, j, -h))
                H[:, c] = (gp - gm) / (2.0 * h)
                c += 1
    if not np.all(np.isfinite(H)):
        warnings.append("non-finite curvature entries")
    if symmetrize:
        H = 0.5 * (H + H.T)
    return Curvature(H, symmetrize, warnings)


@dataclass
class GradientCheck:
    discrepancy: float
    passed: bool
    analytic: np.ndarray
    reference: np.ndarray


def richardson_gradient(f: ScalarField, X: GroupTuple, h: float = RICHARDSON_STEP) -> np.ndarray:
    coarse = fd_gradient(f, X, h)
    fine = fd_gradient(f, X, h / 2.0)
    return (4.0 * fine - coarse) / 3.0


def check_gradient(f: ScalarField, X: GroupTuple, tol: float = GRADIENT_CHECK_TOL,
                   floor: float = 1e-8) -> GradientCheck:
    """Compare the analytic gradient with a Richardson-extrapolated FD row.

    The discrepancy is ``max|a - fd| / max(max|fd|, floor)``.
    """
    if f.grad is None:
        raise ValueError(f"field {f.name} has no analytic gradient")
    analytic = gradient_row(f, X)
    ref = richardson_gradient(f, X)
    disc = float(np.max(np.abs(analytic - ref), initial=0.0) / max(np.max(np.abs(ref), initial=0.0), floor))
    return GradientCheck(disc, disc <= tol, analytic, ref)


def check_curvature(f: ScalarField, X: GroupTuple, tol: float = 1e-4,
                    floor: float = 1e-8) -> GradientCheck:
    """Compare an analytic curvature hook with differences of the gradient."""
    if f.hess is None:
        raise ValueError(f"field {f.name} has no analytic curvature")
    analytic = curvature(f, X).values
    stripped = ScalarField(f.fn, f.grad, None, f.name)
    ref = curvature(stripped, X).values
    disc = float(np.max(np.abs(analytic - ref)) / max(np.max(np.abs(ref)), floor))
    return GradientCheck(disc, disc <= tol, analytic, ref)
