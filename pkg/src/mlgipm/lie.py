"""Matrix Lie groups SO(n), SL(n) and the translation group T(d).

Basis conventions (fixed so that coordinates are reproducible):

* so(n): ``E_ij - E_ji`` for ``i < j`` in lexicographic order.
* sl(n): off-diagonal units ``E_ij`` (``i != j``, lexicographic), then the
  traceless diagonals ``E_ii - E_{i+1,i+1}``.
* t(d): ``(d+1) x (d+1)`` matrices with a single 1 in row ``i`` of the last
  column, ``i = 0..d-1``.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionError, DomainError, GroupDriftError
from .matfun import expm

SO = "SO"
SL = "SL"
T = "T"
_FAMILIES = (SO, SL, T)

# membership tolerances
SO_TOL = 1e-9
SL_TOL = 1e-8
T_TOL = 1e-12


@dataclass(frozen=True)
class GroupKind:
    family: str
    n: int

    def __post_init__(self):
        if self.family not in _FAMILIES:
            raise ValueError(f"unknown group family {self.family!r}")
        if self.n < 1 or (self.family != T and self.n < 2):
            raise ValueError(f"invalid size {self.n} for {self.family}")

    @property
    def dim(self) -> int:
        """Dimension of the Lie algebra."""
        if self.family == SO:
            return self.n * (self.n - 1) // 2
        if self.family == SL:
            return self.n * self.n - 1
        return self.n

    @property
    def size(self) -> int:
        """Side length of the ambient matrix."""
        return self.n + 1 if self.family == T else self.n

    @property
    def tol(self) -> float:
        return {SO: SO_TOL, SL: SL_TOL, T: T_TOL}[self.family]

    def __str__(self):
        return f"{self.family}{self.n}"

    @classmethod
    def parse(cls, text: str) -> "GroupKind":
        m = re.fullmatch(r"\s*(SO|SL|T)\s*\(?\s*(\d+)\s*\)?\s*", text)
        if not m:
            raise ValueError(f"cannot parse group kind {text!r}")
        return cls(m.group(1), int(m.group(2)))


def SOn(n):
    return GroupKind(SO, n)


def SLn(n):
    return GroupKind(SL, n)


def Td(d):
    return GroupKind(T, d)


@lru_cache(maxsize=None)
def _basis(kind: GroupKind) -> np.ndarray:
    n = kind.n
    mats = []
    if kind.family == SO:
        for i in range(n):
            for j in range(i + 1, n):
                E = np.zeros((n, n))
                E[i, j] = -1.0
                E[j, i] = 1.0
                mats.append(E)
    elif kind.family == SL:
        for i in range(n):
            for j in range(n):
                if i != j:
                    E = np.zeros((n, n))
                    E[i, j] = 1.0
                    mats.append(E)
        for i in range(n - 1):
            E = np.zeros((n, n))
            E[i, i] = 1.0
            E[i + 1, i + 1] = -1.0
            mats.append(E)
    else:
        for i in range(n):
            E = np.zeros((n + 1, n + 1))
            E[i, n] = 1.0
            mats.append(E)
    basis = np.array(mats)
    basis.setflags(write=False)
    return basis


@lru_cache(maxsize=None)
def _gram_inverse(kind: GroupKind) -> np.ndarray:
    B = _basis(kind).reshape(kind.dim, -1)
    return np.linalg.inv(B @ B.T)


def generators(kind: GroupKind) -> list:
    """Ordered basis ``E_1..E_m`` of the Lie algebra of ``kind``."""
    return [E.copy() for E in _basis(kind)]


def hat(kind: GroupKind, zeta) -> np.ndarray:
    """Algebra element ``sum_i zeta_i E_i``."""
    zeta = np.asarray(zeta, dtype=float).reshape(-1)
    if zeta.shape[0] != kind.dim:
        raise DimensionError(
            f"{kind} twist needs {kind.dim} coordinates, got {zeta.shape[0]}")
    return np.tensordot(zeta, _basis(kind), axes=1)


def vee(kind: GroupKind, xi, tol: float = 1e-6) -> np.ndarray:
    """Coordinates of an algebra element, by the Gram-system solve.

    Raises DomainError if ``xi`` is further than ``tol`` (Frobenius, relative
    to ``max(1, ||xi||)``) from the algebra.
    """
    xi = np.asarray(xi, dtype=float)
    if xi.shape != (kind.size, kind.size):
        raise DimensionError(f"{kind} algebra elements are {kind.size}x{kind.size}")
    B = _basis(kind).reshape(kind.dim, -1)
    zeta = _gram_inverse(kind) @ (B @ xi.reshape(-1))
    residual = np.linalg.norm(xi - hat(kind, zeta))
    if residual > tol * max(1.0, np.linalg.norm(xi)):
        raise DomainError(f"matrix is not in the {kind} algebra (projection residual {residual:.3e})")
    return zeta


@dataclass(frozen=True, eq=False)
class GroupElement:
    kind: GroupKind
    mat: np.ndarray

    def __post_init__(self):
        mat = np.array(self.mat, dtype=float)
        if mat.shape != (self.kind.size, self.kind.size):
            raise DimensionError(
                f"{self.kind} elements are {self.kind.size}x{self.kind.size}, got {mat.shape}")
        mat.setflags(write=False)
        object.__setattr__(self, "mat", mat)

    @classmethod
    def identity(cls, kind: GroupKind) -> "GroupElement":
        return cls(kind, np.eye(kind.size))

    def residual(self) -> float:
        return membership_residual(self)

    def inverse(self) -> "GroupElement":
        if self.kind.family == SO:
            return GroupElement(self.kind, self.mat.T)
        return GroupElement(self.kind, np.linalg.inv(self.mat))

    def __matmul__(self, other: "GroupElement") -> "GroupElement":
        return GroupElement(self.kind, self.mat @ other.mat)

    def __repr__(self):
        return f"GroupElement({self.kind}, {self.mat.tolist()!r})"


def translation(z) -> GroupElement:
    """Affine embedding ``[[I, z], [0, 1]]`` of a vector in T(d)."""
    z = np.asarray(z, dtype=float).reshape(-1)
    d = z.shape[0]
    Z = np.eye(d + 1)
    Z[:d, d] = z
    return GroupElement(Td(d), Z)


def translation_vector(Z: GroupElement) -> np.ndarray:
    d = Z.kind.n
    return Z.mat[:d, d].copy()


def membership_residual(G: GroupElement) -> float:
    """Distance-like residual that vanishes exactly on the group."""
    M = G.mat
    fam = G.kind.family
    if fam == SO:
        ident = np.eye(G.kind.n)
        return float(np.linalg.norm(M.T @ M - ident) + abs(np.linalg.det(M) - 1.0))
    if fam == SL:
        return float(abs(np.linalg.det(M) - 1.0))
    d = G.kind.n
    last = np.zeros(d + 1)
    last[d] = 1.0
    return float(np.linalg.norm(M[:d, :d] - np.eye(d)) + np.linalg.norm(M[d] - last))


def _cleanup(kind: GroupKind, M: np.ndarray) -> np.ndarray:
    if kind.family == SO:
        U, _, Vt = np.linalg.svd(M)
        Q = U @ Vt
        if np.linalg.det(Q) < 0:
            U[:, -1] *= -1.0
            Q = U @ Vt
        return Q
    if kind.family == SL:
        det = np.linalg.det(M)
        if det <= 0:
            return M
        return M * det ** (-1.0 / kind.n)
    d = kind.n
    out = np.eye(d + 1)
    out[:d, d] = M[:d, d]
    return out


def exp_at(G: GroupElement, zeta) -> GroupElement:
    """Right multiplicative update ``G expm(hat(zeta))``.

    The result is re-validated; if its membership residual exceeds half the
    family tolerance it is projected back (polar factor for SO(n), determinant
    rescaling for SL(n)).
    """
    kind = G.kind
    zeta = np.asarray(zeta, dtype=float).reshape(-1)
    if zeta.shape[0] != kind.dim:
        raise DimensionError(f"{kind} twist needs {kind.dim} coordinates, got {zeta.shape[0]}")
    if kind.family == T:
        M = G.mat.copy()
        M[: kind.n, kind.n] += zeta
        return GroupElement(kind, M)
    M = G.mat @ expm(hat(kind, zeta))
    if not np.all(np.isfinite(M)):
        raise GroupDriftError(f"non-finite {kind} update")
    out = GroupElement(kind, M)
    if membership_residual(out) > 0.5 * kind.tol:
        out = GroupElement(kind, _cleanup(kind, M))
        res = membership_residual(out)
        if res > kind.tol:
            raise GroupDriftError(f"{kind} membership residual {res:.3e} after cleanup")
    return out


def random_element(kind: GroupKind, seed=None) -> GroupElement:
    """Seeded random group element.

    SO(n): QR of a standard Gaussian with sign correction (Haar), then a
    column flip to force det = +1.  SL(n): ``expm(hat(zeta))`` with ``zeta``
    Gaussian normalized to unit length.  ``seed`` may be an int or a
    ``numpy.random.Generator``.
    """
    rng = np.random.default_rng(seed)
    n = kind.n
    if kind.family == SO:
        Q, R = np.linalg.qr(rng.standard_normal((n, n)))
        Q = Q * np.sign(np.diag(R))
        if np.linalg.det(Q) < 0:
            Q[:, 0] *= -1.0
        return GroupElement(kind, Q)
    if kind.family == SL:
        zeta = rng.standard_normal(kind.dim)
        zeta /= np.linalg.norm(zeta)
        return GroupElement(kind, expm(hat(kind, zeta)))
    return translation(rng.standard_normal(n))


class GroupTuple(Sequence):
    """Ordered collection of group elements, the solver's primal variable."""

    __slots__ = ("_elements",)

    def __init__(self, elements: Iterable[GroupElement]):
        self._elements = tuple(elements)

    def __getitem__(self, i):
        return self._elements[i]

    def __len__(self):
        return len(self._elements)

    def __repr__(self):
        return f"GroupTuple({list(self._elements)!r})"

    @property
    def kinds(self) -> tuple:
        return tuple(G.kind for G in self._elements)

    @property
    def dims(self) -> tuple:
        return tuple(G.kind.dim for G in self._elements)

    @property
    def total_dim(self) -> int:
        return sum(self.dims)

    def offsets(self) -> np.ndarray:
        return np.concatenate([[0], np.cumsum(self.dims)]).astype(int)

    def replace(self, i: int, G: GroupElement) -> "GroupTuple":
        els = list(self._elements)
        els[i] = G
        return GroupTuple(els)

    def retract(self, zeta) -> "GroupTuple":
        """Componentwise ``X_i expm(hat(zeta_i))`` for a stacked twist."""
        zeta = np.asarray(zeta, dtype=float).reshape(-1)
        if zeta.shape[0] != self.total_dim:
            raise DimensionError(f"stacked twist needs {self.total_dim} coordinates")
        off = self.offsets()
        return GroupTuple(exp_at(G, zeta[off[i]:off[i + 1]]) for i, G in enumerate(self._elements))

    def residuals(self) -> list:
        return [membership_residual(G) for G in self._elements]
