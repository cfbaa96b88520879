"""Primal-dual interior-point method with Lie-group primal variables.

The problem is ``min f(X)`` subject to ``g(X) <= 0`` and ``h(X) = 0`` where
``X`` is a tuple of matrix group elements.  With slacks ``s`` and
multipliers ``nu`` (inequalities) and ``lam`` (equalities) the solver drives

    F = [grad L^T ; g + s ; h ; S nu - mu e]

to zero by Newton steps in Lie-algebra coordinates.  Primal elements are
updated multiplicatively, ``G_i <- G_i expm(hat(alpha dzeta_i))``; the stacked
``z = [nu; lam; s]`` lives in the translation group T(d), ``d = n2 + 2 n1``,
whose exponential update is the additive one.
"""
from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .diff import ScalarField, curvature, gradient_row, linear_combination
from .errors import (
    InputError,
    MLGError,
    NumericalError,
    StateError,
)
from .lie import GroupTuple, exp_at, membership_residual, translation, translation_vector
from .matfun import MatfunOptions, solve_dense

log = logging.getLogger(__name__)

CONVERGED = "converged"
MAX_ITERATIONS = "max-iterations"
NUMERICAL_FAILURE = "numerical-failure"


@dataclass(frozen=True)
class ProblemSpec:
    kinds: tuple
    objective: ScalarField
    ineq: tuple = ()
    eq: tuple = ()
    name: str = "problem"

    def __post_init__(self):
        object.__setattr__(self, "kinds", tuple(self.kinds))
        object.__setattr__(self, "ineq", tuple(self.ineq))
        object.__setattr__(self, "eq", tuple(self.eq))

    @property
    def n_ineq(self) -> int:
        return len(self.ineq)

    @property
    def n_eq(self) -> int:
        return len(self.eq)

    def primal_dim(self) -> int:
        return sum(k.dim for k in self.kinds)

    def lagrangian(self, nu, lam) -> ScalarField:
        terms = [(1.0, self.objective)]
        terms += [(v, g) for v, g in zip(nu, self.ineq)]
        terms += [(v, h) for v, h in zip(lam, self.eq)]
        return linear_combination(terms, name="lagrangian")


@dataclass(frozen=True)
class SolverOptions:
    tol: float = 1e-6
    tau: float = 0.995
    sigma: float = 0.2
    mu0: float = 1.0
    max_iter: int = 500
    # None: fraction-to-the-boundary; a float a in (0, 1]: fixed step a, capped by the boundary rule
    alpha_fixed: Optional[float] = None
    perturb_c: float = 0.0
    seed: int = 0
    symmetrize: bool = True
    s_min: float = 1e-2
    s_margin: float = 1e-2
    sigma_bounds: tuple = (0.1, 0.5)
    matfun: MatfunOptions = field(default_factory=MatfunOptions)

    def __post_init__(self):
        if not 0.0 < self.tau < 1.0:
            raise InputError(f"tau must lie in (0, 1), got {self.tau}")
        lo, hi = self.sigma_bounds
        if not lo <= self.sigma <= hi:
            raise InputError(f"sigma must lie in [{lo}, {hi}], got {self.sigma}")
        if self.perturb_c < 0:
            raise InputError("perturb_c must be nonnegative")
        if self.mu0 <= 0 or self.tol <= 0:
            raise InputError("mu0 and tol must be positive")
        if self.max_iter < 0:
            raise InputError("max_iter must be nonnegative")
        if self.alpha_fixed is not None and not 0.0 < self.alpha_fixed <= 1.0:
            raise InputError("fixed step must lie in (0, 1]")

    @property
    def alpha_mode(self) -> str:
        return "ftb" if self.alpha_fixed is None else f"fixed:{self.alpha_fixed:g}"


@dataclass
class SolverState:
    X: GroupTuple
    nu: np.ndarray
    lam: np.ndarray
    s: np.ndarray
    mu: float
    k: int = 0
    strictly_feasible: bool = True

    def z(self) -> np.ndarray:
        return np.concatenate([self.nu, self.lam, self.s])


# ---------------------------------------------------------------- evaluation

@dataclass
class _Eval:
    f: float
    g: np.ndarray
    h: np.ndarray
    grad_f: np.ndarray
    Jg: np.ndarray
    Jh: np.ndarray


def _evaluate(spec: ProblemSpec, X: GroupTuple) -> _Eval:
    N = X.total_dim
    g = np.array([c(X) for c in spec.ineq], dtype=float)
    h = np.array([c(X) for c in spec.eq], dtype=float)
    Jg = np.array([gradient_row(c, X) for c in spec.ineq]).reshape(len(spec.ineq), N)
    Jh = np.array([gradient_row(c, X) for c in spec.eq]).reshape(len(spec.eq), N)
    return _Eval(spec.objective(X), g, h, gradient_row(spec.objective, X), Jg, Jh)


def _check_tuple(spec: ProblemSpec, X: GroupTuple):
    if tuple(X.kinds) != spec.kinds:
        raise InputError(f"start has kinds {[str(k) for k in X.kinds]}, problem expects {[str(k) for k in spec.kinds]}")
    for i, G in enumerate(X):
        res = membership_residual(G)
        if res > G.kind.tol:
            raise InputError(f"element {i} is off {G.kind} (residual {res:.3e})")


def init_state(spec: ProblemSpec, X0: GroupTuple, opts: SolverOptions = SolverOptions()) -> SolverState:
    """Interior starting point: ``s = max(-g, s_min) + s_margin``, ``nu = mu0 / s``, ``lam = 0``."""
    _check_tuple(spec, X0)
    g = np.array([c(X0) for c in spec.ineq], dtype=float)
    s = np.maximum(-g, opts.s_min) + opts.s_margin
    nu = opts.mu0 / s
    feasible = bool(np.all(g < 0))
    if not feasible:
        log.warning("start is not strictly feasible (max g = %.3e)", g.max())
    return SolverState(X0, nu, np.zeros(spec.n_eq), s, opts.mu0, 0, feasible)


def _residual(spec, state, ev: _Eval, mu) -> np.ndarray:
    stat = ev.grad_f + ev.Jg.T @ state.nu + ev.Jh.T @ state.lam
    return np.concatenate([stat, ev.g + state.s, ev.h, state.s * state.nu - mu])


def kkt_residual(spec: ProblemSpec, state: SolverState, mu: Optional[float] = None) -> np.ndarray:
    """Stacked KKT field; ``mu`` defaults to the state's barrier parameter."""
    ev = _evaluate(spec, state.X)
    return _residual(spec, state, ev, state.mu if mu is None else mu)


def lagrangian_curvature(spec, state, symmetrize=True) -> np.ndarray:
    return curvature(spec.lagrangian(state.nu, state.lam), state.X, symmetrize=symmetrize).values


def _assemble(H, Jg, Jh, s, nu) -> np.ndarray:
    N = H.shape[0]
    n1, n2 = Jg.shape[0], Jh.shape[0]
    size = N + 2 * n1 + n2
    K = np.zeros((size, size))
    iv, il, i_s = N, N + n1, N + n1 + n2
    K[:N, :N] = H
    K[:N, iv:il] = Jg.T
    K[:N, il:i_s] = Jh.T
    K[iv:il, :N] = Jg
    K[iv:il, i_s:] = np.eye(n1)
    K[il:i_s, :N] = Jh
    K[i_s:, iv:il] = np.diag(s)
    K[i_s:, i_s:] = np.diag(nu)
    return K


def newton_matrix(spec: ProblemSpec, state: SolverState, symmetrize: bool = True,
                  ev: Optional[_Eval] = None) -> np.ndarray:
    """Block Newton matrix; unknowns ordered ``[dzeta; dnu; dlam; ds]``."""
    if ev is None:
        ev = _evaluate(spec, state.X)
    H = lagrangian_curvature(spec, state, symmetrize)
    return _assemble(H, ev.Jg, ev.Jh, state.s, state.nu)


@dataclass
class StepDiagnostics:
    residual_rel: float
    regularized: bool
    cond: float
    rho_norm: float


def perturbation(F: np.ndarray, c: float, seed: int, k: int) -> np.ndarray:
    """``c ||F|| u`` with ``u`` uniform on the unit sphere, seeded by ``(seed, k)``."""
    if c == 0.0:
        return np.zeros_like(F)
    rng = np.random.default_rng([seed, k])
    u = rng.standard_normal(F.shape[0])
    u /= np.linalg.norm(u)
    return c * np.linalg.norm(F) * u


def newton_step(spec: ProblemSpec, state: SolverState, opts: SolverOptions = SolverOptions(),
                F: Optional[np.ndarray] = None, K: Optional[np.ndarray] = None):
    """Solve ``K dx = -F + rho`` and report the achieved linear residual."""
    if F is None or K is None:
        ev = _evaluate(spec, state.X)
        if F is None:
            F = _residual(spec, state, ev, state.mu)
        if K is None:
            K = newton_matrix(spec, state, opts.symmetrize, ev)
    rho = perturbation(F, opts.perturb_c, opts.seed, state.k)
    sol = solve_dense(K, -F + rho, opts.matfun)
    Fn = np.linalg.norm(F)
    resid = np.linalg.norm(K @ sol.x + F)
    rel = resid / Fn if Fn > 0 else 0.0
    return sol.x, StepDiagnostics(float(rel), sol.regularized, float(sol.cond), float(np.linalg.norm(rho)))


def split_direction(spec: ProblemSpec, dx: np.ndarray):
    N = spec.primal_dim()
    n1, n2 = spec.n_ineq, spec.n_eq
    return dx[:N], dx[N:N + n1], dx[N + n1:N + n1 + n2], dx[N + n1 + n2:]


def _max_step(v, dv):
    neg = dv < 0
    if not np.any(neg):
        return math.inf
    with np.errstate(over="ignore"):
        return float(np.min(-v[neg] / dv[neg]))


def fraction_to_boundary(s, ds, nu, dnu, tau: float) -> float:
    """``tau * min(1, alpha_pri, alpha_dual)``; empty minima count as infinity."""
    s, ds, nu, dnu = (np.asarray(a, dtype=float) for a in (s, ds, nu, dnu))
    if np.any(s <= 0) or np.any(nu <= 0):
        raise StateError("slacks and multipliers must be strictly positive")
    if not 0.0 < tau < 1.0:
        raise InputError("tau must lie in (0, 1)")
    return tau * min(1.0, _max_step(s, ds), _max_step(nu, dnu))


def step_length(state: SolverState, ds, dnu, opts: SolverOptions) -> float:
    alpha = fraction_to_boundary(state.s, ds, state.nu, dnu, opts.tau)
    if opts.alpha_fixed is not None:
        alpha = min(opts.alpha_fixed, alpha)
    return alpha


def apply_step(spec: ProblemSpec, state: SolverState, dx: np.ndarray, alpha: float) -> SolverState:
    """Exponential update of every primal element and of ``z`` in T(d)."""
    if not 0.0 < alpha <= 1.0 and not (alpha == 0.0 and not np.any(dx)):
        raise InputError(f"step length must lie in (0, 1], got {alpha}")
    dzeta, dnu, dlam, ds = split_direction(spec, dx)
    X = state.X.retract(alpha * dzeta)
    z = state.z()
    if z.size:
        Z = exp_at(translation(z), alpha * np.concatenate([dnu, dlam, ds]))
        z = translation_vector(Z)
    n1, n2 = spec.n_ineq, spec.n_eq
    return SolverState(X, z[:n1], z[n1:n1 + n2], z[n1 + n2:], state.mu, state.k + 1,
                       state.strictly_feasible)


def update_mu(s, nu, sigma: float) -> float:
    """``sigma * s^T nu / n1``; zero when there are no inequalities."""
    s = np.asarray(s, dtype=float)
    nu = np.asarray(nu, dtype=float)
    if s.size == 0:
        return 0.0
    if np.any(s <= 0) or np.any(nu <= 0):
        raise StateError("slacks and multipliers must be strictly positive")
    return float(sigma * (s @ nu) / s.size)


# ------------------------------------------------------------------- solve

@dataclass
class IterationRecord:
    k: int
    kkt_norm: float          # mu = 0 residual, the termination quantity
    kkt_norm_mu: float       # residual at the current mu
    mu: float
    alpha: Optional[float]   # step that produced this iterate
    objective: float
    max_violation: float
    membership: list
    min_s: float
    min_nu: float
    linear_residual: Optional[float] = None
    regularized: Optional[bool] = None

    def to_dict(self):
        return {
            "k": self.k,
            "kkt_norm": self.kkt_norm,
            "kkt_norm_mu": self.kkt_norm_mu,
            "mu": self.mu,
            "alpha": self.alpha,
            "objective": self.objective,
            "max_violation": self.max_violation,
            "membership": list(self.membership),
            "min_s": self.min_s,
            "min_nu": self.min_nu,
            "linear_residual": self.linear_residual,
            "regularized": self.regularized,
        }


@dataclass
class SolveReport:
    status: str
    iterations: int
    trace: list
    X: GroupTuple
    nu: np.ndarray
    lam: np.ndarray
    s: np.ndarray
    mu: float
    message: str = ""
    strictly_feasible_start: bool = True

    @property
    def converged(self) -> bool:
        return self.status == CONVERGED

    @property
    def final_error(self) -> float:
        return self.trace[-1].kkt_norm if self.trace else math.nan

    def to_dict(self):
        return {
            "status": self.status,
            "iterations": self.iterations,
            "final_error": self.final_error,
            "message": self.message,
            "strictly_feasible_start": self.strictly_feasible_start,
            "solution": {
                "elements": [{"kind": str(G.kind), "matrix": G.mat.tolist()} for G in self.X],
                "nu": self.nu.tolist(),
                "lam": self.lam.tolist(),
                "s": self.s.tolist(),
                "mu": self.mu,
            },
            "trace": [r.to_dict() for r in self.trace],
        }

    def to_json(self, **kw) -> str:
        kw.setdefault("indent", 2)
        return json.dumps(self.to_dict(), allow_nan=True, **kw)


def _record(state: SolverState, ev: _Eval, alpha=None) -> IterationRecord:
    F0 = _residual(None, state, ev, 0.0)
    Fmu = _residual(None, state, ev, state.mu)
    viol = np.concatenate([np.maximum(ev.g, 0.0), np.abs(ev.h)])
    return IterationRecord(
        k=state.k,
        kkt_norm=float(np.linalg.norm(F0)),
        kkt_norm_mu=float(np.linalg.norm(Fmu)),
        mu=float(state.mu),
        alpha=alpha,
        objective=float(ev.f),
        max_violation=float(viol.max()) if viol.size else 0.0,
        membership=[membership_residual(G) for G in state.X],
        min_s=float(state.s.min()) if state.s.size else math.inf,
        min_nu=float(state.nu.min()) if state.nu.size else math.inf,
    )


def solve(spec: ProblemSpec, X0: GroupTuple, opts: SolverOptions = SolverOptions()) -> SolveReport:
    """Run the interior-point iteration from ``X0``.

    Terminates when the mu = 0 KKT residual is at most ``opts.tol`` or after
    ``opts.max_iter`` iterations.  Linear-algebra and group failures end the
    run with status ``numerical-failure``; they are never raised.
    """
    state = init_state(spec, X0, opts)
    ev = _evaluate(spec, state.X)
    trace = [_record(state, ev)]
    status, message = MAX_ITERATIONS, ""
    while True:
        if trace[-1].kkt_norm <= opts.tol:
            status = CONVERGED
            break
        if state.k >= opts.max_iter:
            status = MAX_ITERATIONS
            break
        try:
            F = _residual(spec, state, ev, state.mu)
            K = newton_matrix(spec, state, opts.symmetrize, ev)
            dx, diag = newton_step(spec, state, opts, F, K)
            _, dnu, _, ds = split_direction(spec, dx)
            alpha = step_length(state, ds, dnu, opts)
            new = apply_step(spec, state, dx, alpha)
            new.mu = update_mu(new.s, new.nu, opts.sigma) if spec.n_ineq else state.mu
            new_ev = _evaluate(spec, new.X)
            rec = _record(new, new_ev, alpha)
            if not (np.isfinite(rec.kkt_norm) and np.isfinite(rec.objective)):
                raise NumericalError("non-finite residual")
        except (MLGError, np.linalg.LinAlgError, FloatingPointError, ValueError) as exc:
            status, message = NUMERICAL_FAILURE, f"{type(exc).__name__}: {exc}"
            break
        trace[-1].linear_residual = diag.residual_rel
        trace[-1].regularized = diag.regularized
        state, ev = new, new_ev
        trace.append(rec)
    return SolveReport(status, state.k, trace, state.X, state.nu, state.lam, state.s, state.mu,
                       message, state.strictly_feasible)


# ------------------------------------------------------------- diagnostics

@dataclass
class KKTDiagnostics:
    residual: float
    active: list
    licq_sigma_min: float
    licq_ok: bool
    min_active_multiplier: float
    strict_complementarity_ok: bool
    reduced_curvature_min: float
    second_order_ok: bool
    newton_cond: float
    newton_ok: bool

    @property
    def all_ok(self) -> bool:
        return self.licq_ok and self.strict_complementarity_ok and self.second_order_ok and self.newton_ok


def kkt_diagnostics(spec: ProblemSpec, X: GroupTuple, nu, lam, s=None, *, atol: float = 1e-5,
                    licq_tol: float = 1e-8, curvature_tol: float = 1e-8,
                    cond_cap: float = 1e12) -> KKTDiagnostics:
    """Check the regularity assumptions behind local convergence at a candidate solution."""
    nu = np.asarray(nu, dtype=float).reshape(-1)
    lam = np.asarray(lam, dtype=float).reshape(-1)
    ev = _evaluate(spec, X)
    if s is None:
        s = np.maximum(-ev.g, 0.0)
    s = np.asarray(s, dtype=float).reshape(-1)
    state = SolverState(X, nu, lam, s, 0.0)
    residual = float(np.linalg.norm(_residual(spec, state, ev, 0.0)))
    active = [i for i, gi in enumerate(ev.g) if abs(gi) <= atol]
    A = np.vstack([ev.Jg[active], ev.Jh]) if (active or spec.n_eq) else np.zeros((0, X.total_dim))
    if A.shape[0]:
        sv = np.linalg.svd(A, compute_uv=False)
        sigma_min = float(sv.min()) if A.shape[0] <= A.shape[1] else 0.0
    else:
        sigma_min = math.inf
    licq_ok = sigma_min > licq_tol
    min_mult = float(nu[active].min()) if active else math.inf
    sc_ok = min_mult > atol
    H = lagrangian_curvature(spec, state, symmetrize=True)
    if A.shape[0]:
        _, sv_full, Vt = np.linalg.svd(A)
        rank = int(np.sum(sv_full > licq_tol))
        Z = Vt[rank:].T
    else:
        Z = np.eye(X.total_dim)
    red_min = float(np.linalg.eigvalsh(Z.T @ H @ Z).min()) if Z.shape[1] else math.inf
    so_ok = red_min > curvature_tol
    K = _assemble(H, ev.Jg, ev.Jh, s, nu)
    with np.errstate(all="ignore"):
        cond = float(np.linalg.cond(K)) if K.size else 1.0
    newton_ok = bool(np.isfinite(cond) and cond <= cond_cap)
    return KKTDiagnostics(residual, active, sigma_min, licq_ok, min_mult, sc_ok,
                          red_min, so_ok, cond, newton_ok)


# -------------------------------------------------------- convergence order

@dataclass
class OrderEstimate:
    q: float
    c: float
    points: int
    ok: bool
    reason: str = ""


def _values(trace) -> np.ndarray:
    if isinstance(trace, SolveReport):
        trace = trace.trace
    vals = [r.kkt_norm if isinstance(r, IterationRecord) else r for r in trace]
    return np.asarray(vals, dtype=float)


def convergence_tail(trace, threshold: float = 1e-2) -> np.ndarray:
    """Longest strictly decreasing suffix whose entries are positive and below ``threshold``."""
    r = _values(trace)
    end = len(r)
    start = end
    while start > 0:
        v = r[start - 1]
        if not (0.0 < v < threshold):
            break
        if start < end and not v > r[start]:
            break
        start -= 1
    return r[start:end]


def estimate_convergence_order(trace, threshold: float = 1e-2, min_points: int = 4) -> OrderEstimate:
    """Fit ``log r_{k+1} = q log r_k + log c`` over the tail of the residual sequence."""
    tail = convergence_tail(trace, threshold)
    if tail.size < min_points:
        return OrderEstimate(math.nan, math.nan, int(tail.size), False,
                             f"not enough data: {tail.size} tail points, need {min_points}")
    x, y = np.log(tail[:-1]), np.log(tail[1:])
    q, logc = np.polyfit(x, y, 1)
    return OrderEstimate(float(q), float(math.exp(logc)), int(tail.size), True)
