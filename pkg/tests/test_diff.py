import numpy as np
import pytest

from mlgipm.diff import (ScalarField, check_curvature, check_gradient, constant, curvature,
                         directional_derivative, fd_gradient, gradient_row, linear_combination,
                         sensitivity)
from mlgipm.errors import FieldEvaluationError
from mlgipm.lie import GroupElement, GroupTuple, SLn, SOn, exp_at, hat, random_element, vee
from mlgipm.matfun import expm, logm
from mlgipm.problems import (EXACT, SQUARED, entry_constraint, log_distance_objective,
                             trace_constraint, trace_objective)


def one(G):
    return GroupTuple([G])


def chart_fd_gradient(f, X, h=1e-6):
    """Euclidean central differences of zeta -> f(X retract zeta)."""
    n = X.total_dim
    out = np.empty(n)
    for c in range(n):
        e = np.zeros(n)
        e[c] = h
        out[c] = (f(X.retract(e)) - f(X.retract(-e))) / (2 * h)
    return out


def chart_fd_hessian(f, X, h=1e-4):
    n = X.total_dim
    H = np.empty((n, n))
    I = np.eye(n) * h
    for a in range(n):
        for b in range(n):
            H[a, b] = (f(X.retract(I[a] + I[b])) - f(X.retract(I[a] - I[b]))
                       - f(X.retract(-I[a] + I[b])) + f(X.retract(-I[a] - I[b]))) / (4 * h * h)
    return H


def test_constant_field():
    X = GroupTuple([random_element(SOn(3), 0), random_element(SLn(2), 1)])
    f = ScalarField(lambda X: 3.5)
    assert np.array_equal(fd_gradient(f, X), np.zeros(X.total_dim))
    assert np.array_equal(curvature(f, X).values, np.zeros((6, 6)))
    assert np.array_equal(sensitivity([f, constant(0.0)], X), np.zeros((2, 6)))


def test_directional_derivative_examples():
    X = one(GroupElement.identity(SOn(2)))
    tr = ScalarField(lambda X: np.trace(X[0].mat))
    assert abs(directional_derivative(tr, X, 0, 0)) <= 1e-12
    entry = ScalarField(lambda X: X[0].mat[0, 1])
    assert abs(directional_derivative(entry, X, 0, 0) + 1.0) <= 1e-9


def test_log_gradient_is_twice_log_coordinates():
    # 1/2 ||log||_F^2 with ||hat(z)||_F^2 = 2 ||z||^2 on so(3)
    Gd = random_element(SOn(3), 3)
    f = log_distance_objective(Gd.mat, 1, SQUARED)
    z0 = np.array([1e-3, -2e-3, 0.5e-3])
    X = one(exp_at(Gd, z0))
    for h in (1e-4, 1e-5, 1e-6):
        assert np.allclose(fd_gradient(f, X, h), 2 * z0, rtol=0, atol=5e-6)
    assert check_gradient(f, X).passed
    # exactly: the gradient equals <log R, E_j>
    assert np.allclose(gradient_row(f, X), 2 * vee(SOn(3), logm(Gd.mat.T @ X[0].mat)), atol=1e-13)


def test_trace_objective_gradient_agrees(rng):
    Gd = random_element(SLn(3), 5).mat
    f = trace_objective(Gd, 2)
    for s in range(5):
        X = GroupTuple([random_element(SLn(3), 10 + s), random_element(SLn(3), 20 + s)])
        a = gradient_row(f, X)
        ref = chart_fd_gradient(f, X)
        assert np.max(np.abs(a - ref)) <= 1e-6 * np.max(np.abs(ref))


def test_sensitivity_examples():
    X = GroupTuple([random_element(SOn(3), 1), random_element(SOn(3), 2)])
    g = entry_constraint(0, 0, 0.5)
    J = sensitivity([g], X)
    assert np.array_equal(J[0], gradient_row(g, X))
    fd = fd_gradient(ScalarField(g.fn), X)
    assert np.allclose(J[0], fd, atol=1e-9)
    assert np.all(J[0, 3:] == 0)


def test_sensitivity_reports_row():
    X = one(random_element(SOn(3), 1))
    bad = ScalarField(lambda X: 1 / 0, name="bad")
    with pytest.raises(FieldEvaluationError) as info:
        sensitivity([constant(1.0), bad], X)
    assert info.value.location == ("row", 1)


def test_evaluation_error_has_location():
    X = one(random_element(SOn(3), 1))
    bad = ScalarField(lambda X: float("x"), name="bad")
    with pytest.raises(FieldEvaluationError) as info:
        directional_derivative(bad, X, 0, 2)
    assert info.value.location[:2] == (0, 2)


def test_gradient_linearity(rng):
    Gd = random_element(SOn(3), 2).mat
    f = log_distance_objective(Gd, 2, SQUARED)
    g = entry_constraint(1, 1, 0.3)
    X = GroupTuple([random_element(SOn(3), 3), random_element(SOn(3), 4)])
    a, b = rng.standard_normal(2)
    combo = linear_combination([(a, f), (b, g)])
    assert np.allclose(gradient_row(combo, X), a * gradient_row(f, X) + b * gradient_row(g, X),
                       atol=1e-10)
    fd_combo = ScalarField(combo.fn)
    assert np.allclose(gradient_row(fd_combo, X),
                       a * fd_gradient(f, X) + b * fd_gradient(g, X), atol=1e-8)


def test_chart_consistency():
    Gd = random_element(SLn(3), 9).mat
    f = ScalarField(trace_objective(Gd, 1).fn)
    X = one(random_element(SLn(3), 11))
    a = gradient_row(f, X)
    ref = chart_fd_gradient(f, X)
    assert np.max(np.abs(a - ref)) <= 1e-6 * np.max(np.abs(ref))


def test_curvature_matches_chart_hessian_sl2():
    Gd = random_element(SLn(2), 4).mat
    f = ScalarField(trace_objective(Gd, 1).fn)
    X = one(random_element(SLn(2), 6))
    H = curvature(f, X, symmetrize=True).values
    ref = chart_fd_hessian(f, X)
    assert np.max(np.abs(H - ref)) <= 1e-4 * np.max(np.abs(ref))


def chart_quadratic(X0, Q):
    kind = X0[0].kind
    inv = np.linalg.inv(X0[0].mat)

    def fn(X):
        z = vee(kind, logm(inv @ X[0].mat))
        return 0.5 * z @ Q @ z
    return ScalarField(fn, name="chart-quadratic")


@pytest.mark.parametrize("kind", [SOn(3), SLn(2), SLn(3)], ids=str)
def test_curvature_recovers_chart_quadratic(kind, rng):
    M = rng.standard_normal((kind.dim, kind.dim))
    Q = M @ M.T + np.eye(kind.dim)
    X0 = one(random_element(kind, 8))
    H = curvature(chart_quadratic(X0, Q), X0).values
    assert np.max(np.abs(H - Q)) <= 1e-5 * np.max(np.abs(Q))


def test_symmetrize_is_exact():
    Gd = random_element(SOn(3), 1).mat
    f = ScalarField(log_distance_objective(Gd, 1, SQUARED).fn)
    X = one(random_element(SOn(3), 2))
    H = curvature(f, X, symmetrize=True).values
    assert np.array_equal(H, H.T)
    # away from critical points the raw matrix is not symmetric
    raw = log_distance_objective(Gd, 1, SQUARED).hess(X)
    assert np.max(np.abs(raw - raw.T)) > 1e-3


def test_curvature_tiny_step_warns():
    X = one(random_element(SOn(3), 2))
    f = ScalarField(lambda X: X[0].mat[0, 0])
    assert curvature(f, X, h=1e-14).warnings


def test_check_gradient_pass_and_forced_failure():
    Gd = random_element(SLn(3), 3).mat
    f = trace_objective(Gd, 1)
    X = one(random_element(SLn(3), 4))
    assert check_gradient(f, X).passed
    doubled = ScalarField(f.fn, lambda X: 2 * f.grad(X), name="doubled")
    rep = check_gradient(doubled, X)
    assert not rep.passed
    assert abs(rep.discrepancy - 1.0) <= 1e-4


@pytest.mark.parametrize("variant", [SQUARED, EXACT])
def test_log_objective_hooks(variant):
    for s in range(10):
        Gd = random_element(SOn(3), 100 + s).mat
        f = log_distance_objective(Gd, 2, variant)
        X = GroupTuple([random_element(SOn(3), 200 + s), random_element(SOn(3), 300 + s)])
        assert check_gradient(f, X).passed
        assert check_curvature(f, X).passed


def test_log_objective_curvature_higher_dimension():
    Gd = random_element(SOn(5), 1).mat
    f = log_distance_objective(Gd, 1, SQUARED)
    X = one(random_element(SOn(5), 2))
    assert check_curvature(f, X).passed


def test_problem_field_hooks():
    for s in range(10):
        Gd = random_element(SLn(3), s).mat
        X = GroupTuple([random_element(SLn(3), 50 + s), random_element(SLn(3), 60 + s)])
        for f in (trace_objective(Gd, 2), trace_constraint(Gd, 0), trace_constraint(Gd, 1)):
            assert check_gradient(f, X).passed
            assert check_curvature(f, X).passed
        Y = GroupTuple([random_element(SOn(3), 50 + s), random_element(SOn(3), 60 + s)])
        for i in range(2):
            for row, bound in ((0, 0.5), (1, 0.3)):
                g = entry_constraint(i, row, bound)
                assert check_gradient(g, Y).passed
                assert check_curvature(g, Y).passed
