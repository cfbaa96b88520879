import math

import numpy as np
import pytest
import scipy.linalg

from mlgipm.errors import DimensionError, DomainError, NumericalError, SingularityError
from mlgipm.matfun import MatfunOptions, expm, logm, solve_dense, sqrtm_db

from conftest import ball_matrix


def taylor_expm(A, terms=80):
    # independent oracle; fine for ||A|| <= 1
    out = np.eye(A.shape[0])
    term = np.eye(A.shape[0])
    for k in range(1, terms):
        term = term @ A / k
        out = out + term
    return out


def test_expm_closed_forms():
    assert np.array_equal(expm(np.zeros((3, 3))), np.eye(3))
    R = expm(np.array([[0.0, -math.pi / 2], [math.pi / 2, 0.0]]))
    assert np.allclose(R, [[0, -1], [1, 0]], atol=1e-15)
    a = 0.7
    assert np.allclose(expm(np.diag([a, -a])), np.diag([math.exp(a), math.exp(-a)]), rtol=1e-15)


@pytest.mark.parametrize("radius", [0.01, 0.5, 1.0, 3.0, 10.0])
def test_expm_matches_scipy(rng, radius):
    for n in (2, 3, 5, 7):
        A = ball_matrix(rng, n, radius)
        ref = scipy.linalg.expm(A)
        assert np.linalg.norm(expm(A) - ref) <= 1e-12 * np.linalg.norm(ref)


def test_expm_properties(rng):
    for _ in range(30):
        A = ball_matrix(rng, 4, 5.0)
        assert np.linalg.norm(expm(A) @ expm(-A) - np.eye(4)) <= 1e-10
        assert np.allclose(expm(A.T), expm(A).T, atol=1e-12, rtol=0)
        B = ball_matrix(rng, 4, 3.0)
        assert abs(np.linalg.det(expm(B)) / math.exp(np.trace(B)) - 1) <= 1e-8


def test_expm_rejects_bad_input():
    with pytest.raises(DimensionError):
        expm(np.zeros((2, 3)))
    with pytest.raises(DomainError):
        expm(np.array([[np.nan, 0], [0, 1]]))


def test_logm_closed_forms():
    assert np.array_equal(logm(np.eye(3)), np.zeros((3, 3)))
    L = logm(np.array([[0.0, -1.0], [1.0, 0.0]]))
    assert np.allclose(L, [[0, -math.pi / 2], [math.pi / 2, 0]], atol=1e-12)


def test_logm_roundtrip_taylor_oracle(rng):
    for _ in range(20):
        n = int(rng.integers(2, 6))
        A = ball_matrix(rng, n, 1.0)
        assert np.linalg.norm(logm(taylor_expm(A)) - A) <= 1e-8


def test_logm_matches_scipy_on_rotations(rng):
    from mlgipm.lie import SOn, random_element
    for s in range(20):
        R = random_element(SOn(4), s).mat
        assert np.allclose(logm(R), scipy.linalg.logm(R).real, atol=1e-9)


def test_logm_branch_cut():
    with pytest.raises(DomainError):
        logm(np.diag([-1.0, 2.0]))
    with pytest.raises(DomainError):
        logm(np.array([[-1.0, 0.0], [0.0, -1.0]]))  # rotation by pi
    with pytest.raises(DomainError):
        logm(np.zeros((2, 2)))


def test_sqrtm_db(rng):
    A = ball_matrix(rng, 4, 0.5) + np.eye(4)
    X = sqrtm_db(A)
    assert np.linalg.norm(X @ X - A) <= 1e-12 * np.linalg.norm(A)


def test_sqrtm_failure_reports_iterations():
    opts = MatfunOptions(sqrt_max_iter=1)
    with pytest.raises(NumericalError) as info:
        sqrtm_db(np.diag([1e6, 1e-6]), opts)
    assert "iterations" in info.value.diagnostics


def test_solve_dense_examples(rng):
    b = rng.standard_normal(4)
    r = solve_dense(np.eye(4), b)
    assert np.array_equal(r.x, b) and not r.regularized
    r = solve_dense(np.array([[2.0, 0.0], [0.0, 4.0]]), np.array([2.0, 8.0]))
    assert np.allclose(r.x, [1.0, 2.0], rtol=0, atol=1e-15)


def test_solve_dense_residual(rng):
    for _ in range(20):
        A = rng.standard_normal((6, 6)) + 6 * np.eye(6)
        b = rng.standard_normal(6)
        r = solve_dense(A, b)
        assert np.linalg.norm(A @ r.x - b) <= 1e-10 * np.linalg.norm(b)
        assert 1 <= r.cond < 1e3


def test_solve_dense_regularizes_singular():
    A = np.array([[1.0, 1.0], [1.0, 1.0]])
    r = solve_dense(A, np.array([1.0, 1.0]))
    assert r.regularized and r.shift > 0
    assert np.all(np.isfinite(r.x))


def test_solve_dense_errors():
    with pytest.raises(DimensionError):
        solve_dense(np.eye(3), np.ones(2))
    with pytest.raises(DimensionError):
        solve_dense(np.ones((2, 3)), np.ones(2))
    with pytest.raises(SingularityError):
        solve_dense(np.zeros((3, 3)), np.ones(3))
