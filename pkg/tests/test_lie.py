import math

import numpy as np
import pytest

from mlgipm.errors import DimensionError, DomainError
from mlgipm.lie import (GroupElement, GroupKind, GroupTuple, SLn, SOn, Td, exp_at, generators,
                        hat, membership_residual, random_element, translation,
                        translation_vector, vee)

KINDS = [SOn(2), SOn(3), SOn(5), SLn(2), SLn(3), SLn(4), Td(3)]


def test_dimensions():
    assert [k.dim for k in (SOn(3), SOn(7), SLn(3), SLn(7), Td(5))] == [3, 21, 8, 48, 5]
    assert len(generators(SOn(4))) == 6


def test_kind_strings():
    for text, kind in [("SO3", SOn(3)), ("SL7", SLn(7)), ("T5", Td(5))]:
        assert str(kind) == text
        assert GroupKind.parse(text) == kind
    with pytest.raises(ValueError):
        GroupKind.parse("SE3")
    with pytest.raises(ValueError):
        SOn(1)


def test_generator_conventions():
    (E,) = generators(SOn(2))
    assert np.array_equal(E, [[0, -1], [1, 0]])
    E12, E21, D = generators(SLn(2))
    assert np.array_equal(E12, [[0, 1], [0, 0]])
    assert np.array_equal(E21, [[0, 0], [1, 0]])
    assert np.array_equal(D, [[1, 0], [0, -1]])


def test_generators_lie_in_algebra():
    for E in generators(SOn(4)):
        assert np.array_equal(E, -E.T)
    for E in generators(SLn(4)):
        assert np.trace(E) == 0


def test_hat_examples():
    assert np.array_equal(hat(SOn(3), np.zeros(3)), np.zeros((3, 3)))
    assert np.array_equal(hat(SOn(2), [0.3]), [[0, -0.3], [0.3, 0]])
    with pytest.raises(DimensionError):
        hat(SOn(3), [1.0, 2.0])


@pytest.mark.parametrize("kind", KINDS, ids=str)
def test_hat_vee_roundtrip(kind, rng):
    for _ in range(10):
        z = rng.standard_normal(kind.dim)
        assert np.max(np.abs(vee(kind, hat(kind, z)) - z)) <= 1e-14
        a, b = rng.standard_normal(2)
        w = rng.standard_normal(kind.dim)
        assert np.allclose(hat(kind, a * z + b * w), a * hat(kind, z) + b * hat(kind, w),
                           atol=1e-14, rtol=0)
        X = hat(kind, z)
        assert np.allclose(hat(kind, vee(kind, X)), X, atol=1e-12, rtol=0)


def test_vee_examples():
    assert np.allclose(vee(SOn(2), [[0, -1], [1, 0]]), [1.0])
    assert np.allclose(vee(SLn(2), np.diag([1.0, -1.0])), [0, 0, 1])


def test_vee_rejects_outside_algebra():
    with pytest.raises(DomainError, match="residual"):
        vee(SOn(3), np.eye(3))
    with pytest.raises(DomainError):
        vee(SLn(2), np.diag([1.0, 1.0]))
    with pytest.raises(DimensionError):
        vee(SOn(3), np.zeros((2, 2)))


def test_exp_at_examples():
    G = random_element(SOn(3), 1)
    assert np.array_equal(exp_at(G, np.zeros(3)).mat, G.mat)
    R = exp_at(GroupElement.identity(SOn(2)), [math.pi / 2])
    assert np.allclose(R.mat, [[0, -1], [1, 0]], atol=1e-15)


@pytest.mark.parametrize("kind", KINDS, ids=str)
def test_exp_at_inverse(kind, rng):
    for s in range(10):
        G = random_element(kind, s)
        z = rng.standard_normal(kind.dim)
        z *= rng.uniform(0, 1) / np.linalg.norm(z)
        back = exp_at(exp_at(G, z), -z)
        assert np.max(np.abs(back.mat - G.mat)) <= 1e-10


def test_drift_after_many_steps(rng):
    G = GroupElement.identity(SOn(3))
    H = GroupElement.identity(SLn(3))
    for _ in range(10_000):
        G = exp_at(G, 0.1 * rng.standard_normal(3))
        H = exp_at(H, 0.01 * rng.standard_normal(8))
        assert membership_residual(G) <= 1e-9
    assert membership_residual(H) <= 1e-8


def test_translation_closed_form():
    Z = translation([1.0, 2.0])
    assert np.array_equal(Z.mat, [[1, 0, 1], [0, 1, 2], [0, 0, 1]])
    Z2 = exp_at(Z, [0.5, -1.0])
    assert np.array_equal(translation_vector(Z2), [1.5, 1.0])
    assert membership_residual(Z2) == 0.0


def test_random_element_determinants():
    for s in range(100):
        assert abs(np.linalg.det(random_element(SOn(5), s).mat) - 1) <= 1e-10
        assert membership_residual(random_element(SOn(5), s)) <= 1e-9
    for s in range(20):
        assert abs(np.linalg.det(random_element(SLn(4), s).mat) - 1) <= 1e-8


def test_random_element_deterministic():
    for kind in KINDS:
        assert np.array_equal(random_element(kind, 7).mat, random_element(kind, 7).mat)


def test_membership_residual_examples():
    assert membership_residual(GroupElement.identity(SOn(3))) == 0.0
    bad = GroupElement(SOn(3), 2 * np.eye(3))
    assert math.isclose(membership_residual(bad), 3 * math.sqrt(3) + 7, rel_tol=1e-14)


def test_element_is_immutable():
    G = random_element(SOn(3), 0)
    with pytest.raises(ValueError):
        G.mat[0, 0] = 1.0
    with pytest.raises(DimensionError):
        GroupElement(SOn(3), np.eye(2))


def test_group_tuple(rng):
    X = GroupTuple([random_element(SOn(3), 0), random_element(SLn(2), 1)])
    assert X.total_dim == 6 and list(X.offsets()) == [0, 3, 6]
    z = rng.standard_normal(6)
    Y = X.retract(z)
    assert np.allclose(Y[0].mat, exp_at(X[0], z[:3]).mat)
    assert np.allclose(Y[1].mat, exp_at(X[1], z[3:]).mat)
    with pytest.raises(DimensionError):
        X.retract(np.zeros(5))
