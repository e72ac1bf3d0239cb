import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qprune.quaternion import Quaternion, as_matrix, hamilton, norm

finite = st.floats(min_value=-1.0, max_value=1.0, allow_nan=False, allow_infinity=False)
quats = st.builds(Quaternion, finite, finite, finite, finite)


def test_identity_left_multiplication():
    one = Quaternion(1, 0, 0, 0)
    q = Quaternion(0.3, -1.2, 4.0, 2.5)
    assert hamilton(one, q) == q
    assert hamilton(q, one) == q


def test_unit_relations():
    i = Quaternion(0, 1, 0, 0)
    j = Quaternion(0, 0, 1, 0)
    k = Quaternion(0, 0, 0, 1)
    minus_one = Quaternion(-1, 0, 0, 0)
    assert hamilton(i, j) == k
    assert hamilton(j, i) == Quaternion(0, 0, 0, -1)
    assert hamilton(i, i) == minus_one
    assert hamilton(j, j) == minus_one
    assert hamilton(k, k) == minus_one
    # i j k = -1
    assert hamilton(hamilton(i, j), k) == minus_one


def test_noncommutativity_witness():
    i = Quaternion(0, 1, 0, 0)
    j = Quaternion(0, 0, 1, 0)
    assert hamilton(i, j) != hamilton(j, i)


def test_matrix_of_identity():
    np.testing.assert_array_equal(as_matrix(Quaternion(1, 0, 0, 0)), np.eye(4))


def test_matrix_pattern():
    r, x, y, z = 1.5, -2.0, 0.25, 3.0
    m = as_matrix(Quaternion(r, x, y, z))
    expected = np.array(
        [
            [r, -x, -y, -z],
            [x, r, -z, y],
            [y, z, r, -x],
            [z, -y, x, r],
        ]
    )
    np.testing.assert_array_equal(m, expected)


def test_matrix_columns_orthogonal():
    q = Quaternion(0.5, -1.0, 2.0, 0.75)
    m = as_matrix(q)
    np.testing.assert_allclose(m.T @ m, (norm(q) ** 2) * np.eye(4), atol=1e-12)


def test_matrix_vector_matches_componentwise_product():
    # dual route: the componentwise formula is the oracle for the matrix form
    rng = np.random.default_rng(7)
    for _ in range(1000):
        a = Quaternion(*rng.standard_normal(4))
        b = Quaternion(*rng.standard_normal(4))
        direct = hamilton(a, b).as_array()
        via_matrix = as_matrix(a) @ b.as_array()
        np.testing.assert_allclose(via_matrix, direct, atol=1e-6)


def test_rejects_non_finite_components():
    with pytest.raises(ValueError):
        Quaternion(float("nan"), 0, 0, 0)
    with pytest.raises(ValueError):
        Quaternion(0, float("inf"), 0, 0)


@settings(max_examples=300)
@given(quats, quats, quats)
def test_associativity(a, b, c):
    left = hamilton(hamilton(a, b), c).as_array()
    right = hamilton(a, hamilton(b, c)).as_array()
    np.testing.assert_allclose(left, right, atol=1e-5)


@settings(max_examples=300)
@given(quats, quats)
def test_norm_multiplicativity(a, b):
    product = norm(hamilton(a, b))
    expected = norm(a) * norm(b)
    assert product == pytest.approx(expected, rel=1e-5, abs=1e-12)


@settings(max_examples=300)
@given(quats, quats)
def test_matrix_representation_is_homomorphism(a, b):
    lhs = as_matrix(a) @ as_matrix(b)
    rhs = as_matrix(hamilton(a, b))
    np.testing.assert_allclose(lhs, rhs, atol=1e-5)


@given(quats)
def test_norm_is_euclidean(q):
    assert norm(q) == pytest.approx(math.sqrt(sum(v * v for v in (q.r, q.x, q.y, q.z))))
