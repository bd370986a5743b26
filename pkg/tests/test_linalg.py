import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from treelets.errors import DegenerateVarianceError, InsufficientDataError, InvalidDataError
from treelets.linalg import (
    correlation_from_covariance,
    jacobi_eigenvalues,
    jacobi_rotate,
    reference_eigh,
    sample_covariance,
)


def eig2_closed_form(a, d, b):
    """Eigenvalues of [[a, b], [b, d]] from the characteristic polynomial."""
    mid = 0.5 * (a + d)
    rad = math.hypot(0.5 * (a - d), b)
    return mid + rad, mid - rad


def random_psd(rng, p):
    A = rng.standard_normal((p, p + 2))
    return A @ A.T / (p + 2)


def test_sample_covariance_hand_example():
    # centered rows are (-1, -1) and (1, 1); cross-products sum to 2, divisor 1
    np.testing.assert_array_equal(sample_covariance([[1, 2], [3, 4]]), [[2, 2], [2, 2]])


def test_sample_covariance_constant_column_and_rows():
    rng = np.random.default_rng(0)
    X = rng.standard_normal((30, 4))
    X[:, 2] = 7.5
    S = sample_covariance(X)
    assert np.all(S[2] == 0) and np.all(S[:, 2] == 0)
    np.testing.assert_array_equal(sample_covariance(np.tile([1.0, -2.0, 3.0], (5, 1))), np.zeros((3, 3)))


def test_sample_covariance_errors():
    with pytest.raises(InsufficientDataError):
        sample_covariance([[1.0, 2.0]])
    with pytest.raises(InvalidDataError):
        sample_covariance([[1.0, np.nan], [2.0, 3.0]])


@settings(max_examples=50, deadline=None)
@given(
    arrays(np.float64, (12, 4), elements=st.floats(-100, 100)),
    st.integers(0, 3),
    st.floats(-1e3, 1e3),
)
def test_sample_covariance_shift_invariant(X, col, shift):
    Y = X.copy()
    Y[:, col] += shift
    np.testing.assert_allclose(sample_covariance(Y), sample_covariance(X), atol=1e-8, rtol=1e-8)


def test_correlation_examples():
    np.testing.assert_allclose(correlation_from_covariance([[4, 2], [2, 4]]), [[1, 0.5], [0.5, 1]])
    np.testing.assert_array_equal(correlation_from_covariance(np.eye(3)), np.eye(3))
    with pytest.raises(DegenerateVarianceError) as exc:
        correlation_from_covariance([[1, 0], [0, 1e-20]])
    assert exc.value.index == 1


def test_jacobi_rotate_examples():
    rot, S = jacobi_rotate([[1, 0.6], [0.6, 1]], 0, 1)
    assert rot.angle == pytest.approx(math.pi / 4)
    np.testing.assert_allclose(np.diag(S), eig2_closed_form(1, 1, 0.6), atol=1e-12)

    rot, S = jacobi_rotate([[2, 0], [0, 1]], 0, 1)
    assert (rot.c, rot.s) == (1.0, 0.0)
    np.testing.assert_array_equal(S, [[2, 0], [0, 1]])

    _, S = jacobi_rotate([[4, 1], [1, 1]], 0, 1)
    np.testing.assert_allclose(np.diag(S), [(5 + math.sqrt(13)) / 2, (5 - math.sqrt(13)) / 2], atol=1e-12)
    np.testing.assert_allclose(np.diag(S), [4.302776, 0.697224], atol=1e-6)


def test_jacobi_rotate_bad_indices():
    for i, j in [(1, 1), (1, 0), (0, 3), (-1, 1)]:
        with pytest.raises(IndexError):
            jacobi_rotate(np.eye(3), i, j)


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 20), st.integers(0, 2**32 - 1), st.data())
def test_jacobi_rotate_invariants(p, seed, data):
    rng = np.random.default_rng(seed)
    S = random_psd(rng, p)
    i = data.draw(st.integers(0, p - 2))
    j = data.draw(st.integers(i + 1, p - 1))
    rot, T = jacobi_rotate(S, i, j)

    assert rot.c**2 + rot.s**2 == pytest.approx(1.0, abs=1e-12)
    assert abs(rot.angle) <= math.pi / 4 + 1e-15
    assert abs(T[i, j]) <= 1e-12
    assert np.trace(T) == pytest.approx(np.trace(S), abs=1e-10)
    assert np.linalg.norm(T) == pytest.approx(np.linalg.norm(S), abs=1e-10)
    np.testing.assert_allclose(T, rot.matrix(p) @ S @ rot.matrix(p).T, atol=1e-12)
    others = [k for k in range(p) if k not in (i, j)]
    np.testing.assert_array_equal(T[np.ix_(others, others)], S[np.ix_(others, others)])

    second, T2 = jacobi_rotate(T, i, j)
    assert (second.c, second.s) == (1.0, 0.0)
    np.testing.assert_array_equal(T2, T)


@pytest.mark.parametrize("p", [2, 3, 7, 15])
def test_full_jacobi_sweep_matches_reference(p):
    S = random_psd(np.random.default_rng(p), p)
    np.testing.assert_allclose(jacobi_eigenvalues(S), reference_eigh(S)[0], atol=1e-8)


def test_reference_eigh_examples():
    w, V = reference_eigh(np.eye(4))
    np.testing.assert_allclose(w, 1.0)
    w, _ = reference_eigh([[1, 0.6], [0.6, 1]])
    np.testing.assert_allclose(w, [1.6, 0.4], atol=1e-12)
    v = np.array([1.0, 1.0]) / math.sqrt(2)
    w, _ = reference_eigh(np.outer(v, v))
    np.testing.assert_allclose(w, [1.0, 0.0], atol=1e-12)


def test_reference_eigh_contract():
    S = random_psd(np.random.default_rng(3), 9)
    w, V = reference_eigh(S)
    assert np.all(np.diff(w) <= 0)
    np.testing.assert_allclose(V.T @ V, np.eye(9), atol=1e-10)
    assert np.max(np.abs(V @ np.diag(w) @ V.T - S)) <= 1e-8 * np.max(np.abs(S))
