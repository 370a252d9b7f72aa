import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from gcngan import linalg
from gcngan.linalg import ShapeError

from helpers import loop_sum_sq

finite = st.floats(-1e3, 1e3, allow_nan=False)


def test_matmul_identity():
    m = np.array([[1.0, 2.0], [3.0, 4.0]])
    assert np.array_equal(linalg.matmul(np.eye(2), m), m)


def test_matmul_hand_case():
    out = linalg.matmul(np.array([[1.0, 2.0], [3.0, 4.0]]), np.array([[0.0], [1.0]]))
    assert np.array_equal(out, [[2.0], [4.0]])


def test_matmul_zero():
    m = np.array([[1.0, 2.0], [3.0, 4.0]])
    assert np.array_equal(linalg.matmul(np.zeros((3, 2)), m), np.zeros((3, 2)))


def test_matmul_shape_error():
    with pytest.raises(ShapeError):
        linalg.matmul(np.zeros((2, 3)), np.zeros((2, 3)))


def test_reshape_rowwise():
    m = np.array([[1.0, 2.0], [3.0, 4.0]])
    flat = linalg.reshape_rowwise(m, 1, 4)
    assert np.array_equal(flat, [[1, 2, 3, 4]])
    assert np.array_equal(linalg.reshape_rowwise(flat, 2, 2), m)
    assert np.array_equal(linalg.reshape_rowwise(m, 2, 2), m)
    with pytest.raises(ShapeError):
        linalg.reshape_rowwise(m, 3, 1)


def test_uniform_noise_deterministic_and_in_range():
    a = linalg.uniform_noise(linalg.make_rng(7), 5, 6)
    b = linalg.uniform_noise(linalg.make_rng(7), 5, 6)
    assert np.array_equal(a, b)
    assert a.shape == (5, 6)
    assert np.all((a >= 0) & (a < 1))


def test_uniform_noise_mean():
    draws = linalg.uniform_noise(linalg.make_rng(3), 1000, 1000)
    assert abs(draws.mean() - 0.5) < 0.01


def test_uniform_noise_rejects_empty():
    with pytest.raises(ShapeError):
        linalg.uniform_noise(linalg.make_rng(0), 0, 3)


def test_elementwise_hand_cases():
    a = np.array([[1.0, 2.0], [3.0, 4.0]])
    b = np.array([[5.0, 6.0], [7.0, 8.0]])
    assert np.array_equal(linalg.add(a, b), [[6, 8], [10, 12]])
    assert np.array_equal(linalg.sub(a, b), [[-4, -4], [-4, -4]])
    assert np.array_equal(linalg.hadamard(a, b), [[5, 12], [21, 32]])
    assert np.array_equal(linalg.scale(a, 2), [[2, 4], [6, 8]])
    assert np.array_equal(linalg.transpose(a), [[1, 3], [2, 4]])
    assert linalg.total(a) == 10.0
    assert linalg.frobenius_norm_sq(a) == 30.0
    with pytest.raises(ShapeError):
        linalg.add(a, np.zeros((2, 3)))


def test_as_matrix_checks():
    assert linalg.as_matrix([1, 2, 3]).shape == (1, 3)
    with pytest.raises(ShapeError):
        linalg.as_matrix([[1, 2]], rows=2)
    with pytest.raises(ShapeError):
        linalg.as_matrix(np.zeros((2, 2, 2)))


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, (3, 4), elements=finite), arrays(np.float64, (4, 2), elements=finite))
def test_transpose_of_product(a, b):
    lhs = linalg.transpose(linalg.matmul(a, b))
    rhs = linalg.matmul(linalg.transpose(b), linalg.transpose(a))
    np.testing.assert_allclose(lhs, rhs, rtol=1e-12, atol=1e-9)


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(1, 6), st.integers(1, 6)), elements=finite))
def test_reshape_round_trip_bit_exact(m):
    r, c = m.shape
    back = linalg.reshape_rowwise(linalg.reshape_rowwise(m, 1, r * c), r, c)
    assert back.tobytes() == m.tobytes()


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, (4, 5), elements=finite))
def test_frobenius_matches_loop(m):
    expected = loop_sum_sq(m.tolist())
    assert linalg.frobenius_norm_sq(m) == pytest.approx(expected, rel=1e-12, abs=1e-300)
