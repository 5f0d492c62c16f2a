import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from coronet.errors import ShapeError
from coronet.tensor import elementwise_zip, matmul, tensor_from_values


def test_from_values_row_major():
    t = tensor_from_values([2, 2], [1, 2, 3, 4])
    assert t[1, 0] == 3
    assert t.dtype == np.float32


def test_from_values_empty():
    t = tensor_from_values([0], [])
    assert t.shape == (0,)


def test_rank0_holds_one_value():
    assert tensor_from_values([], [7.0]).shape == ()


def test_from_values_length_mismatch():
    with pytest.raises(ShapeError):
        tensor_from_values([2, 2], [1, 2, 3])


@given(st.lists(st.floats(-1e6, 1e6, width=32), min_size=0, max_size=30))
def test_readback_identity(values):
    t = tensor_from_values([len(values)], values)
    assert t.reshape(-1).tolist() == [float(np.float32(v)) for v in values]


def test_matmul_identity_and_hand_expansion():
    b = tensor_from_values([2, 2], [5, 6, 7, 8])
    assert np.array_equal(matmul(np.eye(2, dtype=np.float32), b), b)
    assert np.array_equal(matmul(b, np.eye(2, dtype=np.float32)), b)
    assert matmul(tensor_from_values([1, 2], [1, 2]), tensor_from_values([2, 1], [3, 4])).tolist() == [[11.0]]


def test_matmul_shape_error():
    with pytest.raises(ShapeError):
        matmul(np.zeros((2, 3)), np.zeros((2, 3)))


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 6), st.integers(1, 6), st.integers(1, 6), st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_matmul_associative(p, q, r, s, seed):
    rng = np.random.default_rng(seed)
    a, b, c = (rng.standard_normal(sh).astype(np.float32) for sh in ((p, q), (q, r), (r, s)))
    left = matmul(matmul(a, b), c).astype(np.float64)
    right = matmul(a, matmul(b, c)).astype(np.float64)
    scale = np.abs(a).astype(np.float64) @ np.abs(b) @ np.abs(c)
    assert np.all(np.abs(left - right) <= 1e-4 * np.maximum(scale, 1e-6))


def test_zip_identities():
    x = tensor_from_values([3], [1.5, -2, 0.25])
    assert np.array_equal(elementwise_zip(x, np.zeros_like(x), "add"), x)
    assert np.array_equal(elementwise_zip(x, np.ones_like(x), "mul"), x)
    assert elementwise_zip(tensor_from_values([2], [1, 2]), tensor_from_values([2], [3, 4]), "add").tolist() == [4, 6]


@given(st.lists(st.floats(-1e4, 1e4, width=32), min_size=1, max_size=20), st.integers(0, 1000))
def test_add_commutative(values, seed):
    a = np.asarray(values, dtype=np.float32)
    b = np.random.default_rng(seed).permutation(a)
    assert np.array_equal(elementwise_zip(a, b, "add"), elementwise_zip(b, a, "add"))


def test_zip_shape_mismatch():
    with pytest.raises(ShapeError):
        elementwise_zip(np.zeros(2), np.zeros(3), "add")
