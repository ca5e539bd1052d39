"""Tests for the dense-matrix facade and both kernel backends."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from alttrain import backends, linalg
from alttrain.rng import Rng

ALL_BACKENDS = backends.available_backends()


def naive_matmul(a, b):
    """Spec-level oracle: triple loop, k-increasing accumulation."""
    m, kk = a.shape
    n = b.shape[1]
    out = np.zeros((m, n))
    for i in range(m):
        for j in range(n):
            acc = 0.0
            for k in range(kk):
                acc += a[i, k] * b[k, j]
            out[i, j] = acc
    return out


def random_matrix(rng, rows, cols, lo=-1.0, hi=1.0):
    return rng.uniform(lo, hi, rows * cols).reshape(rows, cols)


@pytest.mark.parametrize("name", ALL_BACKENDS)
def test_matmul_bitwise_equals_naive_oracle(name):
    mm, _ = backends.get_impl(name)
    rng = Rng(2024)
    for m, k, n in [(1, 1, 1), (4, 5, 3), (7, 2, 9), (16, 16, 16), (3, 31, 5)]:
        a = random_matrix(rng, m, k, -3.0, 3.0)
        b = random_matrix(rng, k, n, -3.0, 3.0)
        assert np.array_equal(mm(a, b), naive_matmul(a, b))


@pytest.mark.parametrize("name", ALL_BACKENDS)
def test_matmul_tn_bitwise_equals_naive_oracle(name):
    _, mtn = backends.get_impl(name)
    rng = Rng(99)
    for k, m, n in [(1, 1, 1), (6, 4, 3), (13, 2, 7)]:
        a = random_matrix(rng, k, m)
        b = random_matrix(rng, k, n)
        assert np.array_equal(mtn(a, b), naive_matmul(np.ascontiguousarray(a.T), b))


@pytest.mark.skipif(len(ALL_BACKENDS) < 2, reason="compiled backend not built")
def test_backends_agree_bitwise():
    rng = Rng(7)
    cm, ct = backends.get_impl("compiled")
    pm, pt = backends.get_impl("python")
    for m, k, n in [(5, 8, 6), (64, 64, 64), (1, 17, 1)]:
        a = random_matrix(rng, m, k, -10.0, 10.0)
        b = random_matrix(rng, k, n, -10.0, 10.0)
        assert np.array_equal(cm(a, b), pm(a, b))
        at = random_matrix(rng, k, m)
        assert np.array_equal(ct(at, b), pt(at, b))


def test_identity_product_is_exact():
    rng = Rng(1)
    m = random_matrix(rng, 3, 3, -5.0, 5.0)
    assert np.array_equal(linalg.matmul(np.eye(3), m), m)
    assert np.array_equal(linalg.matmul(m, np.eye(3)), m)


def test_one_by_one_product():
    assert linalg.matmul([[2.0]], [[3.0]])[0, 0] == 6.0


def test_shape_validation():
    with pytest.raises(ValueError):
        linalg.matmul(np.zeros((2, 3)), np.zeros((4, 2)))
    with pytest.raises(ValueError):
        linalg.matmul(np.zeros(3), np.zeros((3, 2)))
    with pytest.raises(ValueError):
        linalg.matmul_tn(np.zeros((2, 3)), np.zeros((3, 2)))
    with pytest.raises(ValueError):
        linalg.matmul_nt(np.zeros((2, 3)), np.zeros((2, 2)))


def test_transposed_variants_match_explicit_transpose():
    rng = Rng(5)
    a = random_matrix(rng, 6, 4)
    b = random_matrix(rng, 6, 5)
    assert np.array_equal(linalg.matmul_tn(a, b), linalg.matmul(np.ascontiguousarray(a.T), b))
    c = random_matrix(rng, 3, 4)
    d = random_matrix(rng, 7, 4)
    assert np.array_equal(linalg.matmul_nt(c, d), linalg.matmul(c, np.ascontiguousarray(d.T)))


@given(st.integers(0, 2**32), st.integers(1, 6), st.integers(1, 6), st.integers(1, 6), st.integers(1, 6))
@settings(max_examples=60, deadline=None)
def test_matmul_associativity_within_tolerance(seed, m, k, n, q):
    rng = Rng(seed)
    a = random_matrix(rng, m, k)
    b = random_matrix(rng, k, n)
    c = random_matrix(rng, n, q)
    left = linalg.matmul(linalg.matmul(a, b), c)
    right = linalg.matmul(a, linalg.matmul(b, c))
    assert np.max(np.abs(left - right)) <= 1e-9


def test_non_contiguous_input_is_accepted():
    rng = Rng(8)
    wide = random_matrix(rng, 4, 8)
    view = wide[:, ::2]
    assert np.array_equal(linalg.matmul(view, np.eye(4)), np.ascontiguousarray(view))


def test_uniform_facade_mean():
    vals = linalg.uniform(Rng(11), -2.0, 2.0, 100000)
    assert abs(float(np.mean(vals))) < 0.02
