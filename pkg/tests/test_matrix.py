import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from lazyspca.errors import DimensionError
from lazyspca.matrix import SparseMatrix, frobenius_norm, gemm_t, spmm, split_rows, vstack


def _random_sparse(rng, m, n, fill):
    return rng.standard_normal((m, n)) * (rng.random((m, n)) < fill)


shapes = st.tuples(st.integers(1, 25), st.integers(1, 25), st.integers(1, 9), st.floats(0.0, 1.0), st.integers(0, 2**31))


@settings(max_examples=60, deadline=None)
@given(shapes)
def test_spmm_matches_naive_product(args):
    m, n, l, fill, seed = args
    rng = np.random.default_rng(seed)
    dense = _random_sparse(rng, m, n, fill)
    B = rng.standard_normal((n, l))
    got = spmm(SparseMatrix.from_dense(dense), B)
    np.testing.assert_allclose(got, oracles.naive_matmul(dense, B), rtol=1e-12, atol=1e-12)


@settings(max_examples=60, deadline=None)
@given(shapes)
def test_gemm_t_matches_naive_product(args):
    m, n, l, fill, seed = args
    rng = np.random.default_rng(seed)
    dense = _random_sparse(rng, m, n, fill)
    A = rng.standard_normal((m, l))
    got = gemm_t(A, SparseMatrix.from_dense(dense))
    np.testing.assert_allclose(got, oracles.naive_matmul(A.T, dense), rtol=1e-12, atol=1e-12)


def test_from_scipy_canonicalises():
    coo = sp.coo_array((np.array([1.0, 2.0, 0.0, -1.0]), (np.array([0, 0, 1, 2]), np.array([1, 1, 0, 2]))), shape=(3, 3))
    X = SparseMatrix.from_scipy(coo)
    assert X.nnz == 2
    np.testing.assert_array_equal(X.to_dense(), [[0, 3, 0], [0, 0, 0], [0, 0, -1]])
    assert not X.values.flags.writeable


def test_from_coo_rejects_out_of_range():
    with pytest.raises(DimensionError):
        SparseMatrix.from_coo([0, 3], [0, 0], [1.0, 1.0], (3, 2))


def test_invalid_structure_rejected():
    with pytest.raises(ValueError):
        SparseMatrix(2, 2, np.array([0, 1, 3]), np.array([0, 1]), np.array([1.0, 2.0]))
    with pytest.raises(ValueError):
        SparseMatrix(2, 1, np.array([0, 1]), np.array([0]), np.array([np.nan]))


def test_dimension_mismatch():
    X = SparseMatrix.from_dense(np.ones((3, 4)))
    with pytest.raises(DimensionError):
        spmm(X, np.ones((3, 2)))
    with pytest.raises(DimensionError):
        gemm_t(np.ones((4, 2)), X)


def test_row_slices_and_vstack_round_trip():
    rng = np.random.default_rng(3)
    dense = _random_sparse(rng, 23, 7, 0.4)
    X = SparseMatrix.from_dense(dense)
    blocks = list(split_rows(X, 5))
    assert [b.slice_index for b in blocks] == list(range(5))
    assert [b.block.rows for b in blocks] == [5, 5, 5, 5, 3]
    np.testing.assert_array_equal(vstack(blocks).to_dense(), dense)
    np.testing.assert_array_equal(X.row_slice(5, 10).to_dense(), dense[5:10])
    np.testing.assert_array_equal(X.column(2), dense[:, 2])
    with pytest.raises(ValueError):
        list(split_rows(X, 0))


def test_frobenius_norm():
    dense = np.arange(12.0).reshape(3, 4) - 5
    assert frobenius_norm(SparseMatrix.from_dense(dense)) == pytest.approx(np.linalg.norm(dense), rel=1e-15)
    assert frobenius_norm(dense) == pytest.approx(np.linalg.norm(dense), rel=1e-15)


def test_empty_matrix_products():
    X = SparseMatrix.from_dense(np.zeros((4, 3)))
    assert X.nnz == 0
    np.testing.assert_array_equal(spmm(X, np.ones((3, 2))), np.zeros((4, 2)))
    np.testing.assert_array_equal(gemm_t(np.ones((4, 2)), X), np.zeros((2, 3)))
