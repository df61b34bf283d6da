"""Sparse CSC matrices, row slicing and the two multiply kernels.

Dense matrices are plain float64 numpy arrays. Sketches (m x l) are kept
row-major because the sparse kernels walk them a row at a time.
"""

from dataclasses import dataclass, field
from typing import Iterator

import numpy as np
import scipy.sparse as sp

from . import _kernels
from .errors import DimensionError

# rows of A kept hot per sweep of gemm_t; a few MiB suits common L2/L3 sizes
GEMM_T_SLAB_BYTES = 8 << 20


def _frozen(a, dtype):
    a = np.ascontiguousarray(a, dtype=dtype)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class SparseMatrix:
    """Canonical compressed-sparse-column matrix.

    Construct through the ``from_*`` helpers, which sum duplicates, sort row
    indices and drop explicit zeros. Arrays are read-only after construction.
    """

    rows: int
    cols: int
    col_ptr: np.ndarray
    row_idx: np.ndarray
    values: np.ndarray
    _csr: list = field(default_factory=list, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "col_ptr", _frozen(self.col_ptr, np.int64))
        object.__setattr__(self, "row_idx", _frozen(self.row_idx, np.int64))
        object.__setattr__(self, "values", _frozen(self.values, np.float64))
        if self.rows < 0 or self.cols < 0:
            raise DimensionError(f"negative shape {(self.rows, self.cols)}")
        if len(self.col_ptr) != self.cols + 1:
            raise ValueError("col_ptr must have cols + 1 entries")
        if self.col_ptr[0] != 0 or self.col_ptr[-1] != len(self.values):
            raise ValueError("col_ptr must start at 0 and end at nnz")
        if np.any(np.diff(self.col_ptr) < 0):
            raise ValueError("col_ptr must be non-decreasing")
        if len(self.row_idx) != len(self.values):
            raise ValueError("row_idx and values differ in length")
        if len(self.row_idx) and (self.row_idx.min() < 0 or self.row_idx.max() >= self.rows):
            raise ValueError("row index out of range")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("non-finite stored value")

    @property
    def shape(self):
        return (self.rows, self.cols)

    @property
    def nnz(self):
        return len(self.values)

    @classmethod
    def from_scipy(cls, A):
        A = sp.csc_array(A, dtype=np.float64, copy=True)
        A.sum_duplicates()
        A.eliminate_zeros()
        A.sort_indices()
        return cls(A.shape[0], A.shape[1], A.indptr, A.indices, A.data)

    @classmethod
    def from_coo(cls, row, col, val, shape):
        row = np.asarray(row, dtype=np.int64)
        col = np.asarray(col, dtype=np.int64)
        if len(row) and (row.min() < 0 or row.max() >= shape[0] or col.min() < 0 or col.max() >= shape[1]):
            raise DimensionError(f"entry index outside shape {tuple(shape)}")
        return cls.from_scipy(sp.coo_array((np.asarray(val, dtype=np.float64), (row, col)), shape=shape))

    @classmethod
    def from_dense(cls, A):
        return cls.from_scipy(sp.csc_array(np.asarray(A, dtype=np.float64)))

    def to_scipy(self):
        return sp.csc_array((self.values, self.row_idx, self.col_ptr), shape=self.shape)

    def csr(self):
        """Row-compressed copy used by the multiply kernels, built once."""
        if not self._csr:
            C = self.to_scipy().tocsr()
            C.indptr = C.indptr.astype(np.int64)
            C.indices = C.indices.astype(np.int64)
            self._csr.append(C)
        return self._csr[0]

    def to_dense(self):
        return self.to_scipy().toarray()

    def row_slice(self, start, stop):
        return SparseMatrix.from_scipy(self.csr()[start:stop])

    def column(self, j):
        out = np.zeros(self.rows)
        lo, hi = self.col_ptr[j], self.col_ptr[j + 1]
        out[self.row_idx[lo:hi]] = self.values[lo:hi]
        return out


@dataclass(frozen=True)
class RowBlock:
    slice_index: int
    block: SparseMatrix


def _as_sparse(X):
    if isinstance(X, SparseMatrix):
        return X
    if sp.issparse(X):
        return SparseMatrix.from_scipy(X)
    return SparseMatrix.from_dense(X)


def spmm(A, B):
    """Dense product A @ B for sparse A (m x n) and dense B (n x l)."""
    A = _as_sparse(A)
    B = np.asarray(B, dtype=np.float64)
    if B.ndim != 2 or A.cols != B.shape[0]:
        raise DimensionError(f"spmm: cannot multiply {A.shape} by {B.shape}")
    B = np.ascontiguousarray(B)
    out = np.zeros((A.rows, B.shape[1]))
    if A.nnz and B.shape[1]:
        C = A.csr()
        _kernels.csr_times_dense(C.indptr, C.indices, C.data, B, out)
    return out


def gemm_t(A, B):
    """A^T @ B for dense A (m x l) and sparse B (m x n), returned as l x n.

    Neither A^T nor a dense copy of B is formed; the result is the transpose
    view of an n x l row-major buffer.
    """
    B = _as_sparse(B)
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != B.rows:
        raise DimensionError(f"gemm_t: cannot multiply {A.shape[::-1]} by {B.shape}")
    A = np.ascontiguousarray(A)
    l = A.shape[1]
    outT = np.zeros((B.cols, l))
    if B.nnz and l:
        block_rows = max(1, GEMM_T_SLAB_BYTES // (8 * l))
        _kernels.dense_t_times_csc(B.col_ptr, B.row_idx, B.values, A, outT, block_rows)
    return outT.T


def frobenius_norm(A):
    if isinstance(A, SparseMatrix):
        return float(np.sqrt(np.dot(A.values, A.values)))
    return float(np.linalg.norm(np.asarray(A, dtype=np.float64).ravel()))


def split_rows(X, block_rows) -> Iterator[RowBlock]:
    """Yield consecutive horizontal slices of X, one at a time."""
    if block_rows < 1:
        raise ValueError("block_rows must be at least 1")
    X = _as_sparse(X)
    for s, start in enumerate(range(0, X.rows, block_rows)):
        yield RowBlock(s, X.row_slice(start, min(X.rows, start + block_rows)))


def vstack(blocks):
    return SparseMatrix.from_scipy(sp.vstack([b.block.to_scipy() for b in blocks], format="csc"))
