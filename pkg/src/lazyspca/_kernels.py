"""numba kernels behind the public matrix and linear-algebra functions.

Parallel kernels split work so that every output entry is accumulated by a
single thread in a fixed order, which keeps results bitwise independent of
the thread count.
"""

import os

import numba
import numpy as np
from numba import njit, prange

# the bundled TBB is too old for numba and only produces a warning; OpenMP
# and the workqueue layer both work
if "NUMBA_THREADING_LAYER" not in os.environ:
    numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]


@njit(parallel=True, cache=True)
def csr_times_dense(indptr, indices, data, B, out):
    """out += A @ B with A in CSR form; rows of `out` are owned by one thread."""
    m = out.shape[0]
    l = out.shape[1]
    for r in prange(m):
        for p in range(indptr[r], indptr[r + 1]):
            c = indices[p]
            v = data[p]
            for j in range(l):
                out[r, j] += v * B[c, j]


@njit(parallel=True, cache=True)
def dense_t_times_csc(col_ptr, row_idx, data, A, outT, block_rows):
    """outT += (A^T X)^T with X in CSC form.

    Row c of outT is column c of X against A, so it is owned by one thread.
    X is swept in slabs of `block_rows` rows, keeping the matching slab of A
    in cache; a per-column cursor walks each column's sorted row indices, so
    every entry still sums over the rows of X in ascending order.
    """
    n = outT.shape[0]
    l = outT.shape[1]
    m = A.shape[0]
    cursor = col_ptr[:-1].copy()
    for r0 in range(0, m, block_rows):
        r1 = min(m, r0 + block_rows)
        for c in prange(n):
            p = cursor[c]
            end = col_ptr[c + 1]
            while p < end and row_idx[p] < r1:
                v = data[p]
                r = row_idx[p]
                for j in range(l):
                    outT[c, j] += v * A[r, j]
                p += 1
            cursor[c] = p


@njit(cache=True)
def householder_panel(P, taus):
    """Unblocked Householder QR of a Fortran-ordered panel, in place.

    Reflector vectors are left below the diagonal with an implicit unit
    leading entry, R on and above it (LAPACK geqr2 layout).
    """
    m, w = P.shape
    for j in range(min(m, w)):
        alpha = P[j, j]
        s = 0.0
        for i in range(j + 1, m):
            s += P[i, j] * P[i, j]
        if s == 0.0:
            taus[j] = 0.0
            continue
        normx = np.sqrt(alpha * alpha + s)
        beta = -normx if alpha >= 0 else normx
        taus[j] = (beta - alpha) / beta
        scale = 1.0 / (alpha - beta)
        for i in range(j + 1, m):
            P[i, j] *= scale
        P[j, j] = beta
        tau = taus[j]
        for c in range(j + 1, w):
            d = P[j, c]
            for i in range(j + 1, m):
                d += P[i, j] * P[i, c]
            d *= tau
            P[j, c] -= d
            for i in range(j + 1, m):
                P[i, c] -= d * P[i, j]


@njit(cache=True)
def jacobi_rotate_block(S, ZT, n_first, same, tol, floor):
    """One cyclic pass of Jacobi rotations on a gathered symmetric block pair.

    With `same` the pass covers every pair inside S; otherwise only pairs
    with one index below `n_first` and one at or above it. The transposed
    rotation product is accumulated into the rows of ZT.
    """
    m = S.shape[0]
    nrot = 0
    p_end = m if same else n_first
    for p in range(p_end):
        q0 = p + 1 if same else n_first
        for q in range(q0, m):
            apq = S[p, q]
            app = S[p, p]
            aqq = S[q, q]
            if abs(apq) <= floor or abs(apq) <= tol * np.sqrt(abs(app * aqq)):
                continue
            theta = (aqq - app) / (2.0 * apq)
            t = 1.0 / (abs(theta) + np.sqrt(theta * theta + 1.0))
            if theta < 0.0:
                t = -t
            c = 1.0 / np.sqrt(t * t + 1.0)
            s = t * c
            for r in range(m):
                x = S[p, r]
                y = S[q, r]
                S[p, r] = c * x - s * y
                S[q, r] = s * x + c * y
            S[p, p] = app - t * apq
            S[q, q] = aqq + t * apq
            S[p, q] = 0.0
            S[q, p] = 0.0
            for r in range(m):
                if r != p and r != q:
                    S[r, p] = S[p, r]
                    S[r, q] = S[q, r]
            for r in range(m):
                x = ZT[p, r]
                y = ZT[q, r]
                ZT[p, r] = c * x - s * y
                ZT[q, r] = s * x + c * y
            nrot += 1
    return nrot


@njit(cache=True)
def jacobi_converged(a, tol, floor):
    n = a.shape[0]
    for i in range(n):
        for j in range(i + 1, n):
            x = abs(a[i, j])
            if x > floor and x > tol * np.sqrt(abs(a[i, i] * a[j, j])):
                return False
    return True


@njit(cache=True)
def gather_block_pair(a, i0, i1, j0, j1, S):
    """Copy the (I u J) x (I u J) sub-block of `a` into S, I = [i0,i1), J = [j0,j1)."""
    b1 = i1 - i0
    m = S.shape[0]
    for p in range(m):
        r = i0 + p if p < b1 else j0 + p - b1
        for q in range(m):
            S[p, q] = a[r, i0 + q if q < b1 else j0 + q - b1]


@njit(cache=True)
def scatter_block_pair(aug, rows, S, i0, i1, j0, j1, n):
    """Write rotated rows back into aug = [a | V^T] and mirror them into a's columns.

    `rows` holds the left-rotated rows of aug for I u J; their (I u J)
    columns are replaced by the two-sided result S first.
    """
    b1 = i1 - i0
    m = rows.shape[0]
    for p in range(m):
        for q in range(m):
            rows[p, i0 + q if q < b1 else j0 + q - b1] = S[p, q]
    for p in range(m):
        dst = i0 + p if p < b1 else j0 + p - b1
        for c in range(aug.shape[1]):
            aug[dst, c] = rows[p, c]
    for r0 in range(0, n, 16):
        for r in range(r0, min(r0 + 16, n)):
            for p in range(m):
                aug[r, i0 + p if p < b1 else j0 + p - b1] = rows[p, r]


@njit(cache=True)
def one_sided_jacobi(W, tol, max_sweeps, zero_norm2=0.0):
    """Hestenes one-sided Jacobi on the columns of Fortran-ordered W.

    On return the columns of W are mutually orthogonal and their norms are the
    singular values. Columns whose squared norm is at most `zero_norm2` count
    as zero and are not rotated. Returns the number of sweeps used, or -1 on
    failure.
    """
    m, n = W.shape
    for sweep in range(max_sweeps):
        rotated = False
        for p in range(n - 1):
            for q in range(p + 1, n):
                alpha = 0.0
                beta = 0.0
                gamma = 0.0
                for i in range(m):
                    alpha += W[i, p] * W[i, p]
                    beta += W[i, q] * W[i, q]
                    gamma += W[i, p] * W[i, q]
                if alpha <= zero_norm2 or beta <= zero_norm2:
                    continue
                if gamma == 0.0 or abs(gamma) <= tol * np.sqrt(alpha * beta):
                    continue
                rotated = True
                zeta = (beta - alpha) / (2.0 * gamma)
                t = 1.0 / (abs(zeta) + np.sqrt(1.0 + zeta * zeta))
                if zeta < 0.0:
                    t = -t
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = c * t
                for i in range(m):
                    x = W[i, p]
                    y = W[i, q]
                    W[i, p] = c * x - s * y
                    W[i, q] = s * x + c * y
        if not rotated:
            return sweep + 1
    return -1
