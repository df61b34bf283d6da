"""Dense factorizations for tall-skinny and small square matrices."""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.linalg.blas import dgemm

from . import _kernels
from .errors import ConvergenceError, DimensionError, RankDeficiencyError
from .matrix import SparseMatrix, gemm_t

QR_RANK_TOL = 1e-12
GRAM_RANK_TOL = 1e-12
JACOBI_REL_TOL = 1e-15
JACOBI_ABS_FLOOR = 1e-18
JACOBI_MAX_SWEEPS = 50
POWER_TOL = 1e-8
POWER_MAX_ITER = 10_000

# blocked QR shape: outer panels of width _NB are factored by recursive
# halving down to _LEAF columns; updates touch at most _CHUNK columns at once
_NB = 128
_LEAF = 16
_CHUNK = 256
_JACOBI_BLOCK = 48


@dataclass(frozen=True)
class QRFactors:
    q: np.ndarray
    r: np.ndarray


@dataclass(frozen=True)
class EigenDecomposition:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    sweeps: int = 0


@dataclass(frozen=True)
class TruncatedSVDResult:
    u_tilde: np.ndarray
    d: np.ndarray
    v: np.ndarray


# Householder QR ---------------------------------------------------------


def _unit_lower(block):
    t = np.tril(block, -1)
    np.fill_diagonal(t, 1.0)
    return t


def _larft(Vtop, Vbot, taus):
    """T such that H_1 ... H_w = I - V T V^T (forward, columnwise)."""
    w = len(taus)
    G = Vtop.T @ Vtop + Vbot.T @ Vbot
    T = np.zeros((w, w))
    for i in range(w):
        T[i, i] = taus[i]
        if i:
            T[:i, i] = -taus[i] * (T[:i, :i] @ G[:i, i])
    return T


def _apply_block_t(W, c0, w, T, col0, col1):
    """W[c0:, col0:col1] <- (I - V T V^T)^T W[c0:, col0:col1]."""
    Vtop = _unit_lower(W[c0:c0 + w, c0:c0 + w])
    Vbot = W[c0 + w:, c0:c0 + w]
    for a in range(col0, col1, _CHUNK):
        b = min(col1, a + _CHUNK)
        Ct = W[c0:c0 + w, a:b]
        Cb = W[c0 + w:, a:b]
        Y = T.T @ (Vtop.T @ Ct + Vbot.T @ Cb)
        Ct -= Vtop @ Y
        Cb -= Vbot @ Y


def _factor_recursive(W, c0, c1, taus):
    w = c1 - c0
    if w <= _LEAF:
        P = np.asfortranarray(W[c0:, c0:c1])
        _kernels.householder_panel(P, taus[c0:c1])
        W[c0:, c0:c1] = P
        return _larft(_unit_lower(P[:w]), P[w:], taus[c0:c1])
    h = c0 + w // 2
    T1 = _factor_recursive(W, c0, h, taus)
    _apply_block_t(W, c0, h - c0, T1, h, c1)
    T2 = _factor_recursive(W, h, c1, taus)
    w1 = h - c0
    V2top = _unit_lower(W[h:c1, h:c1])
    M = W[h:c1, c0:h].T @ V2top + W[c1:, c0:h].T @ W[c1:, h:c1]
    T = np.zeros((w, w))
    T[:w1, :w1] = T1
    T[w1:, w1:] = T2
    T[:w1, w1:] = -T1 @ M @ T2
    return T


def _factor_in_place(W):
    """Blocked Householder factorization of row-major W (m >= l), in place."""
    l = W.shape[1]
    taus = np.zeros(l)
    panels = []
    for j0 in range(0, l, _NB):
        j1 = min(l, j0 + _NB)
        T = _factor_recursive(W, j0, j1, taus)
        panels.append((j0, j1, T))
        if j1 < l:
            _apply_block_t(W, j0, j1 - j0, T, j1, l)
    return panels


def _form_q(W, panels, m, l):
    Q = np.zeros((m, l))
    Q[np.arange(l), np.arange(l)] = 1.0
    for j0, j1, T in reversed(panels):
        Vtop = _unit_lower(W[j0:j1, j0:j1])
        Vbot = W[j1:, j0:j1]
        for a in range(j0, l, _CHUNK):
            b = min(l, a + _CHUNK)
            Ct = Q[j0:j1, a:b]
            Cb = Q[j1:, a:b]
            Y = T @ (Vtop.T @ Ct + Vbot.T @ Cb)
            Ct -= Vtop @ Y
            Cb -= Vbot @ Y
    return Q


def _check_r(r, norm_a):
    diag = np.abs(np.diag(r))
    bad = np.flatnonzero(diag <= QR_RANK_TOL * norm_a)
    if len(bad):
        j = int(bad[0])
        raise RankDeficiencyError(
            f"matrix is numerically rank deficient at column {j} "
            f"(|R[{j},{j}]| = {diag[j]:.3e}, ||A||_F = {norm_a:.3e})",
            column=j,
        )


def householder_qr(A, overwrite=False, check_rank=True):
    """Thin QR with R's diagonal made non-negative.

    With ``overwrite`` a row-major float64 input is used as workspace.
    """
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2:
        raise DimensionError("householder_qr expects a 2-d array")
    m, l = A.shape
    if m < l:
        raise DimensionError(f"householder_qr needs rows >= cols, got {A.shape}")
    norm_a = float(np.linalg.norm(A))
    if overwrite and A.flags.c_contiguous and A.flags.writeable:
        W = A
    else:
        W = np.array(A, order="C")
    panels = _factor_in_place(W)
    R = np.triu(W[:l, :l])
    if check_rank:
        _check_r(R, norm_a)
    Q = _form_q(W, panels, m, l)
    del W
    signs = np.where(np.diag(R) < 0, -1.0, 1.0)
    Q *= signs
    R *= signs[:, None]
    return QRFactors(Q, R)


def qr_r(A):
    """Upper-trapezoidal R (min(p, l) x l) of a p x l matrix, Q not formed.

    Accepts wide input, as occurs when a streaming block has fewer rows than
    the sketch has columns.
    """
    A = np.asarray(A, dtype=np.float64)
    p, l = A.shape
    if p >= l and l > _LEAF:
        W = np.array(A, order="C")
        _factor_in_place(W)
        R = np.triu(W[:l, :l])
    else:
        P = np.asfortranarray(A.copy())
        _kernels.householder_panel(P, np.zeros(min(p, l)))
        R = np.triu(P[:min(p, l), :])
    signs = np.where(np.diag(R) < 0, -1.0, 1.0)
    return R * signs[:, None]


# Jacobi eigensolver -----------------------------------------------------


def jacobi_eigh(A, block=_JACOBI_BLOCK):
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi sweeps.

    Pairs are visited block by block: the rotations for one pair of index
    blocks are accumulated in a small orthogonal matrix, which is then applied
    to the rest of the matrix and to the eigenvector basis with matrix
    products. Any sweep still visits every off-diagonal pair exactly once.
    """
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionError(f"jacobi_eigh expects a square matrix, got {A.shape}")
    n = A.shape[0]
    norm_a = float(np.linalg.norm(A))
    if np.linalg.norm(A - A.T) > 1e-10 * norm_a:
        raise ValueError("jacobi_eigh: input is not symmetric")
    if n == 0:
        return EigenDecomposition(np.zeros(0), np.zeros((0, 0)))
    # a and the transposed eigenvector basis share rows, so one product per
    # block pair rotates both
    aug = np.empty((n, 2 * n))
    aug[:, :n] = (A + A.T) / 2.0
    aug[:, n:] = np.eye(n)
    a = aug[:, :n]
    # entries below floor are treated as zero; the relative test alone could
    # chase rounding noise next to exactly singular diagonal entries
    floor = JACOBI_ABS_FLOOR * norm_a
    edges = list(range(0, n, block)) + [n]
    blocks = list(zip(edges[:-1], edges[1:]))
    rows_t = np.empty((2 * n, 2 * block), order="F")
    S_buf = np.empty((2 * block, 2 * block))
    sweeps = 0
    while not _kernels.jacobi_converged(a, JACOBI_REL_TOL, floor):
        if sweeps == JACOBI_MAX_SWEEPS:
            off = np.abs(a - np.diag(np.diag(a))).max()
            raise ConvergenceError(
                f"Jacobi did not converge in {JACOBI_MAX_SWEEPS} sweeps (max off-diagonal {off:.3e})"
            )
        sweeps += 1
        for bi, (i0, i1) in enumerate(blocks):
            for j0, j1 in blocks[bi:]:
                same = i0 == j0
                if same:
                    j0 = j1 = i1
                b1 = i1 - i0
                m = b1 + j1 - j0
                S = S_buf[:m, :m]
                _kernels.gather_block_pair(aug, i0, i1, j0, j1, S)
                ZT = np.eye(m)
                if _kernels.jacobi_rotate_block(S, ZT, b1, same, JACOBI_REL_TOL, floor) == 0:
                    continue
                # (Z^T [aug_I; aug_J])^T = aug_I^T Z[:b1] + aug_J^T Z[b1:]
                Z = ZT.T
                out = dgemm(1.0, aug[i0:i1].T, np.asfortranarray(Z[:b1]), c=rows_t[:, :m], overwrite_c=1)
                if m > b1:
                    out = dgemm(1.0, aug[j0:j1].T, np.asfortranarray(Z[b1:]), beta=1.0, c=out, overwrite_c=1)
                _kernels.scatter_block_pair(aug, out.T, S, i0, i1, j0, j1, n)
    w = np.diag(a).copy()
    order = np.argsort(-w, kind="stable")
    return EigenDecomposition(w[order], np.ascontiguousarray(aug[order, n:].T), sweeps)


# eigen-route SVD --------------------------------------------------------


def canonical_signs(V):
    """+1/-1 per column making each column's largest-magnitude entry >= 0."""
    if V.shape[1] == 0:
        return np.ones(0)
    pick = V[np.argmax(np.abs(V), axis=0), np.arange(V.shape[1])]
    return np.where(pick < 0, -1.0, 1.0)


def truncated_svd_via_gram(F, k):
    """Top-k SVD of F (l x n) from the eigendecomposition of F F^T."""
    F = np.asarray(F, dtype=np.float64)
    if F.ndim != 2:
        raise DimensionError("truncated_svd_via_gram expects a 2-d array")
    l, n = F.shape
    if l > n:
        raise DimensionError(f"F must have at most as many rows as columns, got {F.shape}")
    if not 1 <= k <= l:
        raise DimensionError(f"k={k} must lie in [1, {l}]")
    G = F @ F.T
    eig = jacobi_eigh((G + G.T) / 2.0)
    lam = eig.eigenvalues
    cutoff = GRAM_RANK_TOL * lam[0] if lam[0] > 0 else np.inf
    if not lam[k - 1] > cutoff:
        safe = int(np.sum(lam[:k] > cutoff))
        raise RankDeficiencyError(
            f"F has numerical rank below k={k}; largest safe k is {safe}", safe_k=safe
        )
    d = np.sqrt(lam[:k])
    U = eig.eigenvectors[:, :k]
    V = (F.T @ U) / d
    signs = canonical_signs(V)
    return TruncatedSVDResult(U * signs, d, V * signs)


# lazy projector and norms ----------------------------------------------


def gram_solve(U, Y):
    """(U^T U)^{-1} Y via the Jacobi eigendecomposition of the Gram matrix.

    The Gram matrix squares the condition number of U, so one step of
    iterative refinement follows the eigen solve.
    """
    G = U.T @ U
    eig = jacobi_eigh((G + G.T) / 2.0)
    lam = eig.eigenvalues
    if len(lam) == 0 or not lam[-1] > GRAM_RANK_TOL * lam[0]:
        raise RankDeficiencyError("Gram matrix U^T U is singular; U is not of full column rank")
    W = eig.eigenvectors
    Z = W @ ((W.T @ Y) / lam[:, None])
    return Z + W @ ((W.T @ (Y - G @ Z)) / lam[:, None])


def apply_lazy_projector(U, X):
    """U' U^T X with U' = U (U^T U)^{-1}, returned dense (m x n)."""
    U = np.asarray(U, dtype=np.float64)
    rows = X.rows if isinstance(X, SparseMatrix) else np.shape(X)[0]
    if U.ndim != 2 or U.shape[0] != rows:
        raise DimensionError(f"U has {U.shape[0]} rows but X has {rows}")
    if isinstance(X, SparseMatrix):
        Y = gemm_t(U, X)
    else:
        Y = U.T @ np.asarray(X, dtype=np.float64)
    return U @ gram_solve(U, Y)


def _as_operator(A):
    if isinstance(A, spla.LinearOperator):
        return A
    if isinstance(A, SparseMatrix):
        return spla.aslinearoperator(A.to_scipy())
    if sp.issparse(A):
        return spla.aslinearoperator(A)
    return spla.aslinearoperator(np.asarray(A, dtype=np.float64))


def spectral_norm(A, seed=0, atol=0.0):
    """Largest singular value by power iteration on A^T A.

    Stops when successive estimates differ by at most POWER_TOL relative or
    `atol` absolute. The absolute floor matters for operators whose norm is
    at rounding level, where the estimates jitter instead of converging.
    """
    op = _as_operator(A)
    m, n = op.shape
    if m == 0 or n == 0:
        raise DimensionError("spectral_norm of an empty matrix")
    x = np.random.default_rng(seed).standard_normal(n)
    x /= np.linalg.norm(x)
    sigma = 0.0
    gap = np.inf
    for _ in range(POWER_MAX_ITER):
        y = op.matvec(x)
        new = float(np.linalg.norm(y))
        if new == 0.0:
            return 0.0
        gap = abs(new - sigma)
        if gap <= max(POWER_TOL * new, atol):
            return new
        sigma = new
        z = op.rmatvec(y)
        nz = np.linalg.norm(z)
        if nz == 0.0:
            return sigma
        x = z / nz
    raise ConvergenceError(f"power iteration did not converge; last gap {gap:.3e} at sigma {sigma:.6e}")


def jacobi_singular_values(A, tol=1e-15, max_sweeps=60):
    """All singular values, descending, by one-sided (Hestenes) Jacobi."""
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.size == 0:
        raise DimensionError("jacobi_singular_values expects a non-empty 2-d array")
    W = np.asfortranarray(A if A.shape[0] >= A.shape[1] else A.T, dtype=np.float64).copy(order="F")
    # null-space columns only shrink under rotation and would never pass the
    # relative test; below eps * ||A||_F a column is rounding noise
    zero = np.finfo(np.float64).eps * float(np.linalg.norm(W))
    if _kernels.one_sided_jacobi(W, tol, max_sweeps, zero * zero) < 0:
        raise ConvergenceError(f"one-sided Jacobi did not converge in {max_sweeps} sweeps")
    return np.sort(np.linalg.norm(W, axis=0))[::-1]
