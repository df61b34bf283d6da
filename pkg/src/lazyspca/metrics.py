"""Subspace distances, reconstruction errors and distance preservation."""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse.linalg as spla

from .errors import DimensionError
from .linalg import gram_solve, householder_qr, jacobi_singular_values, spectral_norm
from .matrix import SparseMatrix, frobenius_norm, gemm_t, spmm

ORTHONORMAL_TOL = 1e-8
DENSIFY_LIMIT = 2000
MAX_PAIRS = 10_000
ROUNDING_FLOOR = 256 * np.finfo(np.float64).eps
RECORD_FIELDS = (
    "method_a",
    "method_b",
    "k",
    "l",
    "seed",
    "chordal",
    "spectral_error",
    "frobenius_error",
    "bound",
    "max_contraction_violation",
    "max_map_discrepancy",
)


@dataclass(frozen=True)
class SubspaceDistanceReport:
    chordal: float
    k_i: int
    k_j: int


@dataclass(frozen=True)
class ErrorReport:
    spectral_error: float
    frobenius_error: float
    bound: Optional[float] = None
    sigma_k_plus_1: Optional[float] = None


@dataclass(frozen=True)
class DistanceReport:
    pairs: np.ndarray
    original: np.ndarray
    reduced_a: np.ndarray
    reduced_b: Optional[np.ndarray]
    max_contraction_violation: float
    max_map_discrepancy: float


def _check_orthonormal(V, name):
    G = V.T @ V
    err = np.abs(G - np.eye(G.shape[0])).max() if G.size else 0.0
    if err > ORTHONORMAL_TOL:
        raise ValueError(f"{name} does not have orthonormal columns (max deviation {err:.2e})")


def chordal_distance(V_i, V_j):
    """||V_i V_i^T - V_j V_j^T||_F without forming n x n matrices.

    With M = V_i^T V_j the squared distance equals k_i + k_j - 2||M||_F^2.
    That difference cancels badly for nearby subspaces, so it is evaluated as
    ||V_i - V_j M^T||_F^2 + ||V_j - V_i M||_F^2, which is the same quantity
    written as a sum of the two residuals of projecting one basis onto the
    other span.
    """
    V_i = np.asarray(V_i, dtype=np.float64)
    V_j = np.asarray(V_j, dtype=np.float64)
    if V_i.shape[0] != V_j.shape[0]:
        raise DimensionError(f"bases live in R^{V_i.shape[0]} and R^{V_j.shape[0]}")
    _check_orthonormal(V_i, "V_i")
    _check_orthonormal(V_j, "V_j")
    M = V_i.T @ V_j
    r_i = V_i - V_j @ M.T
    r_j = V_j - V_i @ M
    d = math.sqrt(float(np.sum(r_i * r_i) + np.sum(r_j * r_j)))
    return SubspaceDistanceReport(d, V_i.shape[1], V_j.shape[1])


def orthonormal_basis(A):
    """Orthonormal basis for the column span of a full-column-rank A."""
    return householder_qr(np.asarray(A, dtype=np.float64)).q


def _projector(U, route):
    """(P, P^T) callables for the rank-l approximator built from sketch U."""
    U = np.ascontiguousarray(U, dtype=np.float64)
    if route == "qr":
        Q = householder_qr(U).q
        return lambda Y: Q @ (Q.T @ Y)
    if route == "lazy":
        return lambda Y: U @ gram_solve(U, U.T @ Y)
    raise ValueError(f"route must be 'qr' or 'lazy', got {route!r}")


def bound_value(m, n, k, l, sigma_k_plus_1):
    """[1 + 4 sqrt(l)/(l-k-1) sqrt(min(m, n))] sigma_{k+1}."""
    if l < k + 2:
        raise ValueError(f"the bound needs l >= k + 2, got k={k}, l={l}")
    return (1.0 + 4.0 * math.sqrt(l) / (l - k - 1) * math.sqrt(min(m, n))) * sigma_k_plus_1


def reconstruction_error(X, U, route="qr", k=None, densify_limit=DENSIFY_LIMIT, chunk=256):
    """Spectral and Frobenius norms of X - P X, P from the sketch U.

    The residual is applied as an operator; the Frobenius norm is accumulated
    over column chunks of X. When `k` is given and X is within the densify
    limit, sigma_{k+1} comes from one-sided Jacobi and the bound is attached.
    """
    if not isinstance(X, SparseMatrix):
        X = SparseMatrix.from_dense(X)
    m, n = X.shape
    if U.shape[0] != m:
        raise DimensionError(f"sketch has {U.shape[0]} rows, X has {m}")
    P = _projector(U, route)
    Xs = X.to_scipy()
    Xr = X.csr()

    def matvec(v):
        y = Xr @ np.ravel(v)
        return y - P(y[:, None])[:, 0]

    def rmatvec(w):
        w = np.ravel(w)
        return Xs.T @ (w - P(w[:, None])[:, 0])

    op = spla.LinearOperator((m, n), matvec=matvec, rmatvec=rmatvec, dtype=np.float64)
    # residuals at rounding level jitter under power iteration; accept
    # agreement to a few hundred ulps of ||X||_F
    spectral = spectral_norm(op, atol=ROUNDING_FLOOR * frobenius_norm(X))
    fro2 = 0.0
    for a in range(0, n, chunk):
        block = Xs[:, a:a + chunk].toarray()
        resid = block - P(block)
        fro2 += float(np.sum(resid * resid))
    sigma = bound = None
    if k is not None and max(m, n) <= densify_limit:
        s = jacobi_singular_values(X.to_dense())
        sigma = float(s[k]) if k < len(s) else 0.0
        if U.shape[1] >= k + 2:
            bound = bound_value(m, n, k, U.shape[1], sigma)
    return ErrorReport(spectral, math.sqrt(fro2), bound, sigma)


def sample_pairs(m, n_pairs=MAX_PAIRS, seed=0):
    """Uniform distinct row-index pairs (i != j), at most MAX_PAIRS."""
    if m < 2:
        raise DimensionError("need at least two rows to sample pairs")
    n_pairs = min(n_pairs, MAX_PAIRS)
    rng = np.random.default_rng(seed)
    i = rng.integers(0, m, n_pairs)
    j = rng.integers(0, m - 1, n_pairs)
    j += j >= i
    return np.column_stack([i, j])


def distance_preservation_stats(X, map_a, map_b=None, pairs=None, n_pairs=MAX_PAIRS, seed=0):
    """Original vs reduced Euclidean distances over sampled row pairs."""
    if not isinstance(X, SparseMatrix):
        X = SparseMatrix.from_dense(X)
    if pairs is None:
        pairs = sample_pairs(X.rows, n_pairs, seed)
    pairs = np.asarray(pairs, dtype=np.int64)
    if pairs.size and (pairs.min() < 0 or pairs.max() >= X.rows):
        raise DimensionError("pair index outside the rows of X")
    C = X.csr()
    D = SparseMatrix.from_scipy(C[pairs[:, 0]] - C[pairs[:, 1]])
    original = np.sqrt(np.asarray(D.to_scipy().multiply(D.to_scipy()).sum(axis=1)).ravel())
    reduced = []
    for rmap in (map_a, map_b):
        if rmap is None:
            reduced.append(None)
            continue
        if rmap.n != X.cols:
            raise DimensionError(f"map expects n={rmap.n}, X has {X.cols} columns")
        reduced.append(np.linalg.norm(spmm(D, rmap.v), axis=1))
    red_a, red_b = reduced
    excess = red_a - original
    if red_b is not None:
        excess = np.maximum(excess, red_b - original)
    violation = max(0.0, float(excess.max())) if len(excess) else 0.0
    discrepancy = float(np.abs(red_a - red_b).max()) if red_b is not None and len(red_a) else 0.0
    return DistanceReport(pairs, original, red_a, red_b, violation, discrepancy)


def comparison_record(method_a, method_b, k, l, seed, chordal, errors, stats):
    """One JSON-ready comparison object with the fixed field names."""
    record = {
        "method_a": method_a,
        "method_b": method_b,
        "k": int(k),
        "l": int(l),
        "seed": int(seed),
        "chordal": float(chordal),
        "spectral_error": None if errors is None else float(errors.spectral_error),
        "frobenius_error": None if errors is None else float(errors.frobenius_error),
        "bound": None if errors is None or errors.bound is None else float(errors.bound),
        "max_contraction_violation": float(stats.max_contraction_violation),
        "max_map_discrepancy": float(stats.max_map_discrepancy),
    }
    assert tuple(record) == RECORD_FIELDS
    return record


def residual_projector_gap(X, U):
    """||Q Q^T X - U' U^T X||_F computed densely (desk-scale check)."""
    if not isinstance(X, SparseMatrix):
        X = SparseMatrix.from_dense(X)
    U = np.ascontiguousarray(U, dtype=np.float64)
    Q = householder_qr(U).q
    a = Q @ gemm_t(Q, X)
    b = U @ gram_solve(U, gemm_t(U, X))
    return float(np.linalg.norm(a - b))
