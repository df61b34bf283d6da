import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from lazyspca.errors import DimensionError
from lazyspca.metrics import (
    RECORD_FIELDS,
    bound_value,
    chordal_distance,
    comparison_record,
    distance_preservation_stats,
    orthonormal_basis,
    reconstruction_error,
    residual_projector_gap,
    sample_pairs,
)
from lazyspca.matrix import SparseMatrix
from lazyspca.reducers import ReducerConfig, reduce_lazy_spca, reduce_spca


def _basis(rng, n, k):
    return np.linalg.qr(rng.standard_normal((n, k)))[0]


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 30), st.integers(0, 30), st.integers(0, 30), st.integers(0, 2**31))
def test_chordal_matches_projector_formula(n, a, b, seed):
    rng = np.random.default_rng(seed)
    k1, k2 = min(a, n), min(b, n)
    V1, V2 = _basis(rng, n, k1), _basis(rng, n, k2)
    got = chordal_distance(V1, V2)
    assert got.chordal == pytest.approx(oracles.projector_distance(V1, V2), abs=1e-12)
    assert (got.k_i, got.k_j) == (k1, k2)
    assert chordal_distance(V2, V1).chordal == pytest.approx(got.chordal, abs=1e-12)


def test_chordal_identical_and_rotated_bases():
    rng = np.random.default_rng(1)
    V = _basis(rng, 20, 5)
    R = _basis(rng, 5, 5)
    assert chordal_distance(V, V).chordal < 1e-14
    assert chordal_distance(V, V @ R).chordal < 1e-13
    E = np.eye(4)
    assert chordal_distance(E[:, :2], E[:, 2:]).chordal == pytest.approx(2.0)


def test_chordal_validation():
    with pytest.raises(DimensionError):
        chordal_distance(np.eye(3)[:, :1], np.eye(4)[:, :1])
    with pytest.raises(ValueError):
        chordal_distance(2 * np.eye(3), np.eye(3))


def test_reconstruction_error_against_dense():
    rng = np.random.default_rng(2)
    dense = rng.standard_normal((40, 30)) * (rng.random((40, 30)) < 0.5)
    U = dense @ rng.standard_normal((30, 8))
    Q, _ = np.linalg.qr(U)
    resid = dense - Q @ Q.T @ dense
    for route in ("qr", "lazy"):
        r = reconstruction_error(SparseMatrix.from_dense(dense), U, route, k=3, chunk=7)
        assert r.spectral_error == pytest.approx(oracles.spectral_norm(resid), rel=1e-6)
        assert r.frobenius_error == pytest.approx(np.linalg.norm(resid), rel=1e-10)
        s = oracles.jacobi_svd_values(dense)
        assert r.sigma_k_plus_1 == pytest.approx(s[3], rel=1e-10)
        assert r.bound == pytest.approx(bound_value(40, 30, 3, 8, s[3]))
    assert reconstruction_error(SparseMatrix.from_dense(dense), U, k=3, densify_limit=10).bound is None
    with pytest.raises(ValueError):
        reconstruction_error(dense, U, "svd")
    with pytest.raises(DimensionError):
        reconstruction_error(dense, U[:5])


def test_bound_value():
    assert bound_value(60, 50, 5, 10, 1.0) == pytest.approx(1 + 4 * math.sqrt(10) / 4 * math.sqrt(50))
    with pytest.raises(ValueError):
        bound_value(10, 10, 5, 6, 1.0)


def test_sample_pairs():
    p = sample_pairs(7, 500, seed=3)
    assert p.shape == (500, 2)
    assert np.all(p[:, 0] != p[:, 1])
    assert p.min() >= 0 and p.max() < 7
    np.testing.assert_array_equal(p, sample_pairs(7, 500, seed=3))
    assert len(sample_pairs(100, 50_000)) == 10_000
    with pytest.raises(DimensionError):
        sample_pairs(1)


def test_distance_stats_against_direct_computation():
    rng = np.random.default_rng(4)
    dense = rng.standard_normal((50, 20))
    X = SparseMatrix.from_dense(dense)
    s = reduce_spca(X, ReducerConfig.build("spca", 6, 20, 6, seed=1))
    z = reduce_lazy_spca(X, ReducerConfig.build("lazy_spca", 6, 20, 6, seed=1))
    stats = distance_preservation_stats(X, s, z, n_pairs=200, seed=5)
    i, j = stats.pairs[:, 0], stats.pairs[:, 1]
    np.testing.assert_allclose(stats.original, np.linalg.norm(dense[i] - dense[j], axis=1), rtol=1e-13)
    np.testing.assert_allclose(stats.reduced_a, np.linalg.norm((dense[i] - dense[j]) @ s.v, axis=1), rtol=1e-12)
    assert stats.max_contraction_violation <= 1e-12
    assert stats.max_map_discrepancy <= 1e-9


def test_comparison_record_fields():
    rng = np.random.default_rng(6)
    X = SparseMatrix.from_dense(rng.standard_normal((20, 10)))
    s = reduce_spca(X, ReducerConfig.build("spca", 3, 10, 3))
    stats = distance_preservation_stats(X, s, n_pairs=20)
    rec = comparison_record("spca", "spca", 3, 3, 0, 0.0, None, stats)
    assert tuple(rec) == RECORD_FIELDS
    assert rec["bound"] is None


def test_projector_gap_small_for_full_rank_sketch():
    rng = np.random.default_rng(7)
    dense = rng.standard_normal((30, 25))
    U = dense @ rng.standard_normal((25, 6))
    assert residual_projector_gap(dense, U) <= 1e-10 * np.linalg.norm(dense)
    np.testing.assert_allclose(orthonormal_basis(U).T @ orthonormal_basis(U), np.eye(6), atol=1e-13)
