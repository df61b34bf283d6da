"""Random projection, SPCA and Lazy SPCA, in-core and streaming.

SPCA orthonormalises the sketch U = X Omega before forming F = Q^T X; Lazy
SPCA forms F = U^T X directly. Both then take the top-k right singular
vectors of F through the eigendecomposition of F F^T.
"""

import contextlib
import json
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg
from threadpoolctl import threadpool_limits

from .errors import DimensionError, RankDeficiencyError
from .linalg import QR_RANK_TOL, householder_qr, qr_r, truncated_svd_via_gram
from .matrix import SparseMatrix, gemm_t, spmm
from .mmio import read_array_with_comments, write_array
from .randproj import ProjectionSpec, generate

METHODS = ("rp", "spca", "lazy_spca")
PHASES = ("sketch", "qr", "F-form", "svd")
MAP_TAG = "lazyspca-map"


@dataclass(frozen=True)
class ReducerConfig:
    method: str
    k: int
    l: int
    projection: ProjectionSpec
    block_rows: Optional[int] = None
    streaming: bool = False
    deterministic: bool = False

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.k < 1 or self.l < self.k:
            raise DimensionError(f"need 1 <= k <= l, got k={self.k}, l={self.l}")
        if self.projection.l != self.l:
            raise DimensionError(f"projection has l={self.projection.l} but config has l={self.l}")
        if self.method == "rp" and self.l != self.k:
            raise DimensionError(f"random projection maps straight to l dimensions; need l == k, got k={self.k}, l={self.l}")
        if self.method != "rp" and self.l > self.projection.n:
            raise DimensionError(f"l={self.l} exceeds n={self.projection.n}")
        if self.streaming and not self.block_rows:
            raise ValueError("streaming needs block_rows")

    @classmethod
    def build(cls, method, k, n, l=None, kind="gaussian", density=1.0, seed=0, block_rows=None, deterministic=False):
        l = k if l is None else l
        spec = ProjectionSpec(kind, n, l, density, seed)
        return cls(method, k, l, spec, block_rows, block_rows is not None, deterministic)


@dataclass(frozen=True, eq=False)
class ReductionMap:
    """x -> V^T x. For RP, V holds the scaled projection (1/c) Omega."""

    v: np.ndarray
    singular_values: np.ndarray
    method: str
    config: ReducerConfig
    scale_c: float = 1.0

    @property
    def n(self):
        return self.v.shape[0]

    @property
    def k(self):
        return self.v.shape[1]

    def apply(self, x):
        return self.v.T @ np.asarray(x, dtype=np.float64)


@dataclass
class PhaseTimer:
    """Wall-clock seconds per named phase, accumulated across blocks."""

    seconds: dict = field(default_factory=dict)

    def phase(self, name):
        return _Phase(self.seconds, name)


class _Phase:
    # a plain context manager: a generator-based one costs a few microseconds
    # per phase, which shows up in sub-millisecond bench rows
    __slots__ = ("seconds", "name", "t0")

    def __init__(self, seconds, name):
        self.seconds = seconds
        self.name = name

    def __enter__(self):
        self.t0 = time.perf_counter()

    def __exit__(self, *exc):
        self.seconds[self.name] = self.seconds.get(self.name, 0.0) + time.perf_counter() - self.t0
        return False


@contextlib.contextmanager
def _thread_guard(config):
    # deterministic runs pin BLAS to one thread; the numba kernels are
    # already independent of the thread count
    if config.deterministic:
        with threadpool_limits(limits=1, user_api="blas"):
            yield
    else:
        yield


def _projection(config, omega):
    if omega is None:
        return generate(config.projection)
    if omega.spec != config.projection and omega.matrix.shape != (config.projection.n, config.l):
        raise DimensionError("supplied Omega does not match the configured projection")
    return omega


def _check_x(X, config):
    if not isinstance(X, SparseMatrix):
        raise TypeError("reducers take a SparseMatrix")
    if X.cols != config.projection.n:
        raise DimensionError(f"X has {X.cols} columns but the projection expects n={config.projection.n}")
    if config.method != "rp" and config.l > X.rows:
        raise DimensionError(f"l={config.l} exceeds m={X.rows}")


def _finish(F, config, method, timer):
    with timer.phase("svd"):
        svd = truncated_svd_via_gram(F, config.k)
    return ReductionMap(svd.v, svd.d, method, config)


def reduce_rp(X, config, omega=None, timer=None):
    timer = timer or PhaseTimer()
    _check_x(X, config)
    with timer.phase("sketch"):
        pm = _projection(config, omega)
        v = pm.dense() / pm.scale_c
    return ReductionMap(v, np.zeros(0), "rp", config, pm.scale_c)


def sketch(X, pm):
    return spmm(X, pm.dense())


def reduce_spca(X, config, omega=None, timer=None):
    timer = timer or PhaseTimer()
    _check_x(X, config)
    with _thread_guard(config):
        with timer.phase("sketch"):
            U = sketch(X, _projection(config, omega))
        with timer.phase("qr"):
            Q = householder_qr(U, overwrite=True).q
            del U
        with timer.phase("F-form"):
            F = gemm_t(Q, X)
            del Q
        return _finish(F, config, "spca", timer)


def reduce_lazy_spca(X, config, omega=None, timer=None):
    timer = timer or PhaseTimer()
    _check_x(X, config)
    with _thread_guard(config):
        with timer.phase("sketch"):
            U = sketch(X, _projection(config, omega))
        with timer.phase("F-form"):
            F = gemm_t(U, X)
            del U
        return _finish(F, config, "lazy_spca", timer)


def _stream(blocks, config, omega, timer, with_r):
    pm = None
    F = None
    R = None
    rows = 0
    last = None
    for item in blocks:
        block = item.block
        last = item.slice_index
        if pm is None:
            with timer.phase("sketch"):
                pm = _projection(config, omega)
                dense = pm.dense()
        if block.cols != config.projection.n:
            raise DimensionError(f"block {item.slice_index} has {block.cols} columns, expected {config.projection.n}")
        rows += block.rows
        with timer.phase("sketch"):
            U_s = spmm(block, dense)
        with timer.phase("F-form"):
            part = gemm_t(U_s, block)
            F = part.copy() if F is None else F + part
        if with_r:
            with timer.phase("qr"):
                R = qr_r(U_s if R is None else np.vstack([R, U_s]))
    if F is None:
        raise ValueError("empty block sequence")
    if config.l > rows:
        raise DimensionError(f"l={config.l} exceeds the {rows} streamed rows")
    return F, R, last


def reduce_spca_streaming(blocks, config, omega=None, timer=None):
    timer = timer or PhaseTimer()
    with _thread_guard(config):
        F, R, last = _stream(blocks, config, omega, timer, with_r=True)
        with timer.phase("qr"):
            diag = np.abs(np.diag(R)) if R.shape[0] == config.l else np.zeros(config.l)
            bad = np.flatnonzero(diag <= QR_RANK_TOL * np.linalg.norm(R))
            if len(bad):
                raise RankDeficiencyError(
                    f"running R is singular at column {int(bad[0])} after slice {last}",
                    column=int(bad[0]),
                    slice_index=last,
                )
            F = scipy.linalg.solve_triangular(R, F, trans="T", lower=False, check_finite=False)
        return _finish(F, config, "spca", timer)


def reduce_lazy_spca_streaming(blocks, config, omega=None, timer=None):
    timer = timer or PhaseTimer()
    with _thread_guard(config):
        F, _, _ = _stream(blocks, config, omega, timer, with_r=False)
        return _finish(F, config, "lazy_spca", timer)


def reduce(X_or_blocks, config, omega=None, timer=None):
    """Dispatch on method and streaming flag."""
    if config.method == "rp":
        if config.streaming:
            raise ValueError("random projection does not need streaming; pass the matrix")
        return reduce_rp(X_or_blocks, config, omega, timer)
    if config.streaming:
        fn = reduce_spca_streaming if config.method == "spca" else reduce_lazy_spca_streaming
    else:
        fn = reduce_spca if config.method == "spca" else reduce_lazy_spca
    return fn(X_or_blocks, config, omega, timer)


def apply_map(rmap, X):
    """Reduced data X V (m x k)."""
    if X.cols != rmap.n:
        raise DimensionError(f"X has {X.cols} columns but the map expects {rmap.n}")
    return spmm(X, rmap.v)


def map_header(rmap):
    spec = rmap.config.projection
    return {
        "method": rmap.method,
        "k": rmap.k,
        "l": rmap.config.l,
        "seed": spec.seed,
        "density": spec.density,
        "c": rmap.scale_c,
        "n": rmap.n,
        "kind": spec.kind,
        "singular_values": rmap.singular_values.tolist(),
    }


def save_map(path, rmap):
    header = json.dumps(map_header(rmap), sort_keys=True)
    write_array(path, rmap.v, comments=[f"{MAP_TAG} {header}"])


def load_map(path):
    v, comments = read_array_with_comments(path)
    tagged = [c for c in comments if c.startswith(MAP_TAG)]
    if not tagged:
        raise ValueError(f"{path} carries no map header")
    h = json.loads(tagged[0][len(MAP_TAG):])
    config = ReducerConfig.build(h["method"], h["k"], h["n"], h["l"], h["kind"], h["density"], h["seed"])
    return ReductionMap(v, np.array(h["singular_values"]), h["method"], config, h["c"])
