"""Property suites for the SPCA / Lazy SPCA identities at desk scale.

Each suite draws seeded random instances and reports the worst violation
seen, next to its tolerance:

  projector   ||QQ^T X - U'U^T X||_F / ||X||_F
  subspace    chordal(V_spca, V_lazy) with k = l
  distances   |d_spca - d_lazy| over sampled row pairs, and contraction
  exactness   spectral error / ||X|| when rank(X) = l
  bound       mean spectral error against the oversampled error bound
  streaming   in-core vs streamed V, up to column sign

    python3 scripts/theorem_suites.py --instances 500
"""

import argparse
import json
import sys
import time
from dataclasses import asdict, dataclass

import numpy as np

from lazyspca.matrix import SparseMatrix, split_rows
from lazyspca.metrics import (
    bound_value,
    chordal_distance,
    distance_preservation_stats,
    reconstruction_error,
    residual_projector_gap,
)
from lazyspca.randproj import ProjectionSpec, density_policy, generate
from lazyspca.reducers import (
    ReducerConfig,
    reduce_lazy_spca,
    reduce_lazy_spca_streaming,
    reduce_spca,
    reduce_spca_streaming,
    sketch,
)
from lazyspca.synthetic import gen_synthetic


@dataclass
class SuiteConfig:
    instances: int = 200
    max_dim: int = 60
    max_l: int = 20
    pairs: int = 100
    bound_trials: int = 200
    seed: int = 0


def draw(cfg, seed):
    for attempt in range(50):
        rng = np.random.default_rng([cfg.seed, seed, attempt])
        l = int(rng.integers(2, cfg.max_l + 1))
        m = int(rng.integers(l, cfg.max_dim + 1))
        n = int(rng.integers(l, cfg.max_dim + 1))
        dense = rng.standard_normal((m, n)) * (rng.random((m, n)) < rng.uniform(0.3, 1.0))
        X = SparseMatrix.from_dense(dense)
        if seed % 2:
            spec = ProjectionSpec("very_sparse", n, l, density_policy(l, "conservative"), seed)
        else:
            spec = ProjectionSpec("gaussian", n, l, 1.0, seed)
        pm = generate(spec)
        U = sketch(X, pm)
        if np.linalg.matrix_rank(U) == l:
            return X, spec, pm, U
    raise RuntimeError(f"no full-rank sketch for instance {seed}")


def identity_suites(cfg):
    worst = {"projector": 0.0, "subspace": 0.0, "distance_gap": 0.0, "contraction_excess": -np.inf}
    for seed in range(cfg.instances):
        X, spec, pm, U = draw(cfg, seed)
        worst["projector"] = max(worst["projector"], residual_projector_gap(X, U) / np.linalg.norm(X.to_dense()))
        s = reduce_spca(X, ReducerConfig("spca", spec.l, spec.l, spec), omega=pm)
        z = reduce_lazy_spca(X, ReducerConfig("lazy_spca", spec.l, spec.l, spec), omega=pm)
        worst["subspace"] = max(worst["subspace"], chordal_distance(s.v, z.v).chordal)
        st = distance_preservation_stats(X, s, z, n_pairs=cfg.pairs, seed=seed)
        worst["distance_gap"] = max(worst["distance_gap"], float(np.abs(st.reduced_a - st.reduced_b).max()))
        excess = max((st.reduced_a - st.original).max(), (st.reduced_b - st.original).max())
        worst["contraction_excess"] = max(worst["contraction_excess"], float(excess))
    return worst


def exactness_suite(cfg):
    worst = 0.0
    for seed in range(cfg.instances // 5):
        rng = np.random.default_rng([cfg.seed, 10_000 + seed])
        l = int(rng.integers(2, 16))
        m, n = int(rng.integers(l + 1, 70)), int(rng.integers(l + 1, 70))
        dense = rng.standard_normal((m, l)) @ rng.standard_normal((l, n))
        X = SparseMatrix.from_dense(dense)
        U = sketch(X, generate(ProjectionSpec("gaussian", n, l, 1.0, seed)))
        norm = np.linalg.norm(dense, 2)
        for route in ("qr", "lazy"):
            worst = max(worst, reconstruction_error(X, U, route).spectral_error / norm)
    return worst


def bound_suite(cfg, k=5, l=10):
    rng = np.random.default_rng(2024)
    s = np.array([10.0, 8.0, 6.0, 4.0, 3.0] + [1.0] * 45)
    P, _ = np.linalg.qr(rng.standard_normal((60, 50)))
    Q, _ = np.linalg.qr(rng.standard_normal((50, 50)))
    X = SparseMatrix.from_dense(P @ np.diag(s) @ Q.T)
    errs = [
        reconstruction_error(X, sketch(X, generate(ProjectionSpec("gaussian", 50, l, 1.0, t))), "qr").spectral_error
        for t in range(cfg.bound_trials)
    ]
    return {"mean_error": float(np.mean(errs)), "sigma_k_plus_1": s[k], "bound": bound_value(60, 50, k, l, s[k])}


def streaming_suite(cfg):
    X = gen_synthetic(210, 90, 0.2, "decay(0.85)", seed=cfg.seed)
    worst = 0.0
    for method, core, stream in (("spca", reduce_spca, reduce_spca_streaming), ("lazy_spca", reduce_lazy_spca, reduce_lazy_spca_streaming)):
        config = ReducerConfig.build(method, 5, 90, 12, seed=cfg.seed)
        ref = core(X, config).v
        for blocks in (1, 4, 7):
            got = stream(split_rows(X, -(-X.rows // blocks)), config).v
            got = got * np.sign(np.sum(ref * got, axis=0))
            worst = max(worst, float(np.abs(ref - got).max()))
    return worst


def main():
    p = argparse.ArgumentParser(description="SPCA / Lazy SPCA property suites")
    for name, value in asdict(SuiteConfig()).items():
        p.add_argument(f"--{name.replace('_', '-')}", type=type(value), default=value)
    cfg = SuiteConfig(**vars(p.parse_args()))
    t0 = time.perf_counter()
    report = {"config": asdict(cfg)}
    report.update(identity_suites(cfg))
    report["exactness"] = exactness_suite(cfg)
    report["bound"] = bound_suite(cfg)
    report["streaming"] = streaming_suite(cfg)
    report["seconds"] = time.perf_counter() - t0
    print(json.dumps(report, indent=2))
    ok = (
        report["projector"] <= 1e-9
        and report["subspace"] <= 1e-8
        and report["distance_gap"] <= 1e-9
        and report["contraction_excess"] <= 1e-12
        and report["exactness"] <= 1e-9
        and report["bound"]["sigma_k_plus_1"] <= report["bound"]["mean_error"] <= report["bound"]["bound"]
        and report["streaming"] <= 1e-9
    )
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
