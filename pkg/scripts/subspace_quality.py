"""Chordal distance of RP, SPCA and Lazy SPCA bases to the true top-k subspace.

The true subspace comes from a dense SVD of a synthetic matrix with a
geometrically decaying spectrum. Writes one CSV row per (k, method).

    python3 scripts/subspace_quality.py --ks 5 10 20 40 --out quality.csv
"""

import argparse
import csv
import sys
from dataclasses import dataclass, field

import numpy as np

from lazyspca.metrics import chordal_distance, orthonormal_basis
from lazyspca.reducers import ReducerConfig, reduce
from lazyspca.synthetic import gen_synthetic


@dataclass
class QualityConfig:
    m: int = 800
    n: int = 400
    density: float = 0.05
    spectrum: str = "decay(0.8)"
    rank: int = 100
    ks: list = field(default_factory=lambda: [5, 10, 20, 40])
    oversample: int = 0
    seed: int = 9
    out: str = "quality.csv"


def run(cfg):
    X = gen_synthetic(cfg.m, cfg.n, cfg.density, cfg.spectrum, seed=cfg.seed, rank=cfg.rank)
    Vt = np.linalg.svd(X.to_dense(), full_matrices=False)[2]
    rows = []
    for k in cfg.ks:
        truth = Vt[:k].T
        for method in ("rp", "spca", "lazy_spca"):
            l = k if method == "rp" else k + cfg.oversample
            rmap = reduce(X, ReducerConfig.build(method, k, cfg.n, l, seed=k))
            basis = orthonormal_basis(rmap.v) if method == "rp" else rmap.v
            rows.append({"k": k, "l": l, "method": method, "chordal": chordal_distance(truth, basis).chordal})
    return rows


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--ks", type=int, nargs="+", default=[5, 10, 20, 40])
    p.add_argument("--spectrum", default=QualityConfig.spectrum)
    p.add_argument("--oversample", type=int, default=0)
    p.add_argument("--seed", type=int, default=QualityConfig.seed)
    p.add_argument("--out", default=QualityConfig.out)
    cfg = QualityConfig(**vars(p.parse_args()))
    rows = run(cfg)
    with open(cfg.out, "w", newline="") as f:
        w = csv.DictWriter(f, fieldnames=["k", "l", "method", "chordal"])
        w.writeheader()
        w.writerows(rows)
    for r in rows:
        print(f"k={r['k']:>3} l={r['l']:>3} {r['method']:<10} {r['chordal']:.6f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
