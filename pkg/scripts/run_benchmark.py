"""Time SPCA against Lazy SPCA on a synthetic sparse matrix.

Runs the `bench` command in a fresh process (so --threads takes effect before
numba loads), then prints per-run totals and the SPCA/Lazy ratio per k.

    python3 scripts/run_benchmark.py --ks 64 256 1024 --repeats 3
"""

import argparse
import csv
import subprocess
import sys
from dataclasses import dataclass, field


@dataclass
class BenchConfig:
    m: int = 200_000
    n: int = 5_000
    density: float = 0.01
    ks: list = field(default_factory=lambda: [64, 256, 1024])
    repeats: int = 3
    seed: int = 0
    threads: int = None
    out: str = "bench.csv"


def run(cfg):
    cmd = [
        sys.executable, "-m", "lazyspca", "bench",
        "--m", str(cfg.m), "--n", str(cfg.n), "--density", str(cfg.density),
        "--k-list", ",".join(map(str, cfg.ks)), "--repeats", str(cfg.repeats),
        "--seed", str(cfg.seed), "--out", cfg.out,
    ]
    if cfg.threads:
        cmd += ["--threads", str(cfg.threads)]
    subprocess.run(cmd, check=True)
    totals = {}
    with open(cfg.out) as f:
        for row in csv.DictReader(f):
            if row["phase"] == "total":
                totals[(int(row["repeat"]), int(row["k"]), row["method"])] = float(row["seconds"])
    return totals


def summarise(cfg, totals):
    ok = True
    print(f"{'run':>3} {'k':>6} {'spca s':>9} {'lazy s':>9} {'ratio':>7}")
    for rep in range(cfg.repeats):
        ratios = []
        for k in cfg.ks:
            s, z = totals[(rep, k, "spca")], totals[(rep, k, "lazy_spca")]
            ratios.append(s / z)
            ok &= z < s
            print(f"{rep:>3} {k:>6} {s:>9.2f} {z:>9.2f} {s / z:>7.3f}")
        ok &= all(b >= a for a, b in zip(ratios, ratios[1:]))
    print("trend holds on every run" if ok else "trend broken on at least one run")
    return ok


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--m", type=int, default=BenchConfig.m)
    p.add_argument("--n", type=int, default=BenchConfig.n)
    p.add_argument("--density", type=float, default=BenchConfig.density)
    p.add_argument("--ks", type=int, nargs="*", default=[64, 256, 1024])
    p.add_argument("--repeats", type=int, default=BenchConfig.repeats)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int)
    p.add_argument("--out", default=BenchConfig.out)
    cfg = BenchConfig(**vars(p.parse_args()))
    if not cfg.ks:
        return 0
    return 0 if summarise(cfg, run(cfg)) else 1


if __name__ == "__main__":
    sys.exit(main())
