"""Command-line entry point: reduce, compare, bench, gen-synthetic.

Compute modules are imported inside the commands, after ``--threads`` has
been written to NUMBA_NUM_THREADS; numba reads that variable once at import.
"""

import argparse
import contextlib
import csv
import json
import os
import sys
import time

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_PARSE = 2
EXIT_RANK = 3
EXIT_DIMENSION = 4
EXIT_CONVERGENCE = 5

# identity tolerances enforced by `compare` on a (spca, lazy_spca) pair
PROJECTOR_TOL = 1e-9
CHORDAL_TOL = 1e-8
DISCREPANCY_TOL = 1e-9
CONTRACTION_TOL = 1e-12

RUN_KEYS = (
    "input",
    "format",
    "method",
    "k",
    "l",
    "projection",
    "density_policy",
    "density",
    "seed",
    "block_rows",
    "streaming",
    "deterministic",
    "out_map",
    "out_reduced",
    "threads",
)
DEFAULTS = {
    "format": "mm",
    "seed": 0,
    "streaming": False,
    "deterministic": False,
}


class UsageError(ValueError):
    pass


def _set_threads(threads):
    if threads is not None:
        if threads < 1:
            raise UsageError(f"--threads must be positive, got {threads}")
        os.environ["NUMBA_NUM_THREADS"] = str(threads)


def _load_manifest(path):
    with open(path) as f:
        try:
            data = json.load(f)
        except json.JSONDecodeError as exc:
            from .errors import ParseError

            raise ParseError(f"{path}: {exc.msg}", line=exc.lineno) from None
    if not isinstance(data, dict):
        raise UsageError(f"{path}: manifest must be a JSON object")
    unknown = set(data) - set(RUN_KEYS)
    if unknown:
        raise UsageError(f"{path}: unknown manifest keys {sorted(unknown)}")
    return data


def _merge(args, manifest_path):
    """Manifest values fill in whatever was not given as a flag."""
    run = dict(DEFAULTS)
    if manifest_path:
        run.update(_load_manifest(manifest_path))
    for key in RUN_KEYS:
        value = getattr(args, key, None)
        if value is not None and value is not False:
            run[key] = value
    if run.get("block_rows") is not None:
        run["streaming"] = True
    for key in ("input", "method", "k"):
        if run.get(key) is None:
            raise UsageError(f"missing required setting {key!r}")
    return run


def _projection_settings(run):
    """(kind, density) from --projection, --density-policy and --density."""
    from .randproj import density_policy

    kind = run.get("projection")
    policy = run.get("density_policy")
    density = run.get("density")
    if policy is not None:
        if policy.startswith("value:"):
            try:
                density = float(policy[len("value:"):])
            except ValueError:
                raise UsageError(f"bad density value in {policy!r}") from None
        elif policy in ("aggressive", "conservative"):
            density = density_policy(int(run["k"]), policy)
        else:
            raise UsageError(f"--density-policy must be aggressive, conservative or value:<f>, got {policy!r}")
    if kind is None:
        kind = "very_sparse" if density is not None else "gaussian"
    if kind == "gaussian":
        if density not in (None, 1.0):
            raise UsageError("a density only applies to the very_sparse projection")
        density = 1.0
    elif density is None:
        raise UsageError("the very_sparse projection needs --density-policy")
    return kind, float(density)


def _config(run, n):
    from .reducers import ReducerConfig

    kind, density = _projection_settings(run)
    if run.get("streaming") and not run.get("block_rows"):
        raise UsageError("streaming needs block_rows")
    return ReducerConfig.build(
        run["method"],
        int(run["k"]),
        n,
        None if run.get("l") is None else int(run["l"]),
        kind,
        density,
        int(run["seed"]),
        None if run.get("block_rows") is None else int(run["block_rows"]),
        bool(run.get("deterministic")),
    )


def _blocks(run):
    from .matrix import split_rows
    from .mmio import iter_mm_row_blocks, read_input

    if run["format"] == "mm":
        return iter_mm_row_blocks(run["input"], int(run["block_rows"]))
    return split_rows(read_input(run["input"], run["format"]), int(run["block_rows"]))


def _execute(run, timer=None):
    """Run one manifest; returns (X or None, shape, map, timer)."""
    from .mmio import read_header_shape, read_input
    from .reducers import PhaseTimer, reduce

    timer = timer or PhaseTimer()
    if run["format"] not in ("mm", "csv"):
        raise UsageError(f"--format must be mm or csv, got {run['format']!r}")
    if run.get("streaming") and run["method"] != "rp":
        shape = read_header_shape(run["input"], run["format"])
        config = _config(run, shape[1])
        return None, shape, reduce(_blocks(run), config, timer=timer), timer
    X = read_input(run["input"], run["format"])
    config = _config(dict(run, block_rows=None, streaming=False), X.cols)
    return X, X.shape, reduce(X, config, timer=timer), timer


def _write_reduced(run, X, rmap):
    from .mmio import write_csv
    from .reducers import apply_map

    if X is not None:
        write_csv(run["out_reduced"], apply_map(rmap, X))
        return
    with open(run["out_reduced"], "w") as f:
        for item in _blocks(run):
            Y = apply_map(rmap, item.block)
            f.writelines(",".join(repr(v) for v in row) + "\n" for row in Y.tolist())


def cmd_reduce(args):
    run = _merge(args, args.manifest)
    _set_threads(run.get("threads"))
    from .reducers import PHASES, save_map

    t0 = time.perf_counter()
    X, shape, rmap, timer = _execute(run)
    total = time.perf_counter() - t0
    if run.get("out_map"):
        save_map(run["out_map"], rmap)
    if run.get("out_reduced"):
        _write_reduced(run, X, rmap)
    report = {
        "method": rmap.method,
        "k": rmap.k,
        "l": rmap.config.l,
        "m": shape[0],
        "n": shape[1],
        "phases": {p: timer.seconds[p] for p in PHASES if p in timer.seconds},
        "total": total,
    }
    print(json.dumps(report))
    return EXIT_OK


def _compare_runs(args):
    if args.manifests:
        if len(args.manifests) != 2:
            raise UsageError("compare takes exactly two manifests")
        runs = []
        for path in args.manifests:
            ns = argparse.Namespace(**{k: None for k in RUN_KEYS})
            runs.append(_merge(ns, path))
        return runs
    base = argparse.Namespace(**{k: getattr(args, k, None) for k in RUN_KEYS})
    runs = []
    for method in (args.method_a, args.method_b):
        if method is None:
            raise UsageError("compare needs two manifests or --method-a and --method-b")
        base.method = method
        runs.append(_merge(base, args.manifest))
    return runs


def cmd_compare(args):
    runs = _compare_runs(args)
    _set_threads(runs[0].get("threads"))

    from .errors import DimensionError
    from .matrix import frobenius_norm
    from .metrics import (
        DENSIFY_LIMIT,
        chordal_distance,
        comparison_record,
        distance_preservation_stats,
        orthonormal_basis,
        reconstruction_error,
        residual_projector_gap,
    )
    from .mmio import read_header_shape
    from .reducers import sketch

    a, b = runs
    shape_a = read_header_shape(a["input"], a["format"])
    shape_b = read_header_shape(b["input"], b["format"])
    if shape_a != shape_b:
        raise DimensionError(f"inputs have shapes {shape_a} and {shape_b}")
    if int(a["k"]) != int(b["k"]):
        raise DimensionError(f"target dimensions differ: k={a['k']} and k={b['k']}")
    if a["input"] != b["input"] or int(a["seed"]) != int(b["seed"]):
        raise UsageError("both runs must share the input and the seed")
    X, _, map_a, _ = _execute(a)
    _, _, map_b, _ = _execute(b)
    if X is None:
        from .mmio import read_input

        X = read_input(a["input"], a["format"])
    seed = int(a["seed"])
    k = map_a.k
    # an RP map is not orthonormal; compare the subspace it spans
    bases = [orthonormal_basis(m.v) if m.method == "rp" else m.v for m in (map_a, map_b)]
    chordal = chordal_distance(*bases).chordal
    stats = distance_preservation_stats(X, map_a, map_b, seed=seed)
    # reconstruction errors come from the larger sketch of the pair
    config = max((map_a.config, map_b.config), key=lambda c: c.l)
    from .randproj import generate

    U = sketch(X, generate(config.projection))
    errors = reconstruction_error(X, U, "qr", k=k if config.l >= k + 2 else None)
    record = comparison_record(map_a.method, map_b.method, k, config.l, seed, chordal, errors, stats)
    print(json.dumps(record))

    if {map_a.method, map_b.method} != {"spca", "lazy_spca"}:
        return EXIT_OK
    checks = {}
    scale = max(1.0, float(stats.original.max())) if len(stats.original) else 1.0
    checks["contraction"] = stats.max_contraction_violation <= CONTRACTION_TOL * scale
    if map_a.config.projection == map_b.config.projection:
        if max(X.shape) <= DENSIFY_LIMIT:
            gap = residual_projector_gap(X, U)
            checks["projector"] = gap <= PROJECTOR_TOL * frobenius_norm(X)
        # the two bases span the same subspace only when no truncation happens
        if k == config.l:
            checks["chordal"] = chordal <= CHORDAL_TOL
            checks["discrepancy"] = stats.max_map_discrepancy <= DISCREPANCY_TOL * scale
    failed = sorted(name for name, ok in checks.items() if not ok)
    if failed:
        print(f"compare: checks failed: {', '.join(failed)}", file=sys.stderr)
        return EXIT_CHECK_FAILED
    return EXIT_OK


BENCH_FIELDS = ("method", "k", "l", "phase", "seconds", "peak_resident_estimate", "repeat")


def _peak_estimate(method, phase, nnz, m, n, l):
    """Bytes held at the end of a phase: X in CSC + CSR, dense Omega, U or Q, F, Gram."""
    x = 2 * (12 * nnz + 8 * (m + n + 2))
    f = 8 * l * n
    sketch_b = 8 * m * l
    if phase == "sketch":
        return x + 8 * n * l + sketch_b
    if phase == "qr":
        return x + 2 * sketch_b
    if phase == "F-form":
        return x + sketch_b + f
    return x + 2 * f + 16 * l * l


def _bench_matrix(args):
    from .mmio import read_input
    from .synthetic import gen_synthetic

    if args.input:
        return read_input(args.input, args.format)
    return gen_synthetic(args.m, args.n, args.density, args.spectrum, seed=args.seed)


def cmd_bench(args):
    _set_threads(args.threads)
    ks = [int(t) for t in args.k_list.split(",") if t.strip()] if args.k_list else []
    if not ks:
        return EXIT_OK
    from .reducers import PHASES, ReducerConfig, reduce

    X = _bench_matrix(args)
    methods = args.methods.split(",")
    # compile every numba kernel once so no timing includes JIT work; the
    # width exceeds both the QR panel and two Jacobi blocks so the blocked
    # code paths are compiled too
    from .matrix import SparseMatrix

    small = SparseMatrix.from_scipy(X.to_scipy()[: min(X.rows, 600)])
    X.csr()  # the row-compressed copy is built once and shared by every run
    width = max(1, min(160, small.rows, small.cols))
    for method in ("spca", "lazy_spca"):
        for w in (2, width):
            with contextlib.suppress(Exception):
                reduce(small, ReducerConfig.build(method, w, X.cols, w, seed=args.seed))

    out = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        writer = csv.writer(out)
        writer.writerow(BENCH_FIELDS)
        for rep in range(args.repeats):
            for k in ks:
                for method in methods:
                    from .reducers import PhaseTimer

                    config = ReducerConfig.build(method, k, X.cols, k, seed=args.seed + rep, deterministic=args.deterministic)
                    timer = PhaseTimer()
                    t0 = time.perf_counter()
                    reduce(X, config, timer=timer)
                    total = time.perf_counter() - t0
                    peak = 0
                    for phase in PHASES:
                        if phase not in timer.seconds:
                            continue
                        est = _peak_estimate(method, phase, X.nnz, X.rows, X.cols, k)
                        peak = max(peak, est)
                        writer.writerow((method, k, k, phase, f"{timer.seconds[phase]:.6f}", est, rep))
                    writer.writerow((method, k, k, "total", f"{total:.6f}", peak, rep))
                    out.flush()
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


def cmd_gen_synthetic(args):
    from .mmio import write_matrix_market
    from .synthetic import gen_synthetic

    X = gen_synthetic(args.m, args.n, args.density, args.spectrum, seed=args.seed, rank=args.rank)
    write_matrix_market(args.out, X, comments=[f"synthetic m={args.m} n={args.n} density={args.density} spectrum={args.spectrum} seed={args.seed}"])
    print(json.dumps({"m": X.rows, "n": X.cols, "nnz": X.nnz, "out": args.out}))
    return EXIT_OK


def _add_run_flags(p, with_method=True):
    p.add_argument("--manifest", help="JSON file with run settings; flags override it")
    p.add_argument("--input", help="matrix file")
    p.add_argument("--format", choices=("mm", "csv"))
    if with_method:
        p.add_argument("--method", choices=("rp", "spca", "lazy_spca"))
    p.add_argument("--k", type=int)
    p.add_argument("--l", type=int, help="sketch size (default k)")
    p.add_argument("--projection", choices=("gaussian", "very_sparse"))
    p.add_argument("--density-policy", dest="density_policy", help="aggressive, conservative or value:<f>")
    p.add_argument("--seed", type=int)
    p.add_argument("--block-rows", dest="block_rows", type=int, help="stream row blocks of this size")
    p.add_argument("--deterministic", action="store_true", default=None)
    p.add_argument("--threads", type=int)
    p.add_argument("--report", choices=("json",), default="json")


def build_parser():
    parser = argparse.ArgumentParser(prog="lazyspca", description="Sketch-based PCA dimensionality reduction")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("reduce", help="compute a reduction map")
    _add_run_flags(p)
    p.add_argument("--out-map", dest="out_map")
    p.add_argument("--out-reduced", dest="out_reduced", help="write the m x k reduced data as CSV")
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("compare", help="run two methods and report agreement metrics")
    p.add_argument("manifests", nargs="*", help="two run manifests")
    _add_run_flags(p, with_method=False)
    p.add_argument("--method-a", dest="method_a", choices=("rp", "spca", "lazy_spca"))
    p.add_argument("--method-b", dest="method_b", choices=("rp", "spca", "lazy_spca"))
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("bench", help="time the reducers phase by phase")
    p.add_argument("--input")
    p.add_argument("--format", choices=("mm", "csv"), default="mm")
    p.add_argument("--m", type=int, default=200_000)
    p.add_argument("--n", type=int, default=5_000)
    p.add_argument("--density", type=float, default=0.01)
    p.add_argument("--spectrum", default="flat")
    p.add_argument("--k-list", dest="k_list", default="", help="comma-separated k (l = k)")
    p.add_argument("--methods", default="spca,lazy_spca")
    p.add_argument("--repeats", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--deterministic", action="store_true")
    p.add_argument("--threads", type=int)
    p.add_argument("--out", help="CSV path (default stdout)")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("gen-synthetic", help="write a sparse matrix with a controlled spectrum")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--density", type=float, required=True)
    p.add_argument("--spectrum", default="flat", help="flat or decay(rate)")
    p.add_argument("--rank", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_synthetic)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    from .errors import ConvergenceError, DimensionError, ParseError, RankDeficiencyError

    try:
        return args.func(args)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except RankDeficiencyError as exc:
        print(f"rank error: {exc}", file=sys.stderr)
        return EXIT_RANK
    except DimensionError as exc:
        print(f"dimension error: {exc}", file=sys.stderr)
        return EXIT_DIMENSION
    except ConvergenceError as exc:
        print(f"convergence error: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
