"""Benchmark the compiled kernels against the pure-numpy fallback.

The backend is chosen once at import time from the GAUSSJN_NO_NUMBA
environment flag, so each backend is measured in its own child process.
The parent collects per-kernel steady-state timings (best of several
repeats), the one-time compile cost of the compiled backend, and an
end-to-end covering validation as a realistic composite workload.

Usage:
    python3 benchmarks/bench_kernels.py [--points N] [--repeats R]
"""

import argparse
import json
import os
import subprocess
import sys
import time
import timeit


def _child(args):
    import numpy as np

    t0 = time.perf_counter()
    from gaussjn import kernels

    kernels.warmup()
    compile_s = time.perf_counter() - t0

    rng = np.random.default_rng(7)
    xs = rng.uniform(-4.0, 4.0, args.points)
    values = rng.standard_normal(args.points)
    weights = rng.uniform(0.0, 1.0, args.points)
    pts = rng.uniform(-4.0, 4.0, (args.points // 10, 2))
    lo = rng.uniform(-4.0, -0.5, (400, 2))
    hi = lo + rng.uniform(0.5, 2.0, (400, 2))
    abs_vals = np.abs(rng.standard_normal(4096))
    cell_w = rng.uniform(0.0, 1.0, 4096)
    sigmas = np.geomspace(0.05, 4.0, 25)

    cases = {
        "erf_array": lambda: kernels.erf_array(xs),
        "erfc_array": lambda: kernels.erfc_array(xs),
        "weighted_sum": lambda: kernels.weighted_sum(values, weights),
        "pairwise_sum": lambda: kernels.pairwise_sum(values),
        "tail_sums": lambda: kernels.tail_sums(abs_vals, cell_w, sigmas),
        "count_membership": lambda: kernels.count_membership(pts, lo, hi),
    }

    results = {}
    for name, fn in cases.items():
        fn()  # one untimed call outside the measurement
        timings = timeit.repeat(fn, number=1, repeat=args.repeats)
        results[name] = min(timings)

    from gaussjn.covering import build_covering, coverage_report

    cov = build_covering(6, 2)
    coverage_report(cov, n_points=10_000, seed=0)  # warm path
    t0 = time.perf_counter()
    coverage_report(cov, n_points=100_000, seed=0)
    results["coverage_report_d2"] = time.perf_counter() - t0

    print(
        json.dumps(
            {
                "backend": kernels.BACKEND,
                "compile_s": compile_s,
                "results": results,
            }
        )
    )


def _run_backend(disable_numba, args):
    env = dict(os.environ)
    if disable_numba:
        env["GAUSSJN_NO_NUMBA"] = "1"
    else:
        env.pop("GAUSSJN_NO_NUMBA", None)
    cmd = [
        sys.executable,
        os.path.abspath(__file__),
        "--child",
        "--points",
        str(args.points),
        "--repeats",
        str(args.repeats),
    ]
    out = subprocess.run(cmd, env=env, capture_output=True, text=True, check=True)
    return json.loads(out.stdout.splitlines()[-1])


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--points", type=int, default=1_000_000)
    parser.add_argument("--repeats", type=int, default=5)
    parser.add_argument("--child", action="store_true", help=argparse.SUPPRESS)
    args = parser.parse_args()

    if args.child:
        _child(args)
        return

    fast = _run_backend(disable_numba=False, args=args)
    slow = _run_backend(disable_numba=True, args=args)

    print(f"array size: {args.points:,}   repeats: {args.repeats}")
    print(
        f"one-time compile cost ({fast['backend']} backend): "
        f"{fast['compile_s']:.2f}s   ({slow['backend']}: {slow['compile_s']:.2f}s)"
    )
    print()
    header = f"{'kernel':<22}{fast['backend']:>14}{slow['backend']:>14}{'speedup':>10}"
    print(header)
    print("-" * len(header))
    for name in fast["results"]:
        a = fast["results"][name]
        b = slow["results"][name]
        print(f"{name:<22}{a * 1e3:>12.3f}ms{b * 1e3:>12.3f}ms{b / a:>9.2f}x")


if __name__ == "__main__":
    main()
