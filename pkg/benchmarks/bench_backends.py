"""Compare the compiled kernels with the pure-Python fallback.

Times the batch RK4 integrator and the directed Chebyshev distance on
identical inputs, verifies bitwise agreement, and reports per-step and
per-pair costs plus the speedup ratio.

Usage:
    python benchmarks/bench_backends.py [--points N] [--steps N] [--repeat K]
"""

import argparse
import time

import numpy as np

import boxflow._kernels_py as kpy

try:
    import boxflow._kernels as kc
except ImportError:
    kc = None


def time_best(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_rk4(mod, fam, lam, x0, steps, dt, lo, hi, repeat):
    def run():
        x = np.ascontiguousarray(x0.copy())
        esc = np.full(x.shape[0], -1, dtype=np.int64)
        mod.rk4_integrate(fam, lam, x, steps, dt, 0.0, lo, hi, esc)
        run.result = (x, esc)

    best = time_best(run, repeat)
    return best, run.result


def bench_distance(mod, a, b, repeat):
    def run():
        run.result = mod.directed_chebyshev(a, b)

    best = time_best(run, repeat)
    return best, run.result


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--points", type=int, default=20000, help="states per RK4 batch")
    ap.add_argument("--steps", type=int, default=100, help="RK4 steps per state")
    ap.add_argument("--pairs", type=int, default=2000, help="points per distance set")
    ap.add_argument("--repeat", type=int, default=3, help="timing repetitions (best kept)")
    args = ap.parse_args()

    if kc is None:
        raise SystemExit("compiled extension is not built; nothing to compare against")

    rng = np.random.default_rng(99)

    print(f"RK4 batch: {args.points} Lorenz states x {args.steps} steps (dt=0.01)")
    x0 = rng.uniform([-20, -25, 0], [20, 25, 50], size=(args.points, 3))
    lo = np.asarray([-75.0, -90.0, -65.0])
    hi = np.asarray([75.0, 90.0, 115.0])
    t_c, (xc, ec) = bench_rk4(kc, kc.FAM_LORENZ, 28.0, x0, args.steps, 0.01, lo, hi, args.repeat)
    t_p, (xp, ep) = bench_rk4(kpy, kpy.FAM_LORENZ, 28.0, x0, args.steps, 0.01, lo, hi, args.repeat)
    assert (xc == xp).all() and (ec == ep).all(), "backends disagree bitwise"
    n_ops = args.points * args.steps
    print(f"  cython : {t_c:8.4f} s  ({1e9 * t_c / n_ops:7.1f} ns/step)")
    print(f"  python : {t_p:8.4f} s  ({1e9 * t_p / n_ops:7.1f} ns/step)")
    print(f"  speedup: {t_p / t_c:.1f}x   (bitwise identical results)")

    print(f"\ndirected Chebyshev: {args.pairs} x {args.pairs} 3-D points")
    a = np.ascontiguousarray(rng.uniform(-1, 1, size=(args.pairs, 3)))
    b = np.ascontiguousarray(rng.uniform(-1, 1, size=(args.pairs, 3)))
    t_c, d_c = bench_distance(kc, a, b, args.repeat)
    t_p, d_p = bench_distance(kpy, a, b, args.repeat)
    assert d_c == d_p, "backends disagree"
    n_pairs = args.pairs * args.pairs
    print(f"  cython : {t_c:8.4f} s  ({1e9 * t_c / n_pairs:7.2f} ns/pair)")
    print(f"  python : {t_p:8.4f} s  ({1e9 * t_p / n_pairs:7.2f} ns/pair)")
    print(f"  speedup: {t_p / t_c:.1f}x   (identical results)")


if __name__ == "__main__":
    main()
