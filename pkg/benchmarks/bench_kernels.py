"""Time the compiled RK4 kernel against the numpy fallback.

    python benchmarks/bench_kernels.py --dims 2 4 8 --steps 20000
"""

import argparse
import time

import numpy as np

from lindcollapse import _rk4_py
from lindcollapse._backend import BACKEND, compiled_rk4_run
from lindcollapse.liouvillian import LindbladSystem, build_superoperator, vec


def _system(rng, d, n_jumps=2):
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    jumps = tuple(rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d)) for _ in range(n_jumps))
    return LindbladSystem(0.5 * (a + a.conj().T), jumps)


def _best_of(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--dims", type=int, nargs="+", default=[2, 3, 4, 8, 16])
    ap.add_argument("--steps", type=int, default=10_000)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    if BACKEND != "cython":
        print("compiled kernel unavailable; only the fallback will be timed")
    rng = np.random.default_rng(args.seed)
    print(f"{'d':>3} {'steps':>7} {'python [s]':>11} {'cython [s]':>11} {'speedup':>8} {'max |diff|':>11}")
    for d in args.dims:
        sup = build_superoperator(_system(rng, d))
        y0 = vec(np.eye(d) / d)
        h = min(1e-3, 0.1 / sup.norm)
        every = max(1, args.steps // 1000)
        py = lambda: _rk4_py.rk4_run(sup.matrix, y0, d, h, args.steps, every)
        t_py = _best_of(py, args.repeat)
        if BACKEND == "cython":
            cy = lambda: compiled_rk4_run(sup.matrix, y0, d, h, args.steps, every)
            t_cy = _best_of(cy, args.repeat)
            diff = float(np.max(np.abs(py()[1] - cy()[1])))
            print(f"{d:>3} {args.steps:>7} {t_py:11.4f} {t_cy:11.4f} {t_py / t_cy:8.1f} {diff:11.2e}")
        else:
            print(f"{d:>3} {args.steps:>7} {t_py:11.4f} {'-':>11} {'-':>8} {'-':>11}")


if __name__ == "__main__":
    main()
