"""Compiled vs interpreted timings for the hot kernels.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Compares the numba build of each kernel with its ``py_func`` and, for the
SVD, with the vectorised numpy fallback used under OSLAB_DISABLE_NUMBA=1.
The first compiled call is a warm-up and is not timed.
"""

import argparse
import time

import numpy as np

from oslab import numerics as nx
from oslab._jit import USE_NUMBA


def best_of(fn, repeat):
    out = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        out.append(time.perf_counter() - t0)
    return min(out)


def cases(rng):
    stack = rng.standard_normal((200, 6, 6)) + 1j * rng.standard_normal((200, 6, 6))
    torus = rng.standard_normal((6, 4, 4)) + 1j * rng.standard_normal((6, 4, 4))
    starts = np.exp(2j * np.pi * rng.random((8, 6)))
    q = np.array([[1.0, 1, 1, 1], [1, -1, 1, -1], [1, 1, -1, -1]])
    xs = rng.standard_normal((200, 3))
    tol, sweeps = nx.JACOBI_TOL, nx.MAX_SWEEPS

    def svd_loop(kernel):
        return lambda: [kernel(a, tol, sweeps) for a in stack]

    def simplex_loop(kernel):
        return lambda: [kernel(q, x / np.abs(x).max(), 1e-11) for x in xs]

    yield "jacobi svd (200 x 6x6)", svd_loop(nx._svd_small), svd_loop(nx._svd_small.py_func), lambda: nx._svd_batch_numpy(stack)
    yield "torus ascent (6 x 4x4, 8 starts)", (
        lambda: nx._torus_ascent(torus, starts, 200, 1e-13)
    ), (lambda: nx._torus_ascent.py_func(torus, starts, 200, 1e-13)), None
    yield "simplex l1 basis (200 rhs)", simplex_loop(nx._l1_basis), simplex_loop(nx._l1_basis.py_func), None


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if not USE_NUMBA:
        print("numba disabled (OSLAB_DISABLE_NUMBA set or numba missing): compiled column repeats the python path")
    rng = np.random.default_rng(0)
    print(f"{'kernel':36s} {'numba':>10s} {'python':>10s} {'numpy':>10s} {'speedup':>8s}")
    for name, jit_fn, py_fn, np_fn in cases(rng):
        jit_fn()
        tj = best_of(jit_fn, args.repeat)
        tp = best_of(py_fn, max(1, args.repeat // 2))
        tn = f"{best_of(np_fn, args.repeat) * 1e3:9.2f}ms" if np_fn else f"{'-':>11s}"
        print(f"{name:36s} {tj * 1e3:9.2f}ms {tp * 1e3:9.2f}ms {tn} {tp / tj:7.1f}x")


if __name__ == "__main__":
    main()
