"""Time the compiled kernels against the numpy fallback.

Usage::

    python3 benchmarks/bench_kernels.py [--repeat 3] [--paths 2048]

Prints one line per kernel with the best wall time of each backend, the
speedup and whether the outputs agree.
"""

import argparse
import time

import numpy as np

from qcl import _kernels_py
from qcl.chains import _joint_table, _radial_table, kernel_joint_q

try:
    from qcl import _kernels as _compiled
except ImportError:
    _compiled = None


def best_time(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def cases(paths, rng):
    n = 2500
    u = rng.random((paths, n))
    up = _radial_table(n)
    yield "radial_walk", (u, up, 0, False), "exact"

    cum, off = _joint_table(kernel_joint_q(0.5, flip_sign=True), 0, 0, 400)
    u2 = rng.random((paths, 400))
    yield "joint_walk", (u2, cum, 0, 0, off, True), "exact"

    m = 1000
    inc = rng.standard_normal((3, paths // 2, m)) * np.sqrt(1e-3)
    X = np.pad(np.cumsum(inc[0], axis=1), ((0, 0), (1, 0)))
    yield "bj_lambda", (X, inc[1], inc[2], 10.0), "close"


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--paths", type=int, default=2048)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    if _compiled is None:
        print("compiled extension not built; only the numpy backend is available")
    rng = np.random.default_rng(args.seed)
    print(f"{'kernel':<12} {'numpy [s]':>10} {'cython [s]':>11} {'speedup':>8}  agree")
    for name, call_args, mode in cases(args.paths, rng):
        t_py, out_py = best_time(lambda: getattr(_kernels_py, name)(*call_args), args.repeat)
        if _compiled is None:
            print(f"{name:<12} {t_py:10.4f} {'-':>11} {'-':>8}  -")
            continue
        t_c, out_c = best_time(lambda: getattr(_compiled, name)(*call_args), args.repeat)
        if mode == "exact":
            agree = bool(np.array_equal(out_py, out_c))
        else:
            agree = bool(np.allclose(out_py, out_c, rtol=1e-12, atol=1e-12))
        print(f"{name:<12} {t_py:10.4f} {t_c:11.4f} {t_py / t_c:8.1f}  {agree}")


if __name__ == "__main__":
    main()
