"""Benchmark the compiled kernel core against the NumPy fallback.

Times the two hot surface scans (Gram fill and the sup|K^n - K| tensor
scan) for each closed-form kernel.  Run from the repository root:

    python benchmarks/bench_core.py [--gram-n 2000] [--sup-n 600] [--sup-ref 8]
"""

import argparse
import time

import numpy as np

import gpmean._backend as backend
import gpmean._core_np as core_np
from gpmean import (
    BrownianBridge,
    FractionalBrownian,
    OrnsteinUhlenbeck,
    Wiener,
    uniform_grid,
)

KERNELS = [
    Wiener(),
    BrownianBridge(),
    OrnsteinUhlenbeck(0.5, 1.0),
    FractionalBrownian(0.7),
]


def best_of(fn, repeats=3):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        result = fn()
        times.append(time.perf_counter() - t0)
    return min(times), result


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--gram-n", type=int, default=2000)
    parser.add_argument("--sup-n", type=int, default=600)
    parser.add_argument("--sup-ref", type=int, default=8)
    args = parser.parse_args()

    core = backend.compiled()
    if core is None:
        print("compiled extension unavailable; benchmarking fallback only")

    grid_g = uniform_grid(args.gram_n)
    grid_s = uniform_grid(args.sup_n)
    nodes = np.ascontiguousarray(grid_g.nodes)
    edges = np.ascontiguousarray(grid_s.t)

    print(f"gram fill: n={args.gram_n}; sup scan: n={args.sup_n}, "
          f"refinement={args.sup_ref} "
          f"({(args.sup_n * args.sup_ref) ** 2 / 2:.2e} kernel pairs)")
    print(f"{'kernel':<40}{'op':<6}{'numpy':>10}{'compiled':>10}{'speedup':>9}")
    for kernel in KERNELS:
        kind, a, b = kernel.closed_form
        t_np, ref = best_of(lambda: core_np.gram_from_callable(kernel, nodes))
        if core is not None:
            t_cy, val = best_of(lambda: core.gram_closed(kind, a, b, nodes))
            assert np.allclose(val, ref, rtol=1e-13)
            print(f"{kernel.name():<40}{'gram':<6}{t_np:>9.3f}s{t_cy:>9.3f}s"
                  f"{t_np / t_cy:>8.1f}x")
        else:
            print(f"{kernel.name():<40}{'gram':<6}{t_np:>9.3f}s{'-':>10}{'-':>9}")

        t_np, ref = best_of(
            lambda: core_np.sup_error_from_callable(kernel, edges, args.sup_ref)
        )
        if core is not None:
            t_cy, val = best_of(
                lambda: core.sup_error_closed(kind, a, b, edges, args.sup_ref)
            )
            assert abs(val - ref) < 1e-12 * (1 + abs(ref))
            print(f"{kernel.name():<40}{'sup':<6}{t_np:>9.3f}s{t_cy:>9.3f}s"
                  f"{t_np / t_cy:>8.1f}x")
        else:
            print(f"{kernel.name():<40}{'sup':<6}{t_np:>9.3f}s{'-':>10}{'-':>9}")


if __name__ == "__main__":
    main()
