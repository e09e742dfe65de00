"""Compare the compiled and pure-Python chain solvers.

    python benchmarks/bench_kernel.py [--repeat 3]
"""
import argparse
import time

import numpy as np

from mramsim import _pykernel, kernel
from mramsim.mtj import ParamDistribution, sample_params


def workload(n_cells=20, n_devices=7, seed=0):
    rng = np.random.default_rng(seed)
    dist = ParamDistribution()
    tables = [np.ascontiguousarray(np.stack([sample_params(dist, rng).as_array()
                                             for _ in range(n_devices)]))
              for _ in range(n_cells)]
    volts = np.concatenate([np.linspace(0, 3.0, 16), np.linspace(3.0, -1.5, 16)])
    return tables, volts


def run(solve, tables, volts, delta_i=1e-7):
    results = []
    for table in tables:
        state = np.zeros(len(table), dtype=np.uint8)
        for v in volts:
            results.append(solve(table, state, float(v), delta_i, 10 * len(table), 1e-2))
    return results


def best_of(solve, tables, volts, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = run(solve, tables, volts)
        times.append(time.perf_counter() - t0)
    return min(times), out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--cells", type=int, default=20)
    args = ap.parse_args()
    tables, volts = workload(args.cells)
    n = len(tables) * len(volts)
    t_py, out_py = best_of(_pykernel.solve_chain, tables, volts, 1)
    print(f"python   {t_py:8.3f} s  ({1e3 * t_py / n:.3f} ms/solve)")
    if kernel.BACKEND != "cython":
        print("cython   not built; run `pip install -e . --no-build-isolation`")
        return
    t_c, out_c = best_of(kernel.solve_chain, tables, volts, args.repeat)
    print(f"cython   {t_c:8.3f} s  ({1e3 * t_c / n:.3f} ms/solve)")
    print(f"speedup  {t_py / t_c:8.1f}x  identical={out_py == out_c}")


if __name__ == "__main__":
    main()
