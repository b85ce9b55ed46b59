"""Compare the compiled and pure-Python Monte Carlo kernels.

    python benchmarks/bench_kernels.py [--trials N] [--repeat R]

Both backends run the same trials and must return bitwise identical
welfare arrays; the table reports the best of ``--repeat`` timings.
"""

import argparse
import time

import numpy as np

from matchbench import kernels
from matchbench.instance import gen_random


def best_time(fn, repeat):
    best, result = float("inf"), None
    for _ in range(repeat):
        start = time.perf_counter()
        result = fn()
        best = min(best, time.perf_counter() - start)
    return best, result


def cases(trials):
    norm = gen_random(50, "normalized", seed=1).values
    dich = gen_random(50, "dichotomous", 0.3, seed=2).values
    return [
        ("rsd n=50 normalized", lambda b: b.rsd_welfare(norm, 0, 0, trials)),
        ("rsd n=50 dichotomous", lambda b: b.rsd_welfare(dich, 0, 0, trials)),
        ("rsd-star n=50", lambda b: b.rsd_star_welfare(dich, dich, 0, 0, trials)),
        ("fact k=1000 z=1e6", lambda b: b.fact_welfare(1000, 1_000_000, 0, 0, max(trials // 10, 1))),
    ]


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--trials", type=int, default=2000)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()
    if kernels.compiled_backend is None:
        raise SystemExit("compiled extension not built; run `pip install -e . --no-build-isolation` first")
    print(f"{'kernel':<24}{'python s':>10}{'compiled s':>12}{'speedup':>10}")
    for name, fn in cases(args.trials):
        t_py, r_py = best_time(lambda: fn(kernels.python_backend), args.repeat)
        t_cy, r_cy = best_time(lambda: fn(kernels.compiled_backend), args.repeat)
        assert np.array_equal(r_py, r_cy), f"backends disagree on {name}"
        print(f"{name:<24}{t_py:>10.3f}{t_cy:>12.4f}{t_py / t_cy:>9.0f}x")


if __name__ == "__main__":
    main()
