"""Compiled vs NumPy kernels on branch sets of growing size.

    python3 benchmarks/bench_kernels.py [--sizes 64 256 1024] [--repeat 5]

Prints one row per (kernel, K) with the best-of-repeat time for each backend
and the speed-up. Inputs mimic a syndrome-extraction state: a few qubit basis
strings, each carrying many coherent-amplitude branches over several modes.
"""

import argparse
import timeit

import numpy as np

from qubus_qec import kernels


def branch_data(K, m=4, q=6, seed=0):
    rng = np.random.default_rng(seed)
    bits = rng.integers(0, 2, size=(K, q)).astype(np.uint8)
    keys = bits @ (1 << np.arange(q, dtype=np.int64))
    amps = (rng.normal(size=(K, m)) + 1j * rng.normal(size=(K, m))) * 2
    # duplicate a quarter of the rows so grouping has work to do
    dup = rng.choice(K, K // 4, replace=False)
    src = rng.choice(K, K // 4)
    bits[dup], amps[dup], keys[dup] = bits[src], amps[src], keys[src]
    coeffs = rng.normal(size=K) + 1j * rng.normal(size=K)
    groups = rng.integers(0, 4, size=K)
    return bits, keys, amps, coeffs, groups


def bench(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[64, 256, 1024, 2048])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    names = kernels.available_backends()
    if "cython" not in names:
        print("compiled kernels not built; only the NumPy backend is available")
    print(f"{'kernel':<16}{'K':>6}" + "".join(f"{n + ' [ms]':>16}" for n in names) + f"{'speed-up':>10}")
    for K in args.sizes:
        bits, keys, amps, coeffs, groups = branch_data(K)
        cases = {
            "gram_reduce": lambda: kernels.gram_reduce(keys, amps, coeffs, groups, 4, skip=0),
            "group_branches": lambda: kernels.group_branches(bits, amps, 1e-9),
        }
        for label, fn in cases.items():
            times = {}
            for name in names:
                prev = kernels.set_backend(name)
                try:
                    fn()
                    times[name] = bench(fn, args.repeat)
                finally:
                    kernels.set_backend(prev)
            speed = times["python"] / times["cython"] if "cython" in times else float("nan")
            print(f"{label:<16}{K:>6}" + "".join(f"{times[n] * 1e3:>16.3f}" for n in names) + f"{speed:>9.1f}x")


if __name__ == "__main__":
    main()
