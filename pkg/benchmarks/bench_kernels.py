"""Benchmark the numba kernels against their pure-numpy fallbacks.

Run: python benchmarks/bench_kernels.py --n 5000 --clusters 64 --dim 10 --repeats 50

The same comparison can be driven end to end by timing any CLI command with
TEXTRKM_NO_NUMBA=1 versus unset.
"""
import argparse
import time

import numpy as np

from textrkm import kernels


def time_fn(fn, args, repeats):
    fn(*args)  # warm-up (JIT compile / cache touch)
    start = time.perf_counter()
    for _ in range(repeats):
        out = fn(*args)
    return (time.perf_counter() - start) / repeats * 1000.0, out


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n", type=int, default=5000, help="number of points")
    parser.add_argument("--clusters", type=int, default=64)
    parser.add_argument("--dim", type=int, default=10)
    parser.add_argument("--repeats", type=int, default=50)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    rng = np.random.default_rng(args.seed)
    x = np.ascontiguousarray(rng.normal(size=(args.n, args.dim)))
    c = np.ascontiguousarray(rng.normal(size=(args.clusters, args.dim)))

    if kernels.assign_euclidean_numba is None:
        print("numba unavailable or disabled (TEXTRKM_NO_NUMBA); nothing to compare")
        return

    print(f"n={args.n} clusters={args.clusters} dim={args.dim} repeats={args.repeats}")
    pairs = [
        ("assign_euclidean", kernels.assign_euclidean_numba, kernels.assign_euclidean_numpy, (x, c)),
        ("assign_cosine", kernels.assign_cosine_numba, kernels.assign_cosine_numpy, (x, c)),
    ]
    assign, _ = kernels.assign_euclidean_numpy(x, c)
    pairs.append(
        ("centroid_sums", kernels.centroid_sums_numba, kernels.centroid_sums_numpy, (x, assign, args.clusters))
    )

    print(f"{'kernel':<18} {'numba ms':>10} {'numpy ms':>10} {'speedup':>8}  outputs")
    for name, fn_nb, fn_np, fargs in pairs:
        t_nb, out_nb = time_fn(fn_nb, fargs, args.repeats)
        t_np, out_np = time_fn(fn_np, fargs, args.repeats)
        agree = all(np.allclose(a, b, rtol=0, atol=1e-9) for a, b in zip(out_nb, out_np))
        print(
            f"{name:<18} {t_nb:>10.3f} {t_np:>10.3f} {t_np / t_nb:>7.2f}x  "
            f"{'agree' if agree else 'DIFFER'}"
        )


if __name__ == "__main__":
    main()
