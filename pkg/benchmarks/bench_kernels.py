"""Compare the numba and numpy kernels on token-id arrays of summary-like lengths.

    python benchmarks/bench_kernels.py [--repeats 200]
"""
import argparse
import timeit

import numpy as np

from todsumkit import _kernels


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeats", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    if not _kernels.HAS_NUMBA:
        raise SystemExit("numba is not installed; install the 'fast' extra to compare backends")

    rng = np.random.default_rng(args.seed)
    rows = []
    for length in (10, 50, 200, 1000):
        a = rng.integers(0, max(length // 2, 2), length)
        b = rng.integers(0, max(length // 2, 2), length)
        # warm up the JIT so compilation is not timed
        _kernels.lcs_length_numba(a, b)
        _kernels.clipped_overlap_numba(a, b)
        assert _kernels.lcs_length_numpy(a, b) == _kernels.lcs_length_numba(a, b)
        for name, np_fn, nb_fn in (
            ("lcs", _kernels.lcs_length_numpy, _kernels.lcs_length_numba),
            ("overlap", _kernels.clipped_overlap_numpy, _kernels.clipped_overlap_numba),
        ):
            t_np = min(timeit.repeat(lambda: np_fn(a, b), number=args.repeats, repeat=3)) / args.repeats
            t_nb = min(timeit.repeat(lambda: nb_fn(a, b), number=args.repeats, repeat=3)) / args.repeats
            rows.append((name, length, t_np * 1e6, t_nb * 1e6, t_np / t_nb))

    print(f"{'kernel':<8} {'len':>5} {'numpy us':>10} {'numba us':>10} {'speedup':>8}")
    for name, length, t_np, t_nb, ratio in rows:
        print(f"{name:<8} {length:>5} {t_np:>10.1f} {t_nb:>10.1f} {ratio:>7.1f}x")


if __name__ == "__main__":
    main()
