"""Compare the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 3]
"""
import argparse
import timeit

import numpy as np

from diffinject import _backend
from diffinject.can_codec import FIG8_FRAME, encode_frame

BITS = np.array(encode_frame(FIG8_FRAME).bits, dtype=np.uint8)
N = len(BITS)
LINE = np.ones(N, dtype=np.uint8)
G = np.ones(N)
ALL = np.arange(N, dtype=np.int64)
RUNS = np.array([i for i in range(N) if i == 0 or BITS[i] != BITS[i - 1]], dtype=np.int64)


def cases(k):
    base = k.stream_base(1, 2)
    return {
        "fig8 independent, 1e6 trials": lambda: k.message_trials(base, 0, 1_000_000, ALL, LINE, BITS, G, 0.74, 0.0),
        "fig8 grouped, 1e6 trials": lambda: k.message_trials(base, 0, 1_000_000, RUNS, LINE, BITS, G, 0.74, 0.0),
        "fig8 easy (u=0.99), 2e5 trials": lambda: k.message_trials(base, 0, 200_000, ALL, LINE, BITS, G, 0.99, 0.0),
        "unit draws, 1e6": lambda: k.unit_draws(base, np.arange(1_000_000, dtype=np.uint64), 0),
        "hysteresis latch, 1e5 samples": lambda: k.latch_hysteresis(
            np.random.default_rng(0).uniform(0, 3, 100_000), 2.1, 0.9, 1),
    }


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    py = cases(_backend.python_kernels)
    cy = cases(_backend.compiled_kernels) if _backend.compiled_kernels else None
    print(f"{'kernel':34s} {'python [s]':>11s} {'compiled [s]':>13s} {'speedup':>8s}")
    for name, fn in py.items():
        tp = min(timeit.repeat(fn, number=1, repeat=args.repeat))
        if cy is None:
            print(f"{name:34s} {tp:11.4f} {'n/a':>13s} {'':>8s}")
            continue
        tc = min(timeit.repeat(cy[name], number=1, repeat=args.repeat))
        print(f"{name:34s} {tp:11.4f} {tc:13.4f} {tp / tc:7.1f}x")


if __name__ == "__main__":
    main()
