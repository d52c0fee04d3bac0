#!/usr/bin/env python3
"""Benchmark the coincidence engine: matching throughput vs stream size.

Generates pairs of homogeneous Poisson streams and times cross and
self-delayed counting; runtime should scale linearly in the event count
(the 1e7 x 1e7 case is the performance gate used by the acceptance suite).
"""

import argparse
import time

import numpy as np

from tpisim.coincidence import count_cross, count_self_delayed
from tpisim.events import EventStream


def make_timestamps(rng, n, mean_gap_ns):
    gaps = rng.exponential(mean_gap_ns, int(1.02 * n))
    return np.unique(np.cumsum(gaps).astype(np.int64))[:n]


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--max-exponent", type=int, default=7,
                        help="largest size 10^k to benchmark")
    parser.add_argument("--window-ns", type=float, default=10.0)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    rng = np.random.default_rng(args.seed)
    # warm the jit cache so compile time stays out of the measurements
    ts = make_timestamps(rng, 1000, 100.0)
    warm = EventStream("D1", ts, (ts[-1] + 1) / 1e9)
    count_cross(warm, EventStream("D2", ts, warm.duration_s), args.window_ns)
    count_self_delayed(warm, 60.0, args.window_ns)

    print(f"{'events':>12} {'cross_s':>10} {'self_s':>10} {'pairs':>10}")
    for k in range(5, args.max_exponent + 1):
        n = 10**k
        ta = make_timestamps(rng, n, 100.0)
        tb = make_timestamps(rng, n, 100.0)
        dur = (max(ta[-1], tb[-1]) + 1) / 1e9
        a = EventStream("D1", ta, dur)
        b = EventStream("D2", tb, dur)
        t0 = time.perf_counter()
        res = count_cross(a, b, args.window_ns)
        t_cross = time.perf_counter() - t0
        t0 = time.perf_counter()
        count_self_delayed(a, 60.0, args.window_ns)
        t_self = time.perf_counter() - t0
        print(f"{n:>12} {t_cross:>10.3f} {t_self:>10.3f} "
              f"{res.pair_count:>10}")


if __name__ == "__main__":
    main()
