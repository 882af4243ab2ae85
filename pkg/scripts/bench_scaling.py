"""Fast-path SND wall time against n with a fixed number of changed users."""
import argparse
import math
import time

from snd.cli import bench_states
from snd.measure import fast_snd
from snd.simgen import gen_scale_free


def time_fast(n, n_delta, repeats, seed=0):
    net = gen_scale_free(n, seed=seed)
    g1, g2 = bench_states(net, n_delta, 0.1, seed)
    fast_snd(g1, g2, net)  # compile and warm caches
    best = math.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fast_snd(g1, g2, net)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sizes", default="10000,20000,40000,80000")
    ap.add_argument("--ndelta", type=int, default=200)
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args()
    prev = None
    for n in (int(x) for x in args.sizes.split(",")):
        t = time_fast(n, args.ndelta, args.repeats)
        ratio = "" if prev is None else f" ratio={t / prev:.2f}"
        print(f"n={n:6d} seconds={t:.4f}{ratio}")
        prev = t


if __name__ == "__main__":
    main()
