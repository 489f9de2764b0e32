"""Compare the compiled and pure-Python kernels on the per-sample scoring loop.

    python3 benchmarks/bench_kernels.py --n 2000 4000 --k 8 --threads 1

Each configuration times ``score_samples`` (distances, Gram matrix,
eigenscores and meta rows for every sample) and checks that both backends
return bit-identical results.
"""

import argparse
import json
import time

import numpy as np

from metaviz import kernels


def candidates(n, K, d, seed):
    rng = np.random.default_rng(seed)
    base = rng.standard_normal((n, d))
    return np.stack([base + 0.3 * rng.standard_normal((n, d)) for _ in range(K)])


def timed(be, C, threads, repeat):
    best, out = np.inf, None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = be.score_samples(C, threads, True)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--n", type=int, nargs="+", default=[500, 1000, 2000])
    ap.add_argument("--k", type=int, default=8)
    ap.add_argument("--d", type=int, default=2)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    names = kernels.available()
    rows = []
    for n in args.n:
        C = candidates(n, args.k, args.d, args.seed)
        res = {"n": n, "K": args.k}
        outs = {}
        for name in names:
            t, outs[name] = timed(kernels.get(name), C, args.threads, args.repeat)
            res[name] = t
        if len(outs) == 2:
            a, b = outs["compiled"], outs["python"]
            res["speedup"] = res["python"] / res["compiled"]
            res["identical"] = bool(np.array_equal(a[0], b[0]) and np.array_equal(a[4], b[4]))
        rows.append(res)
        print(json.dumps(res), flush=True)
    return rows


if __name__ == "__main__":
    main()
