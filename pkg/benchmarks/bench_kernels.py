"""Time the numba kernels against their numpy twins.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--seed 0]
"""
import argparse
import time

import numpy as np

from cardsim import kernels
from cardsim._accel import numba


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def cases(rng):
    a = rng.normal(size=(50, 120))
    x = np.vstack([rng.normal(c, 0.5, size=(50, 33)) for c in range(7)]).astype(np.float64)
    init = x[rng.choice(len(x), 7, replace=False)].copy()
    labels = rng.integers(7, size=len(x)).astype(np.int64)
    labels[:7] = np.arange(7)
    # a 50-item, 33-participant study: membership columns with ~130 rows
    items = (rng.random((50, 132)) < 0.25).astype(np.float64)
    item_labels = (np.arange(50) % 7).astype(np.int64)
    return {
        "jacobi 120x50": lambda k: k[0](a.T.copy(), 1e-10, 100),
        "lloyd 350x33 k=7": lambda k: k[1](x, init, 300, 1e-4),
        "silhouette 350x33": lambda k: k[2](x, labels, 7),
        "silhouette 50x132": lambda k: k[2](items, item_labels, 7),
    }


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args(argv)
    backends = ["numpy"] + (["numba"] if numba is not None else [])
    table = cases(np.random.default_rng(args.seed))
    print(f"{'kernel':<20}" + "".join(f"{b:>12}" for b in backends) + ("     speedup" if len(backends) > 1 else ""))
    for name, run in table.items():
        row = []
        for b in backends:
            impl = kernels.BACKEND_KERNELS[b]
            run(impl)  # compile / warm caches
            row.append(best_of(lambda: run(impl), args.repeat))
        line = f"{name:<20}" + "".join(f"{t * 1e3:>10.2f}ms" for t in row)
        if len(row) > 1:
            line += f"{row[0] / row[1]:>11.1f}x"
        print(line)


if __name__ == "__main__":
    main()
