"""Time the numba kernels against the pure-numpy fallback.

    python benchmarks/bench_kernels.py [--p 250] [--repeat 5]

Workloads mirror one simulation replication at p = n = 250: the Sure
diagonal sums, one CV fold's operator-norm and row-sum loss curves, and one
operator norm of a banded error matrix. Reports the best of ``--repeat``
wall-clock timings after a warm-up call (numba compiles on first use).
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from bandsure import _accel, kernels
from bandsure.bandwidth import sure_constants
from bandsure.datagen import make_rng, mvn_sample
from bandsure.estimators import PopulationModel
from bandsure.matcore import cholesky


def _best(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--p", type=int, default=250)
    ap.add_argument("--n", type=int, default=250)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    sigma = np.asarray(PopulationModel(args.p, alpha=0.1).sigma())
    x = mvn_sample(cholesky(sigma), args.n, make_rng(0))
    cut = args.n - args.n // 10
    train, test = np.cov(x[:cut].T), np.cov(x[cut:].T)
    shat = np.cov(x.T)
    c = sure_constants(args.n)
    err = kernels.band(shat, 20) - sigma
    start = kernels.start_block(args.p)

    work = {
        "diag_sums": lambda: kernels.diag_sums(shat, c.a, c.b, c.c, c.d),
        "l11_curve": lambda: kernels.l11_curve(train, test),
        "op_curve": lambda: kernels.op_curve(train, test, 1e-8, 10_000),
        "power_iter": lambda: kernels.power_iter(err, err, start, 1e-8, 10_000),
    }
    print(f"p={args.p} n={args.n} best of {args.repeat}")
    print(f"{'kernel':<12}{'numba [s]':>12}{'numpy [s]':>12}{'speedup':>10}")
    prev = _accel.get_backend()
    try:
        for name, fn in work.items():
            t = {}
            for backend in ("numba", "numpy"):
                _accel.set_backend(backend)
                t[backend] = _best(fn, args.repeat)
            print(f"{name:<12}{t['numba']:>12.4f}{t['numpy']:>12.4f}{t['numpy'] / t['numba']:>9.1f}x")
    finally:
        _accel.set_backend(prev)


if __name__ == "__main__":
    main()
