"""Time the numba kernels against their numpy twins and check they agree.

Usage: ``python3 benchmarks/bench_kernels.py [--repeat N]``.  Each row reports
the best-of-N wall time for both implementations (after one warm-up call, so
numba compilation is excluded) and the maximum absolute difference of their
outputs.
"""

import argparse
import time

import numpy as np

from epig.kernels import gp, scoring, tree


def _best(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def _max_diff(a, b):
    if isinstance(a, tuple):
        return max(_max_diff(x, y) for x, y in zip(a, b))
    return float(np.max(np.abs(np.asarray(a, dtype=np.float64) - np.asarray(b, dtype=np.float64))))


def cases(rng):
    P = rng.dirichlet(np.ones(4), size=(2000, 200))
    Q = rng.dirichlet(np.ones(4), size=(50, 200))
    p1 = rng.random((5000, 500))
    yield "bald (N=2000, K=200, C=4)", lambda: scoring.bald_batch_numba(P), lambda: scoring.bald_batch_numpy(P)
    yield "entropy (N=2000, K=200, C=4)", lambda: scoring.entropy_batch_numba(P), lambda: scoring.entropy_batch_numpy(P)
    yield "epig (N=2000, M=50, K=200, C=4)", lambda: scoring.epig_batch_numba(P, Q), lambda: scoring.epig_batch_numpy(P, Q)
    yield "binary bald (N=5000, K=500)", lambda: scoring.bald_binary_numba(p1), lambda: scoring.bald_binary_numpy(p1)

    n = 40
    x = rng.standard_normal((n, 2))
    k = 10.0 * np.exp(-0.5 * ((x[:, None] - x[None]) ** 2).sum(-1)) + 1e-5 * np.eye(n)
    chol = np.linalg.cholesky(k)
    signs = np.where(rng.random(n) < 0.5, -1.0, 1.0)
    gx, gw = gp.gauss_hermite(32)
    mu, raw = np.zeros(n), np.zeros((n, n))
    yield (
        f"GP ELBO training (n={n}, 2000 steps)",
        lambda: gp.train_numba(mu.copy(), raw.copy(), chol, signs, gx, gw, 2000, 0.005, 0.95),
        lambda: gp.train_numpy(mu.copy(), raw.copy(), chol, signs, gx, gw, 2000, 0.005, 0.95),
    )

    xt = rng.standard_normal((500, 5))
    yt = rng.integers(0, 3, size=500)
    rows = rng.integers(0, 500, size=500)
    keys = rng.random((2 * 500 + 1, 5))
    yield (
        "tree growth (n=500, D=5, C=3)",
        lambda: tree.grow_tree_numba(xt, yt, 3, rows, keys, 2),
        lambda: tree.grow_tree_numpy(xt, yt, 3, rows, keys, 2),
    )


def main(argv=None):
    ap = argparse.ArgumentParser(description="numba vs numpy kernel timings")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    rng = np.random.default_rng(0)
    print(f"{'kernel':<40} {'numba [s]':>10} {'numpy [s]':>10} {'speedup':>8} {'max |diff|':>11}")
    for name, fast, slow in cases(rng):
        diff = _max_diff(fast(), slow())
        t_fast = _best(fast, args.repeat)
        t_slow = _best(slow, args.repeat)
        print(f"{name:<40} {t_fast:>10.4f} {t_slow:>10.4f} {t_slow / t_fast:>7.1f}x {diff:>11.2e}")


if __name__ == "__main__":
    main()
