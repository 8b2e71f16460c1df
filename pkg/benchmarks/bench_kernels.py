"""Time the compiled kernels against the pure-Python fallback.

    python3 benchmarks/bench_kernels.py [--repeat 3] [--n 2000]

Each kernel runs on identical inputs under both backends; the table shows
the best wall time of ``--repeat`` runs and whether the outputs agree.
"""

from __future__ import annotations

import argparse
import sys
import time

import numpy as np

from playstyle._kernels import available_backends


def _best(fn, repeat):
    best, out = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def cases(n: int, seed: int):
    rng = np.random.default_rng(seed)
    X = rng.random((n, 21))
    C = rng.random((12, 21))
    order = rng.permutation(n).astype(np.int64)
    yield "nearest_centroid", (X, C), lambda a, b: all(np.array_equal(p, q) for p, q in zip(a, b))
    yield (
        "dpmeans_sweep",
        (X, order, X[:1].copy(), 0.6**2),
        lambda a, b: np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1]),
    )
    counts = rng.multinomial(5, np.full(8, 1 / 8), size=(n, 2)).reshape(n, 16).astype(np.float64)
    w = np.r_[rng.normal(size=8), -rng.normal(size=8)] * 0.3
    y = (rng.random(n) < 1 / (1 + np.exp(-(counts @ w)))).astype(np.float64)
    X1 = np.hstack([counts, np.ones((n, 1))])
    orders = np.stack([rng.permutation(n) for _ in range(10)]).astype(np.int64)
    yield (
        "sga_epochs",
        (X1, y, np.zeros(17), orders, 0.05),
        lambda a, b: np.allclose(a, b, rtol=1e-9, atol=1e-12),
    )
    ys = 2.0 * y - 1.0
    yield (
        "smo",
        (counts, ys, 1.0, 1e-3, 1e-10, 200, order, False),
        lambda a, b: np.array_equal(a[0], b[0]) and a[1] == b[1],
    )


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=2000, help="rows per input")
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    backends = available_backends()
    if "cython" not in backends:
        print("compiled kernels are not built; only the Python fallback is available", file=sys.stderr)
        return 1
    py, cy = backends["python"], backends["cython"]
    print(f"{'kernel':<18}{'python s':>12}{'cython s':>12}{'speedup':>10}  agree")
    for name, inputs, agree in cases(args.n, args.seed):
        t_py, out_py = _best(lambda: getattr(py, name)(*inputs), args.repeat)
        t_cy, out_cy = _best(lambda: getattr(cy, name)(*inputs), args.repeat)
        print(f"{name:<18}{t_py:>12.4f}{t_cy:>12.4f}{t_py / t_cy:>9.1f}x  {agree(out_py, out_cy)}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
