"""Compare the compiled kernels against the pure-Python fallback.

    python benchmarks/bench_kernels.py [--graphs 300] [--repeat 3]

Also checks that both backends return identical results on every input.
"""
from __future__ import annotations

import argparse
import random
import time

import numpy as np

from hypograph import _pykernels
from hypograph.canon import _prepare

try:
    from hypograph import _ckernels
except ImportError:  # extension not built
    _ckernels = None


def random_environment(rng: random.Random, n: int) -> tuple[list[str], list[tuple[int, int, str]]]:
    tokens = [rng.choice("CCCNO") for _ in range(n)]
    edges = set()
    for v in range(1, n):
        edges.add((rng.randrange(v), v, rng.choice("sd")))
    for _ in range(n // 3):
        u, v = sorted(rng.sample(range(n), 2))
        if not any(a == u and b == v for a, b, _ in edges):
            edges.add((u, v, rng.choice("sd")))
    return tokens, sorted(edges)


def bench_canonical(backend, inputs, repeat: int) -> tuple[float, list]:
    best = float("inf")
    out = []
    for _ in range(repeat):
        t = time.perf_counter()
        out = [backend.canonical_search(n, colors, edges) for n, colors, edges in inputs]
        best = min(best, time.perf_counter() - t)
    return best, out


def bench_split(backend, args, repeat: int) -> tuple[float, tuple]:
    best = float("inf")
    out = None
    for _ in range(repeat):
        t = time.perf_counter()
        out = backend.split_stats(*args)
        best = min(best, time.perf_counter() - t)
    return best, out


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--graphs", type=int, default=300)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    if _ckernels is None:
        print("compiled extension not available; nothing to compare")
        return 1

    rng = random.Random(args.seed)
    inputs = []
    for _ in range(args.graphs):
        tokens, edges = random_environment(rng, rng.randint(4, 24))
        colors, ranked, _ = _prepare(tokens, edges)
        inputs.append((len(tokens), colors, ranked))

    t_py, r_py = bench_canonical(_pykernels, inputs, args.repeat)
    t_c, r_c = bench_canonical(_ckernels, inputs, args.repeat)
    same = all(tuple(a[0]) == tuple(b[0]) and list(a[1]) == list(b[1]) for a, b in zip(r_py, r_c))
    print(f"canonical_search  {args.graphs} graphs   python {t_py:8.4f}s  compiled {t_c:8.4f}s  "
          f"speedup {t_py / t_c:6.1f}x  identical={same}")

    nrng = np.random.default_rng(args.seed)
    n_samples, n_cols, n_nodes = 2000, 5000, 8
    support = nrng.integers(5, 200, size=n_cols)
    colptr = np.zeros(n_cols + 1, dtype=np.int64)
    np.cumsum(support, out=colptr[1:])
    rowidx = np.concatenate([np.sort(nrng.choice(n_samples, s, replace=False)) for s in support]).astype(np.int32)
    colidx = np.repeat(np.arange(n_cols, dtype=np.int32), support)
    node_of = nrng.integers(-1, n_nodes, size=n_samples).astype(np.int32)
    residuals = nrng.normal(size=n_samples)
    split_args = (colptr, rowidx, colidx, node_of, residuals, n_nodes)
    t_py, s_py = bench_split(_pykernels, split_args, args.repeat)
    t_c, s_c = bench_split(_ckernels, split_args, args.repeat)
    same = np.array_equal(s_py[0], s_c[0]) and np.array_equal(s_py[1], s_c[1])
    print(f"split_stats       {n_cols} columns  python {t_py:8.4f}s  compiled {t_c:8.4f}s  "
          f"speedup {t_py / t_c:6.1f}x  identical={same}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
