"""Time the compiled graph kernels against the pure-Python fallback.

    python benchmarks/bench_kernels.py [--n 10000] [--repeat 5]

Prints one line per kernel with the best-of-``repeat`` time for each
backend and the speedup.  Both backends are checked for equal output first.
"""

import argparse
import time

import numpy as np

from propnet import kernels
from propnet.routing import tiebreak_priority
from propnet.topology import GenParams, generate_hybrid


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=10000)
    ap.add_argument("--ncon", type=int, default=8)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--transactions", type=int, default=200)
    args = ap.parse_args()

    cy, py = kernels.compiled_backend, kernels.python_backend
    if cy is None:
        raise SystemExit("compiled kernels are not available; build with `pip install --no-build-isolation -e .`")

    g = generate_hybrid(GenParams(args.n, args.ncon, rng_seed=1))
    ip, ix = g.indptr, g.indices
    pri = tiebreak_priority(g.n_nodes, 2)
    parent, depth = cy.gradient_tree(ip, ix, 0, pri)
    rng = np.random.default_rng(3)
    clients = rng.integers(1, g.n_nodes, size=args.transactions).tolist()
    failed = (rng.random(g.n_nodes) < 0.3).astype(np.uint8)
    failed[0] = 0
    sources = rng.integers(0, g.n_nodes, size=20)

    cases = {
        "bfs": lambda b: b.bfs(ip, ix, 0),
        "gradient_tree": lambda b: b.gradient_tree(ip, ix, 0, pri),
        "distance_sum(20 src)": lambda b: b.distance_sum(ip, ix, sources),
        f"forward x{args.transactions}": lambda b: [
            b.forward_transaction(ip, ix, parent, depth, pri, c, 0, args.ncon, failed) for c in clients],
    }
    print(f"graph: N={g.n_nodes} edges={g.n_edges}  (best of {args.repeat})")
    print(f"{'kernel':<22}{'python s':>12}{'cython s':>12}{'speedup':>10}")
    for name, fn in cases.items():
        a, b = fn(py), fn(cy)
        if name.startswith("forward"):
            assert [tuple(map(int, x)) for x in a] == [tuple(map(int, x)) for x in b], name
        elif isinstance(a, tuple):
            assert all(np.array_equal(x, y) for x, y in zip(a, b)), name
        else:
            assert np.array_equal(a, b), name
        tp, tc = best_of(lambda: fn(py), args.repeat), best_of(lambda: fn(cy), args.repeat)
        print(f"{name:<22}{tp:>12.5f}{tc:>12.5f}{tp / tc:>9.1f}x")


if __name__ == "__main__":
    main()
