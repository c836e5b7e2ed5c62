#!/usr/bin/env python3
"""Compare the numba kernels against the pure-numpy fallback.

Runs the same pursuit and orbit workloads under both backends, checks the
results agree bit for bit and prints wall times. Compile time is excluded
by a warm-up call.

    python benchmarks/bench_kernels.py [--repeat 3]
"""

import argparse
import time

import numpy as np

from geoentropy import kernels, zoo
from geoentropy.entropy import flow_map
from geoentropy.manifold import build_torus
from geoentropy.paths import build_move_graph


def _pairs(n, k, rng):
    xs = rng.integers(0, n, size=k)
    ys = rng.integers(0, n, size=k)
    return xs.astype(np.int64), ys.astype(np.int64)


def workloads(rng):
    g = zoo.build("riemannian-torus", build_torus(8, 2))
    mg = build_move_graph(g, 1.0, 3)
    table = g.manifold.metric_table()
    xs, ys = _pairs(mg.n_points, 400, rng)
    yield "exhaustive torus(8,2) T=3, 400 pairs", lambda: kernels.delta_batch(xs, ys, mg, mg, table, 3, 0, 0)

    cat = zoo.build("catmap-suspension", n=24, levels=4)
    cg = build_move_graph(cat, 2.0, 1)
    ctable = cat.manifold.metric_table()
    cx, cy = _pairs(cg.n_points, 2000, rng)
    yield "beam:64 catmap n=24, 2000 pairs", lambda: kernels.delta_batch(cx, cy, cg, cg, ctable, 1, 64, 7)

    m, X = zoo.vector_field_of("catmap-suspension", n=24, levels=4)
    fmap = flow_map(X, m, 0.25)
    ii, jj = _pairs(m.n_points, 20000, rng)
    yield "orbit max catmap n=24, 12 steps, 20000 pairs", lambda: kernels.orbit_max(fmap, 12, ctable, ii, jj)


def _time(fn, repeat):
    fn()
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    rng = np.random.default_rng(0)
    print(f"{'workload':48s} {'numba s':>9s} {'numpy s':>9s} {'speedup':>8s} agree")
    for name, fn in workloads(rng):
        times, outs = {}, {}
        for be in ("numba", "numpy"):
            prev = kernels.use_backend(be)
            try:
                times[be], outs[be] = _time(fn, args.repeat)
            finally:
                kernels.use_backend(prev)
        a, b = outs["numba"], outs["numpy"]
        if isinstance(a, tuple):
            agree = all(np.array_equal(np.asarray(u), np.asarray(v)) for u, v in zip(a, b))
        else:
            agree = np.array_equal(a, b)
        speedup = times["numpy"] / times["numba"]
        print(f"{name:48s} {times['numba']:9.4f} {times['numpy']:9.4f} {speedup:8.1f} {agree}")


if __name__ == "__main__":
    main()
