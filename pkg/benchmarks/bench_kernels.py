#!/usr/bin/env python3
"""Benchmark the compiled kernels against the numpy fallback.

Usage: python benchmarks/bench_kernels.py [--sizes 250,1000,4000,16000]
"""

import argparse
import time

import numpy as np

from voronoiperc.geometry import Scene
from voronoiperc.kernels import _pyker

try:
    from voronoiperc.kernels import _cyker
except ImportError:
    _cyker = None


def timeit(fn, reps=5):
    best = float("inf")
    for _ in range(reps):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_size(n, rng):
    xy = rng.random((n, 2))
    sc = Scene(xy)
    indptr, indices, edges = sc.indptr, sc.indices, sc.edges
    queries = rng.random((max(4096, n), 2))
    u = edges[:, 0].copy()
    v = edges[:, 1].copy()

    cases = {
        "nearest_sites": lambda k: k.nearest_sites(xy, queries),
        "edge_rect_lengths": lambda k: k.edge_rect_lengths(
            xy, indptr, indices, edges, 0.0, 1.0, 0.0, 1.0),
        "segment_cell_lengths": lambda k: k.segment_cell_lengths(
            xy, indptr, indices, 0.5, 0.0, 0.5, 1.0),
        "clip_cells": lambda k: k.clip_cells(xy, indptr, indices),
        "label_components": lambda k: k.label_components(n, u, v),
    }
    rows = []
    for name, fn in cases.items():
        t_py = timeit(lambda: fn(_pyker))
        if _cyker is not None:
            t_cy = timeit(lambda: fn(_cyker))
            rows.append((name, t_py, t_cy, t_py / t_cy))
        else:
            rows.append((name, t_py, float("nan"), float("nan")))
    return rows


def bench_crossing(n, rng):
    """End-to-end crossing decision under each backend."""
    import importlib
    import os

    from voronoiperc import Rect, sample_configuration

    def run(backend):
        os.environ["VORONOIPERC_BACKEND"] = backend
        import voronoiperc.crossing
        import voronoiperc.kernels
        importlib.reload(voronoiperc.kernels)
        importlib.reload(voronoiperc.crossing)
        g = np.random.default_rng(0)
        cfgs = [sample_configuration(n, 0.5, g) for _ in range(10)]
        t0 = time.perf_counter()
        for cfg in cfgs:
            voronoiperc.crossing.has_blue_horizontal_crossing(cfg, Rect.unit())
        return (time.perf_counter() - t0) / len(cfgs)

    t_py = run("python")
    t_cy = run("compiled") if _cyker is not None else float("nan")
    os.environ.pop("VORONOIPERC_BACKEND", None)
    import voronoiperc.crossing
    import voronoiperc.kernels
    importlib.reload(voronoiperc.kernels)
    importlib.reload(voronoiperc.crossing)
    return t_py, t_cy


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--sizes", default="250,1000,4000,16000")
    args = ap.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]
    rng = np.random.default_rng(7)
    if _cyker is None:
        print("compiled backend unavailable; timing the fallback only")
    print(f"{'kernel':<22} {'n':>6} {'python':>10} {'compiled':>10} {'speedup':>8}")
    for n in sizes:
        for name, t_py, t_cy, ratio in bench_size(n, rng):
            print(f"{name:<22} {n:>6} {t_py * 1e3:>9.2f}ms {t_cy * 1e3:>9.2f}ms "
                  f"{ratio:>7.1f}x")
        t_py, t_cy = bench_crossing(n, rng)
        print(f"{'crossing (end-to-end)':<22} {n:>6} {t_py * 1e3:>9.2f}ms "
              f"{t_cy * 1e3:>9.2f}ms {t_py / t_cy:>7.1f}x")
        print()


if __name__ == "__main__":
    main()
