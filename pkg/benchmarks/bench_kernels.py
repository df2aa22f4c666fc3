#!/usr/bin/env python3
"""Compiled core against the numpy fallback on MicroMass-sized synthetic problems.

    python benchmarks/bench_kernels.py [--repeat 3] [--trees 20]

Both backends run the same seeded work and must return identical models;
the script reports the best wall time of each and the speed-up.
"""

import argparse
import time

import numpy as np

from taxosvm import kernels
from taxosvm.baselines import train_rf
from taxosvm.linear import BinaryTrainConfig, train_binary
from taxosvm.synthetic import micromass_like


def best_of(fn, repeat):
    times, out = [], None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--trees", type=int, default=20)
    args = ap.parse_args(argv)
    if "cython" not in kernels.BACKENDS:
        raise SystemExit("compiled core not built; run pip install -e . --no-build-isolation")

    d = micromass_like(seed=0).normalized()
    X, labels = d.X[:560], d.labels[:560]
    G = X @ X.T
    y = np.where(labels == labels[0], 1.0, -1.0)
    cfg = BinaryTrainConfig(C=100.0)

    cases = {
        "binary SVM (560 x 1300, C=100)": lambda b: train_binary(X, y, cfg, gram=G, backend=b),
        f"random forest ({args.trees} trees)": lambda b: train_rf(X, labels, d.K, n_trees=args.trees, backend=b),
    }
    print(f"{'kernel':<34}{'cython s':>10}{'python s':>10}{'speed-up':>10}  identical")
    for name, run in cases.items():
        tc, mc = best_of(lambda: run("cython"), args.repeat)
        tp, mp = best_of(lambda: run("python"), args.repeat)
        if hasattr(mc, "weights"):
            same = bool(np.allclose(mc.weights, mp.weights, atol=1e-9))
        else:
            same = all(np.array_equal(a.threshold, b.threshold) for a, b in zip(mc.trees, mp.trees))
        print(f"{name:<34}{tc:>10.3f}{tp:>10.3f}{tp / tc:>9.1f}x  {same}")


if __name__ == "__main__":
    main()
