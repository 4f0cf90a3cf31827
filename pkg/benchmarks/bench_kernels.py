"""Time the numba kernels against their pure-numpy twins.

    python benchmarks/bench_kernels.py [--rows 2000] [--repeat 3]

Each kernel runs once untimed on the numba path to trigger compilation;
reported times are the best of ``--repeat`` runs. Outputs of the two paths
are compared and the script fails loudly if they differ.
"""

import argparse
import time

import numpy as np

from cepz import _accel
from cepz.entropy import EstimatorParams, knn_entropy
from cepz.knn import PointSet
from cepz.regress import ForestParams, SvrParams, train_forest, train_svr
from cepz.synth import RegressionSpec, rng_for, sample_regression


def best_of(fn, repeat):
    best = np.inf
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--rows", type=int, default=2000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    T = args.rows
    pts = PointSet(rng_for(0).random((T, 3)))
    d = sample_regression(T, 0, RegressionSpec(n_noise_features=20))
    X, y = d.matrix(d.meta["features"]), d.column("z")
    n_svr = min(T, 800)
    cases = {
        f"knn entropy  T={T} d=3": lambda: knn_entropy(pts, EstimatorParams()),
        f"forest       T={T} d=22 trees=10": lambda: train_forest(X, y, ForestParams(n_trees=10)).predict(X),
        f"svr          T={n_svr} d=22": lambda: train_svr(X[:n_svr], y[:n_svr], SvrParams()).coef,
    }

    print(f"{'kernel':36s} {'numba s':>9s} {'numpy s':>9s} {'speedup':>8s}")
    for name, fn in cases.items():
        prev = _accel.set_numba(True)
        try:
            fn()  # compile
            t_nb, out_nb = best_of(fn, args.repeat)
            _accel.set_numba(False)
            t_np, out_np = best_of(fn, args.repeat)
        finally:
            _accel.set_numba(prev)
        if not np.array_equal(np.asarray(out_nb), np.asarray(out_np)):
            raise SystemExit(f"{name}: numba and numpy outputs differ")
        print(f"{name:36s} {t_nb:9.4f} {t_np:9.4f} {t_np / t_nb:7.1f}x")


if __name__ == "__main__":
    main()
