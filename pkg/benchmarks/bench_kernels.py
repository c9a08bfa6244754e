"""Compare the compiled and numpy kernel backends.

    python3 benchmarks/bench_kernels.py [--repeat N]
"""
import argparse
import importlib
import timeit

import numpy as np

from topomap import _kernels_py


def _cases(rng):
    X = rng.normal(size=(20000, 16))
    C = rng.normal(size=(64, 16))
    n = 400
    P = rng.random((n, n))
    P = P + P.T
    np.fill_diagonal(P, 0.0)
    P /= P.sum()
    Y = rng.normal(size=(n, 2))
    k = 90
    truth = rng.integers(0, k, 200000)
    pred = np.where(rng.random(200000) < 0.8, truth, rng.integers(0, k, 200000))
    return {
        "nearest_centroid 20000x16, k=64": ("nearest_centroid", (X, C)),
        "tsne_gradient n=400": ("tsne_gradient", (Y, P)),
        "tsne_gradient n=400, no KL": ("tsne_gradient", (Y, P, False)),
        "pair_confusion n=200000, k=90": ("pair_confusion", (pred, truth, k)),
    }


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    backends = {"python": _kernels_py}
    try:
        backends["cython"] = importlib.import_module("topomap._kernels")
    except ImportError:
        print("compiled kernels not built; timing the numpy fallback only")

    cases = _cases(np.random.default_rng(0))
    print(f"{'kernel':36s}" + "".join(f"{b:>12s}" for b in backends) + f"{'speedup':>10s}")
    for label, (fn, fargs) in cases.items():
        times = {}
        for name, mod in backends.items():
            f = getattr(mod, fn)
            times[name] = min(timeit.repeat(lambda: f(*fargs), number=1, repeat=args.repeat))
        row = f"{label:36s}" + "".join(f"{times[b] * 1e3:10.2f}ms" for b in backends)
        if "cython" in times:
            row += f"{times['python'] / times['cython']:9.2f}x"
        print(row)


if __name__ == "__main__":
    main()
