"""Time the numba kernels against the numpy reference.

    python benchmarks/bench_kernels.py [--n 20000] [--m 500] [--repeat 5]

Each kernel is warmed up once (JIT compile) before timing; outputs are
checked for agreement before any number is printed.  The smooth activations
delegate to numpy inside the numba backend, so their ratio should sit near 1.
"""

import argparse
import time

import numpy as np

from rfpinn import kernels
from rfpinn.activation import ActivationKind


def _best(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=20_000)
    ap.add_argument("--m", type=int, default=500)
    ap.add_argument("--d", type=int, default=1)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    if kernels.numba_backend is None:
        raise SystemExit("numba backend unavailable (missing, or RFPINN_DISABLE_NUMBA set)")

    rng = np.random.default_rng(0)
    X = rng.random((args.n, args.d))
    W = rng.uniform(-2, 2, (args.m, args.d))
    B = rng.uniform(-4, 4, args.m)
    V = np.ones(args.n)
    coef = rng.standard_normal(args.m) / args.m
    nb, npb = kernels.numba_backend, kernels.numpy_backend

    print(f"n={args.n} m={args.m} d={args.d} repeat={args.repeat}")
    print(f"{'kernel':<28}{'numpy [s]':>12}{'numba [s]':>12}{'speedup':>10}")
    for kind in ActivationKind:
        c = kind.code
        cases = {
            "feature_matrix": lambda be: be.feature_matrix(X, W, B, c, 0),
            "interior_matrix": lambda be: be.interior_matrix(X, W, B, V, c),
            "model_derivs": lambda be: be.model_derivs(X[:2000], W, B, coef, c),
        }
        for name, call in cases.items():
            ref, got = call(npb), call(nb)
            if not isinstance(ref, tuple):
                ref, got = (ref,), (got,)
            for r, g in zip(ref, got):
                np.testing.assert_allclose(g, r, rtol=1e-10, atol=1e-10)
            t_np = _best(lambda: call(npb), args.repeat)
            t_nb = _best(lambda: call(nb), args.repeat)
            label = f"{name}[{kind.name.lower()}]"
            print(f"{label:<28}{t_np:>12.4f}{t_nb:>12.4f}{t_np / t_nb:>9.1f}x")


if __name__ == "__main__":
    main()
