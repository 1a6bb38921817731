"""Time the numpy and numba versions of each inner kernel.

Usage: python benchmarks/bench_kernels.py [--repeat 5]

Each numba kernel is called once before timing so compilation is excluded.
Results also check that both versions agree.
"""

import argparse
import timeit

import numpy as np

from heavypoly import _kernels
from heavypoly._accel import USE_NUMBA
from heavypoly.partition import transfer_matrix
from heavypoly.walk_laws import IncrementLaw


def _cases():
    rng = np.random.default_rng(0)
    law = IncrementLaw.critical(-2.0)
    M, N = 96, 64
    trans = transfer_matrix(law, M)
    weights = np.exp(rng.normal(size=(N, 2 * M + 1)) - 0.5)
    init = np.zeros(2 * M + 1)
    init[M] = 1.0
    ns = np.arange(1, 257, dtype=np.int64)
    zs = np.arange(-512, 513, dtype=np.int64)
    q = 1.0 - rng.random((64, 10_000))
    cps = (np.arange(2, 101, dtype=np.int64)) ** 2
    pmf = law.pmf(np.arange(-2000, 2001))
    pmf = pmf / pmf.sum()
    return {
        "site_grid": (lambda f: f(12345, ns, zs)),
        "forward_dp": (lambda f: f(trans, weights, init)),
        "top2_stream": (lambda f: f(q, cps)),
        "convolve_power": (lambda f: f(pmf, 10)),
    }


def _same(a, b):
    if isinstance(a, tuple):
        return all(_same(x, y) for x, y in zip(a, b))
    return np.allclose(a, b, rtol=1e-10, atol=1e-300)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if not USE_NUMBA:
        print("numba disabled or missing; the *_nb kernels run as plain Python")
    print(f"{'kernel':<16}{'numpy [ms]':>12}{'numba [ms]':>12}{'speedup':>10}  agree")
    for name, call in _cases().items():
        f_np = getattr(_kernels, name + "_np")
        f_nb = getattr(_kernels, name + "_nb")
        agree = _same(call(f_np), call(f_nb))  # also compiles the numba version
        t_np = min(timeit.repeat(lambda: call(f_np), number=1, repeat=args.repeat)) * 1e3
        t_nb = min(timeit.repeat(lambda: call(f_nb), number=1, repeat=args.repeat)) * 1e3
        print(f"{name:<16}{t_np:>12.2f}{t_nb:>12.2f}{t_np / t_nb:>10.1f}  {agree}")


if __name__ == "__main__":
    main()
