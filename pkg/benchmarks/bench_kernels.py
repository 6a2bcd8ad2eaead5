"""Compare the numba kernels with the pure-numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Prints the best-of-``repeat`` time of each kernel on both backends, then an
end-to-end 1-D fit and LC-IC fit run in subprocesses with ``LCIC_BACKEND``
set, so the dispatch layer is exercised as users see it.
"""
import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from lcic import kernels


def kernel_cases(rng):
    n = 100_000
    r, s = rng.normal(scale=3, size=n), rng.normal(scale=3, size=n)
    x = np.sort(rng.normal(size=n))
    w = np.full(n, 1.0 / n)
    phi = -0.5 * x**2
    y = np.linspace(0.0, 1.0, 200)
    eta = -5.0 * (y - 0.4) ** 2
    a = rng.normal(size=(30, 30))
    a = a + a.T
    diag = 4.0 + rng.uniform(size=2000)
    off = rng.uniform(-1, 1, 1999)
    rhs = rng.normal(size=2000)
    p = rng.dirichlet(np.ones(50_000))
    return {
        "segment_moments (1e5)": ("segment_moments", (r, s)),
        "kink_gradient (1e5)": ("kink_gradient", (x, w, phi)),
        "knot_newton_terms (200)": ("knot_newton_terms", (y, eta)),
        "tridiag_solve (2000)": ("tridiag_solve", (diag, off, rhs)),
        "jacobi_eigh (30x30)": ("jacobi_eigh", (a, 1e-12, 100)),
        "build_alias (5e4)": ("build_alias", (p,)),
    }


def best_time(fn, args, repeat):
    fn(*args)  # compile / warm caches
    return min(timeit.repeat(lambda: fn(*args), number=1, repeat=repeat))


FIT_SNIPPET = """
import time
from lcic import fit_lcic, fit_logconcave_1d
from lcic.rng import RngState
from lcic.simulate import gaussian_model
fit_logconcave_1d(RngState(0).normal(100))
t = time.perf_counter(); fit_logconcave_1d(RngState(1).normal(20000)); a = time.perf_counter() - t
truth = gaussian_model([15.0, 14.0, 13.0, 12.0], RngState(2))
x = truth.sample(3000, RngState(3))
t = time.perf_counter(); fit_lcic(x, rng=RngState(4)); b = time.perf_counter() - t
print(a, b)
"""


def end_to_end(backend):
    env = dict(os.environ, LCIC_BACKEND=backend)
    out = subprocess.run([sys.executable, "-c", FIT_SNIPPET], env=env, capture_output=True, text=True)
    if out.returncode != 0:
        return None
    return tuple(float(v) for v in out.stdout.split())


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=5)
    args = p.parse_args(argv)
    if kernels.numba_impl is None:
        sys.exit("numba is not importable; nothing to compare")
    rng = np.random.default_rng(0)
    print(f"{'kernel':28s} {'numba [ms]':>12s} {'numpy [ms]':>12s} {'speedup':>9s}")
    for label, (name, fargs) in kernel_cases(rng).items():
        tn = best_time(getattr(kernels.numba_impl, name), fargs, args.repeat)
        tp = best_time(getattr(kernels.numpy_impl, name), fargs, args.repeat)
        print(f"{label:28s} {1e3 * tn:12.3f} {1e3 * tp:12.3f} {tp / tn:9.1f}")
    print()
    print(f"{'end to end':28s} {'numba [s]':>12s} {'numpy [s]':>12s}")
    nb, npy = end_to_end("numba"), end_to_end("numpy")
    for i, label in enumerate(["1-D MLE, n=20000", "LC-IC d=4, n=3000"]):
        a = f"{nb[i]:12.3f}" if nb else f"{'n/a':>12s}"
        b = f"{npy[i]:12.3f}" if npy else f"{'n/a':>12s}"
        print(f"{label:28s} {a} {b}")


if __name__ == "__main__":
    main()
