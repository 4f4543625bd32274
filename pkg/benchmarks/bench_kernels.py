"""Compare the compiled and pure-Python Schur kernels.

Usage: ``python benchmarks/bench_kernels.py [--sizes 6 12 24 48] [--repeat 5]``

Times Hessenberg reduction + shifted QR + stable-first reordering on random
complex matrices, checks both backends produce the same eigenvalues, and
reports the speed-up of the compiled core.
"""
import argparse
import time

import numpy as np

from rtk._kernels import _pure

try:
    from rtk._kernels import _core
except ImportError:  # extension not built
    _core = None


def run(mod, a):
    h = np.array(a, dtype=complex, order="C")
    z = np.eye(a.shape[0], dtype=complex)
    mod.hessenberg(h, z)
    if mod.schur_qr(h, z) < 0:
        raise RuntimeError("QR did not converge")
    mod.reorder(h, z, np.diag(h).real < 0)
    return h, z


def best_time(mod, a, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        run(mod, a)
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[6, 12, 24, 48, 72])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    if _core is None:
        print("compiled core not built; timing the pure-Python kernels only")
    print(f"{'n':>4} {'python [ms]':>12} {'compiled [ms]':>14} {'speed-up':>9} {'eig diff':>9}")
    for n in args.sizes:
        a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        tp = best_time(_pure, a, args.repeat)
        if _core is None:
            print(f"{n:>4} {1e3 * tp:>12.2f}")
            continue
        tc = best_time(_core, a, args.repeat)
        ep = np.sort_complex(np.diag(run(_pure, a)[0]))
        ec = np.sort_complex(np.diag(run(_core, a)[0]))
        print(f"{n:>4} {1e3 * tp:>12.2f} {1e3 * tc:>14.2f} {tp / tc:>9.1f} {np.abs(ep - ec).max():>9.1e}")


if __name__ == "__main__":
    main()
