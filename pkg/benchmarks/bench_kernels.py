"""Compare the compiled and numpy kernel backends on representative sizes.

    python3 benchmarks/bench_kernels.py [--repeat R]

Prints one line per (kernel, size, backend) with the best wall time over R
repeats and the speed-up of each backend relative to numpy.
"""
from __future__ import annotations

import argparse
import timeit

import numpy as np

from ransim import kernels


def _pair_ci_args(n, rng):
    tx = rng.uniform(0, 1000, (n, 2))
    ang = rng.uniform(0, 2 * np.pi, n)
    ln = rng.uniform(50, 200, n)
    rx = tx + np.column_stack([ln * np.cos(ang), ln * np.sin(ang)])
    taz = np.degrees(ang)
    raz = (taz + 360.0) % 360.0 - 180.0
    return (tx, rx, taz, raz, 15.0, 20.0, 10.0, 60.0)


def _slotted_args(n, rng):
    ioc = rng.uniform(0, 0.2, (n, n))
    np.fill_diagonal(ioc, 0.0)
    k = rng.integers(1, 5, n)
    j = (rng.random(n) * k).astype(int)
    return (ioc, j / k, (j + 1) / k, 10 ** -1.2)


def _rb_sinr_args(n, rng):
    users, rbs = 30, 100
    rx = rng.uniform(1e-12, 1e-9, (users, n))
    assign = rng.integers(-1, users, (n, rbs))
    return (rx, assign, 1e-13)


CASES = {
    "pair_ci_db": (_pair_ci_args, (50, 200, 500)),
    "slotted_interfered": (_slotted_args, (50, 200, 500)),
    "rb_sinr": (_rb_sinr_args, (7, 21, 57)),
}


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    impls = kernels.backends()
    print(f"backends: {', '.join(impls)} (active: {kernels.BACKEND})")
    print(f"{'kernel':<20}{'size':>6}  {'backend':<8}{'best ms':>10}{'speed-up':>10}")
    for name, (make, sizes) in CASES.items():
        for n in sizes:
            a = make(n, np.random.default_rng(n))
            base = None
            for bname, mod in impls.items():
                fn = getattr(mod, name)
                number = max(1, int(0.2 / max(timeit.timeit(lambda: fn(*a), number=1), 1e-6)))
                best = min(timeit.repeat(lambda: fn(*a), number=number, repeat=args.repeat)) / number
                base = best if bname == "python" else base
                print(f"{name:<20}{n:>6}  {bname:<8}{best * 1e3:>10.3f}{base / best:>9.2f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
