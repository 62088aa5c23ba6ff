"""Compare the numba and numpy Radon kernels.

    python3 benchmarks/bench_radon.py --sizes 64 128 256 --repeat 5

Prints the median wall time of one forward and one adjoint application per
backend and the speed-up of numba over numpy. The two backends must agree
to round-off; the script checks that too.
"""

import argparse
import statistics
import time

import numpy as np

from tvct._accel import HAVE_NUMBA
from tvct.radon import RadonOp


def _time(fn, arg, repeat):
    out = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn(arg)
        out.append(time.perf_counter() - t)
    return statistics.median(out)


def bench(n, repeat, backends):
    base = RadonOp.create(n, n_angles=3 * n // 2)
    rng = np.random.default_rng(0)
    u = rng.standard_normal(base.domain_shape)
    v = rng.standard_normal(base.range_shape)
    rows, ref = [], None
    for b in backends:
        op = base.with_backend(b)
        fwd = op.forward(u)  # warm-up: builds the table and compiles
        op.adjoint(v)
        if ref is None:
            ref = fwd
        elif not np.allclose(fwd, ref, rtol=1e-12, atol=1e-10):
            raise SystemExit(f"backend {b} disagrees with {backends[0]} at n={n}")
        rows.append((b, _time(op.forward, u, repeat), _time(op.adjoint, v, repeat)))
    return rows


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--sizes", type=int, nargs="+", default=[64, 128, 256])
    p.add_argument("--repeat", type=int, default=5)
    a = p.parse_args(argv)
    backends = ["numba", "numpy"] if HAVE_NUMBA else ["numpy"]
    print(f"{'n':>5} {'backend':>8} {'forward ms':>11} {'adjoint ms':>11}")
    for n in a.sizes:
        rows = bench(n, a.repeat, backends)
        for b, tf, ta in rows:
            print(f"{n:>5} {b:>8} {1e3 * tf:>11.2f} {1e3 * ta:>11.2f}")
        if len(rows) == 2:
            (_, f0, a0), (_, f1, a1) = rows
            print(f"{n:>5} {'speed-up':>8} {f1 / f0:>10.1f}x {a1 / a0:>10.1f}x")


if __name__ == "__main__":
    main()
