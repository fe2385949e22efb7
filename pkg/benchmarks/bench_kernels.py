"""Time the compiled kernels against the numpy fallback.

Run with ``python3 benchmarks/bench_kernels.py [--paths N] [--repeat R]``.  Each kernel
is timed on both backends with the same seed.  Both draw from the same counter-based
stream, so the printed estimates should agree to rounding.
"""
from __future__ import annotations

import argparse
import math
import time

import numpy as np

from penal_lab import kernels
from penal_lab import potential as P
from penal_lab.feynman_kac import density_table
from penal_lab.penalized import DiffusionSpec
from penal_lab.sturm import solve_integrable_bvp


def _best(fn, repeat: int) -> tuple[float, object]:
    best, out = math.inf, None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--paths", type=int, default=20000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    n = args.paths

    v = P.box(1.0, -1.0, 1.0)
    table = density_table(v, -10.0, 10.0)
    spec = DiffusionSpec.from_phi(solve_integrable_bvp(v), 0.0, 5e-3, 1.0)
    x0 = np.zeros(n)

    cases = {
        "normals": lambda b: kernels.normals(1, n, 100, backend=b).mean(),
        "killed_bm": lambda b: np.exp(kernels.killed_bm(
            2, n, 0.0, 1e-3, 1000, table, v.atom_locations, v.atom_masses, 0.03, backend=b)[0]).mean(),
        "em_paths": lambda b: kernels.em_paths(3, x0, 5e-3, 200, spec.drift, spec.tail, backend=b).mean(),
    }
    backends = ["python"] + (["cython"] if "cython" in kernels.BACKENDS else [])
    print(f"paths={n} repeat={args.repeat} threads={kernels.thread_count()}")
    print(f"{'kernel':<10} " + " ".join(f"{b + ' [s]':>12}" for b in backends) + f" {'speedup':>8}  estimates")
    for name, fn in cases.items():
        res = {b: _best(lambda: fn(b), args.repeat) for b in backends}
        times = [res[b][0] for b in backends]
        speed = times[0] / times[-1] if len(times) > 1 else 1.0
        est = ", ".join(f"{float(res[b][1]):.4f}" for b in backends)
        print(f"{name:<10} " + " ".join(f"{t:12.4f}" for t in times) + f" {speed:8.1f}x  {est}")


if __name__ == "__main__":
    main()
