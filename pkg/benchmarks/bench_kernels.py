#!/usr/bin/env python3
"""Benchmark the compiled kernels against the numpy fallback.

Times the two-mode gate kernel on representative tensor sizes, then a full
lossless loop simulation end to end under each backend (the end-to-end runs
use subprocesses so the import-time backend selection applies).
"""

import os
import subprocess
import sys
import time

import numpy as np

from looptn import _kernels_py

try:
    from looptn import _kernels as compiled
except ImportError:
    compiled = None


def best_of(fn, repeats=5, inner=200):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        for _ in range(inner):
            fn()
        best = min(best, (time.perf_counter() - t0) / inner)
    return best


def bench_two_mode():
    rng = np.random.default_rng(0)
    cases = [
        ("2 modes, d=4", (4, 4), (0, 1)),
        ("4 modes, d=4", (4,) * 4, (0, 3)),
        ("6 modes, d=4", (4,) * 6, (0, 5)),
        ("8 modes, d=4", (4,) * 8, (0, 7)),
        ("12 axes, d=2", (2,) * 12, (0, 11)),
    ]
    print(f"{'case':>14}  {'numpy':>10}  {'compiled':>10}  {'speedup':>8}")
    for name, shape, (a1, a2) in cases:
        x = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
        dd = shape[a1] * shape[a2]
        g = rng.standard_normal((dd, dd)) + 1j * rng.standard_normal((dd, dd))
        t_py = best_of(lambda: _kernels_py.apply_two_mode(x, a1, a2, g))
        if compiled is None:
            print(f"{name:>14}  {t_py * 1e6:9.1f}us  {'n/a':>10}  {'n/a':>8}")
            continue
        t_cy = best_of(lambda: compiled.apply_two_mode(x, a1, a2, g))
        print(
            f"{name:>14}  {t_py * 1e6:9.1f}us  {t_cy * 1e6:9.1f}us  "
            f"{t_py / t_cy:7.2f}x"
        )


_E2E_SNIPPET = """
import time
import numpy as np
from looptn.circuit import CycleParams, LoopProgram, run_pure
from looptn.fock import SqueezeParam, Su2Param
from looptn import kernels

cycles = tuple(
    CycleParams(SqueezeParam(0.3), Su2Param(0.4, 0.2, -0.1)) for _ in range(5)
)
prog = LoopProgram(cycles, cutoff=4, leakage_threshold=0.2)
run_pure(prog)  # warm caches
reps = 50
best = float("inf")
for _ in range(5):
    t0 = time.perf_counter()
    for _ in range(reps):
        run_pure(prog)
    best = min(best, (time.perf_counter() - t0) / reps)
print(f"{kernels.backend_name()}: {best * 1e3:.3f} ms per 5-cycle run")
"""


def bench_end_to_end():
    for pure in ("0", "1"):
        env = dict(os.environ, LOOPTN_PURE_PYTHON=pure)
        subprocess.run([sys.executable, "-c", _E2E_SNIPPET], env=env, check=True)


if __name__ == "__main__":
    print("two-mode gate kernel (lower is better)\n")
    bench_two_mode()
    print("\nend-to-end lossless run\n")
    bench_end_to_end()
