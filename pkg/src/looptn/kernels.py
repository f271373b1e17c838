"""Kernel dispatch: compiled extension when available, numpy fallback otherwise.

The compiled kernels win on small tensors where per-call numpy overhead
dominates; for large tensors the BLAS-backed numpy path is faster, so the
dispatcher routes on total size.  ``LOOPTN_PURE_PYTHON=1`` forces the
fallback (used by the benchmark and by tests that compare both backends).
"""

import os

import numpy as np

from . import _kernels_py

try:
    from . import _kernels as _ext
except ImportError:
    _ext = None

_FORCE_PURE = os.environ.get("LOOPTN_PURE_PYTHON", "") == "1"

# Above this size BLAS matmul beats the strided C loop (measured crossover
# near 4k elements; see benchmarks/bench_kernels.py).
_EXT_SIZE_LIMIT = 1 << 11

BACKEND = "compiled" if (_ext is not None and not _FORCE_PURE) else "python"


def backend_name() -> str:
    return BACKEND


def _use_ext(amps: np.ndarray) -> bool:
    return (
        BACKEND == "compiled"
        and amps.size <= _EXT_SIZE_LIMIT
        and amps.dtype == np.complex128
    )


def apply_one_mode(amps: np.ndarray, axis: int, op: np.ndarray) -> np.ndarray:
    if _use_ext(amps):
        return _ext.apply_one_mode(
            np.ascontiguousarray(amps), axis, np.ascontiguousarray(op, dtype=np.complex128)
        )
    return _kernels_py.apply_one_mode(amps, axis, op)


def apply_two_mode(amps: np.ndarray, axis1: int, axis2: int, gate: np.ndarray) -> np.ndarray:
    if _use_ext(amps):
        return _ext.apply_two_mode(
            np.ascontiguousarray(amps), axis1, axis2,
            np.ascontiguousarray(gate, dtype=np.complex128),
        )
    return _kernels_py.apply_two_mode(amps, axis1, axis2, gate)
