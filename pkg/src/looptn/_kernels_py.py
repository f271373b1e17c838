"""Pure-numpy implementations of the dense tensor kernels.

These are the fallback used when the compiled extension is unavailable
(or disabled via LOOPTN_PURE_PYTHON=1).  Both backends implement the same
contract: the input array is never mutated, a new array is returned.
"""

import numpy as np


def apply_one_mode(amps: np.ndarray, axis: int, op: np.ndarray) -> np.ndarray:
    """Apply a single-mode operator to one axis of a dense amplitude tensor."""
    moved = np.moveaxis(amps, axis, 0)
    flat = moved.reshape(moved.shape[0], -1)
    out = op @ flat
    return np.moveaxis(out.reshape(moved.shape), 0, axis)


def apply_two_mode(amps: np.ndarray, axis1: int, axis2: int, gate: np.ndarray) -> np.ndarray:
    """Apply a two-mode gate to axes (axis1, axis2) of a dense amplitude tensor.

    The gate is a square matrix over the combined index (n1, n2) in row-major
    order, with n1 running over ``axis1`` and n2 over ``axis2``.
    """
    moved = np.moveaxis(amps, (axis1, axis2), (0, 1))
    d1, d2 = moved.shape[0], moved.shape[1]
    flat = moved.reshape(d1 * d2, -1)
    out = gate @ flat
    return np.moveaxis(out.reshape(moved.shape), (0, 1), (axis1, axis2))
