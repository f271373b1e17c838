# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled strided kernels for applying small gates to dense tensors.

Beats the numpy fallback on small tensors by avoiding the moveaxis/reshape
copies and per-call dispatch overhead; the dispatcher in kernels.py routes
large tensors to BLAS instead.
"""

from libc.stdlib cimport free, malloc

import numpy as np

cimport numpy as cnp

cnp.import_array()

DEF MAX_RANK = 32


cdef void _one_mode_core(const double complex* x, double complex* y,
                         const double complex* op, long d, long s,
                         const long* rdims, const long* rstrides,
                         long nrest) noexcept nogil:
    cdef long cnt[MAX_RANK]
    cdef long base = 0, k, a, j, t, total_rest = 1
    cdef double complex acc
    cdef double complex* xb = <double complex*> malloc(d * sizeof(double complex))
    for k in range(nrest):
        cnt[k] = 0
        total_rest *= rdims[k]
    for t in range(total_rest):
        for a in range(d):
            xb[a] = x[base + a * s]
        for a in range(d):
            acc = 0
            for j in range(d):
                acc = acc + op[a * d + j] * xb[j]
            y[base + a * s] = acc
        for k in range(nrest - 1, -1, -1):
            cnt[k] += 1
            base += rstrides[k]
            if cnt[k] < rdims[k]:
                break
            base -= rdims[k] * rstrides[k]
            cnt[k] = 0
    free(xb)


cdef void _two_mode_core(const double complex* x, double complex* y,
                         const double complex* g, long d1, long d2,
                         long s1, long s2,
                         const long* rdims, const long* rstrides,
                         long nrest) noexcept nogil:
    cdef long cnt[MAX_RANK]
    cdef long base = 0, k, a, b, i, j, t, total_rest = 1
    cdef long dd = d1 * d2
    cdef double complex acc
    cdef double complex* xb = <double complex*> malloc(dd * sizeof(double complex))
    for k in range(nrest):
        cnt[k] = 0
        total_rest *= rdims[k]
    for t in range(total_rest):
        i = 0
        for a in range(d1):
            for b in range(d2):
                xb[i] = x[base + a * s1 + b * s2]
                i += 1
        i = 0
        for a in range(d1):
            for b in range(d2):
                acc = 0
                for j in range(dd):
                    acc = acc + g[i * dd + j] * xb[j]
                y[base + a * s1 + b * s2] = acc
                i += 1
        for k in range(nrest - 1, -1, -1):
            cnt[k] += 1
            base += rstrides[k]
            if cnt[k] < rdims[k]:
                break
            base -= rdims[k] * rstrides[k]
            cnt[k] = 0
    free(xb)


def _element_strides(shape):
    nd = len(shape)
    strides = [1] * nd
    for k in range(nd - 2, -1, -1):
        strides[k] = strides[k + 1] * shape[k + 1]
    return strides


def apply_one_mode(amps, long axis, op):
    cdef cnp.ndarray a = np.ascontiguousarray(amps, dtype=np.complex128)
    cdef cnp.ndarray o = np.ascontiguousarray(op, dtype=np.complex128)
    if a.ndim > MAX_RANK:
        raise ValueError("tensor rank exceeds compiled limit")
    shape = tuple(a.shape[i] for i in range(a.ndim))
    strides = _element_strides(shape)
    rest = [k for k in range(a.ndim) if k != axis]
    cdef cnp.ndarray rdims = np.array([shape[k] for k in rest], dtype=np.int64)
    cdef cnp.ndarray rstrides = np.array([strides[k] for k in rest], dtype=np.int64)
    cdef cnp.ndarray out = np.empty_like(a)
    _one_mode_core(
        <const double complex*> cnp.PyArray_DATA(a),
        <double complex*> cnp.PyArray_DATA(out),
        <const double complex*> cnp.PyArray_DATA(o),
        shape[axis], strides[axis],
        <const long*> cnp.PyArray_DATA(rdims),
        <const long*> cnp.PyArray_DATA(rstrides),
        len(rest))
    return out


def apply_two_mode(amps, long ax1, long ax2, gate):
    cdef cnp.ndarray a = np.ascontiguousarray(amps, dtype=np.complex128)
    cdef cnp.ndarray g = np.ascontiguousarray(gate, dtype=np.complex128)
    if a.ndim > MAX_RANK:
        raise ValueError("tensor rank exceeds compiled limit")
    shape = tuple(a.shape[i] for i in range(a.ndim))
    strides = _element_strides(shape)
    rest = [k for k in range(a.ndim) if k != ax1 and k != ax2]
    cdef cnp.ndarray rdims = np.array([shape[k] for k in rest], dtype=np.int64)
    cdef cnp.ndarray rstrides = np.array([strides[k] for k in rest], dtype=np.int64)
    cdef cnp.ndarray out = np.empty_like(a)
    _two_mode_core(
        <const double complex*> cnp.PyArray_DATA(a),
        <double complex*> cnp.PyArray_DATA(out),
        <const double complex*> cnp.PyArray_DATA(g),
        shape[ax1], shape[ax2], strides[ax1], strides[ax2],
        <const long*> cnp.PyArray_DATA(rdims),
        <const long*> cnp.PyArray_DATA(rstrides),
        len(rest))
    return out
