# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled pair-scattering kernel (open-addressing accumulation)."""

import numpy as np
cimport numpy as cnp

cnp.import_array()

ctypedef cnp.int64_t i64
ctypedef cnp.uint64_t u64


def evolve_ordered(rows, cols, amps, targets, coefs, Py_ssize_t n_modes):
    """Apply ``T (x) T`` to an ordered sparse pair tensor.

    Same contract as the numpy kernel: sorted keys ``row * n_modes + col``,
    contributions summed per key in emission order starting from 0.0.
    """
    cdef const i64[::1] r = np.ascontiguousarray(rows, dtype=np.int64)
    cdef const i64[::1] c = np.ascontiguousarray(cols, dtype=np.int64)
    a_arr = np.ascontiguousarray(amps, dtype=np.complex128)
    cdef const double[::1] a = a_arr.view(np.float64)
    cdef const i64[:, ::1] t = np.ascontiguousarray(targets, dtype=np.int64)
    co_arr = np.ascontiguousarray(coefs, dtype=np.complex128)
    cdef const double[:, ::1] co = co_arr.view(np.float64)
    cdef Py_ssize_t nnz = r.shape[0]
    if nnz == 0:
        return np.empty(0, np.int64), np.empty(0, np.complex128)

    cdef Py_ssize_t cap = 16
    while cap < 32 * nnz:
        cap <<= 1
    cdef u64 mask = cap - 1
    cdef cnp.ndarray[i64, ndim=1] slot_key_arr = np.full(cap, -1, dtype=np.int64)
    cdef i64[::1] slot_key = slot_key_arr
    cdef double[::1] slot_re = np.zeros(cap)
    cdef double[::1] slot_im = np.zeros(cap)

    cdef Py_ssize_t n, k, l, s
    cdef i64 ri, ci, tk, tl, key
    cdef double ar, ai, xr, xi, yr, yi, pr, pi, vr, vi
    cdef u64 h

    for n in range(nnz):
        ri = r[n]
        ci = c[n]
        ar = a[2 * n]
        ai = a[2 * n + 1]
        for k in range(4):
            tk = t[ri, k]
            if tk < 0:
                continue
            xr = co[ri, 2 * k]
            xi = co[ri, 2 * k + 1]
            # amp * coef_row
            pr = ar * xr - ai * xi
            pi = ar * xi + ai * xr
            for l in range(4):
                tl = t[ci, l]
                if tl < 0:
                    continue
                yr = co[ci, 2 * l]
                yi = co[ci, 2 * l + 1]
                vr = pr * yr - pi * yi
                vi = pr * yi + pi * yr
                key = tk * n_modes + tl
                h = (<u64>key * <u64>0x9E3779B97F4A7C15) >> 17
                s = <Py_ssize_t>(h & mask)
                while slot_key[s] != -1 and slot_key[s] != key:
                    s = <Py_ssize_t>((s + 1) & mask)
                if slot_key[s] == -1:
                    slot_key[s] = key
                slot_re[s] += vr
                slot_im[s] += vi

    used = np.flatnonzero(slot_key_arr >= 0)
    keys = slot_key_arr[used]
    order = np.argsort(keys, kind="stable")
    re = np.asarray(slot_re)[used][order]
    im = np.asarray(slot_im)[used][order]
    return keys[order], re + 1j * im
