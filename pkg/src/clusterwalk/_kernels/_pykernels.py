"""Vectorized numpy implementation of the pair-scattering kernel."""

from __future__ import annotations

import numpy as np


def evolve_ordered(rows, cols, amps, targets, coefs, n_modes):
    """Apply ``T (x) T`` to an ordered sparse pair tensor.

    Returns ``(keys, values)`` with ``keys = row * n_modes + col`` sorted
    ascending and duplicate contributions summed in emission order.
    """
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    amps = np.asarray(amps, dtype=np.complex128)
    if rows.size == 0:
        return np.empty(0, np.int64), np.empty(0, np.complex128)
    tr, cr = targets[rows], coefs[rows]
    tc, cc = targets[cols], coefs[cols]
    keys = tr[:, :, None] * n_modes + tc[:, None, :]
    # explicit real arithmetic: numpy's complex multiply may fuse multiply-adds,
    # which would break bitwise agreement with the compiled kernel
    pr = amps.real[:, None] * cr.real - amps.imag[:, None] * cr.imag
    pi = amps.real[:, None] * cr.imag + amps.imag[:, None] * cr.real
    pr, pi = pr[:, :, None], pi[:, :, None]
    yr, yi = cc.real[:, None, :], cc.imag[:, None, :]
    vr = pr * yr - pi * yi
    vi = pr * yi + pi * yr
    valid = (tr[:, :, None] >= 0) & (tc[:, None, :] >= 0)
    keys = keys[valid]
    uniq, inv = np.unique(keys, return_inverse=True)
    re = np.bincount(inv, weights=vr[valid], minlength=uniq.size)
    im = np.bincount(inv, weights=vi[valid], minlength=uniq.size)
    return uniq.astype(np.int64), re + 1j * im
