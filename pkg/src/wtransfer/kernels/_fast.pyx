# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled block evaluator; same contract as _pure.eval_block."""

import numpy as np
cimport numpy as cnp
from libc.math cimport log, fabs, rint, INFINITY

cnp.import_array()

cdef double UNIT_ROUNDOFF = 2.0 ** -53


def eval_block(theta, shift, inv_sigma, inv_rho, log_scale, lo, hi,
               long long start, long long count):
    cdef double[:, ::1] th = np.ascontiguousarray(theta, dtype=np.float64)
    cdef double[::1] sh = np.ascontiguousarray(shift, dtype=np.float64)
    cdef double[::1] isg = np.ascontiguousarray(inv_sigma, dtype=np.float64)
    cdef double[::1] irh = np.ascontiguousarray(inv_rho, dtype=np.float64)
    cdef double[::1] lsc = np.ascontiguousarray(log_scale, dtype=np.float64)
    cdef long long[::1] lo_v = np.ascontiguousarray(lo, dtype=np.int64)
    cdef long long[::1] hi_v = np.ascontiguousarray(hi, dtype=np.int64)
    cdef Py_ssize_t n = th.shape[0], m = th.shape[1]
    cdef Py_ssize_t i, j, k
    cdef long long idx, size

    out_h = np.empty(count, dtype=np.float64)
    out_lo = np.empty(count, dtype=np.float64)
    out_hi = np.empty(count, dtype=np.float64)
    cdef double[::1] oh = out_h
    cdef double[::1] olo = out_lo
    cdef double[::1] ohi = out_hi

    cdef long long[::1] x = np.empty(m, dtype=np.int64)
    idx = start
    for j in range(m - 1, -1, -1):
        size = hi_v[j] - lo_v[j] + 1
        x[j] = idx % size + lo_v[j]
        idx //= size

    cdef double h, t, v, mag, r, beta, e_lo, e_hi, tl, tu, xs, c

    for k in range(count):
        h = -INFINITY
        xs = 0.0
        for j in range(m):
            c = fabs(<double> x[j])
            xs += c
            if c > 0.0:
                t = log(c) * isg[j]
                if t > h:
                    h = t
        e_lo = -INFINITY
        e_hi = -INFINITY
        for i in range(n):
            v = sh[i]
            mag = fabs(sh[i])
            for j in range(m):
                v += th[i, j] * <double> x[j]
                mag += fabs(th[i, j]) * fabs(<double> x[j])
            mag += fabs(v)
            beta = (m + 4) * UNIT_ROUNDOFF * mag + 1e-30 * xs + 1e-300
            r = fabs(v - rint(v))
            if r > beta:
                tl = (log(r - beta) - lsc[i]) * irh[i]
            else:
                tl = -INFINITY
            tu = (log(r + beta) - lsc[i]) * irh[i]
            if tl > e_lo:
                e_lo = tl
            if tu > e_hi:
                e_hi = tu
        oh[k] = h
        olo[k] = e_lo - 1e-12 * (fabs(e_lo) + 1.0)
        ohi[k] = e_hi + 1e-12 * (fabs(e_hi) + 1.0)
        # advance the odometer
        j = m - 1
        while j >= 0:
            if x[j] < hi_v[j]:
                x[j] += 1
                break
            x[j] = lo_v[j]
            j -= 1
    return out_h, out_lo, out_hi
