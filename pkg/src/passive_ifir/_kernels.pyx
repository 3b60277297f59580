# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled simulation kernels; see ``_kernels_py`` for the reference versions."""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs

cnp.import_array()


def ss_filter(a, b, c, double d, u):
    cdef const double[:, ::1] A = np.ascontiguousarray(a, dtype=np.float64)
    cdef const double[::1] B = np.ascontiguousarray(b, dtype=np.float64).reshape(-1)
    cdef const double[::1] C = np.ascontiguousarray(c, dtype=np.float64).reshape(-1)
    cdef const double[::1] U = np.ascontiguousarray(u, dtype=np.float64)
    cdef Py_ssize_t n = A.shape[0], steps = U.shape[0], t, i, j
    out = np.empty(steps)
    cdef double[::1] Y = out
    cdef double[::1] x = np.zeros(n)
    cdef double[::1] xn = np.zeros(n)
    cdef double acc
    for t in range(steps):
        acc = d * U[t]
        for i in range(n):
            acc += C[i] * x[i]
        Y[t] = acc
        for i in range(n):
            acc = B[i] * U[t]
            for j in range(n):
                acc += A[i, j] * x[j]
            xn[i] = acc
        for i in range(n):
            x[i] = xn[i]
    return out


def tf_filter(num, den, u):
    cdef double[::1] bn = np.ascontiguousarray(num, dtype=np.float64) / den[0]
    cdef double[::1] an = np.ascontiguousarray(den, dtype=np.float64) / den[0]
    cdef const double[::1] U = np.ascontiguousarray(u, dtype=np.float64)
    cdef Py_ssize_t nb = bn.shape[0], na = an.shape[0], steps = U.shape[0], t, k
    out = np.zeros(steps)
    cdef double[::1] Y = out
    cdef double acc
    for t in range(steps):
        acc = 0.0
        for k in range(min(nb, t + 1)):
            acc += bn[k] * U[t - k]
        for k in range(1, min(na, t + 1)):
            acc -= an[k] * Y[t - k]
        Y[t] = acc
    return out


cdef inline double _partial(double[::1] bn, double[::1] an, double[::1] e,
                            double[::1] u, Py_ssize_t t):
    cdef double acc = 0.0
    cdef Py_ssize_t k
    for k in range(1, min(bn.shape[0], t + 1)):
        acc += bn[k] * e[t - k]
    for k in range(1, min(an.shape[0], t + 1)):
        acc -= an[k] * u[t - k]
    return acc


def closed_loop_linear(a, b, c, double d, cnum, cden, r):
    cdef const double[:, ::1] A = np.ascontiguousarray(a, dtype=np.float64)
    cdef const double[::1] B = np.ascontiguousarray(b, dtype=np.float64).reshape(-1)
    cdef const double[::1] C = np.ascontiguousarray(c, dtype=np.float64).reshape(-1)
    cdef double[::1] bn = np.ascontiguousarray(cnum, dtype=np.float64) / cden[0]
    cdef double[::1] an = np.ascontiguousarray(cden, dtype=np.float64) / cden[0]
    cdef const double[::1] R = np.ascontiguousarray(r, dtype=np.float64)
    cdef Py_ssize_t n = A.shape[0], steps = R.shape[0], t, i, j
    y_out = np.zeros(steps)
    u_out = np.zeros(steps)
    cdef double[::1] Y = y_out
    cdef double[::1] Uc = u_out
    cdef double[::1] E = np.zeros(steps)
    cdef double[::1] x = np.zeros(n)
    cdef double[::1] xn = np.zeros(n)
    cdef double acc, partial
    for t in range(steps):
        partial = _partial(bn, an, E, Uc, t)
        acc = 0.0
        for i in range(n):
            acc += C[i] * x[i]
        if d != 0.0:
            Uc[t] = partial
            Y[t] = acc + d * Uc[t]
            E[t] = R[t] - Y[t]
        else:
            Y[t] = acc
            E[t] = R[t] - Y[t]
            Uc[t] = partial + bn[0] * E[t]
        for i in range(n):
            acc = B[i] * Uc[t]
            for j in range(n):
                acc += A[i, j] * x[j]
            xn[i] = acc
        for i in range(n):
            x[i] = xn[i]
    return y_out, u_out


cdef struct CartParams:
    double m1, m2, k12, c12, c, thr, s_small, s_large
    int piecewise


cdef inline double _spring(double dl, CartParams* p) nogil:
    cdef double mag, f
    if not p.piecewise:
        return p.k12 * dl
    mag = fabs(dl)
    if mag <= p.thr:
        return p.s_small * dl
    f = p.s_small * p.thr + p.s_large * (mag - p.thr)
    return f if dl > 0 else -f


cdef inline void _rhs(double* s, double force, CartParams* p, double* out) nogil:
    cdef double fk = _spring(s[2], p)
    cdef double fd = p.c12 * (s[0] - s[1])
    out[0] = (force - fk - fd - p.c * s[0]) / p.m1
    out[1] = (fk + fd - p.c * s[1]) / p.m2
    out[2] = s[0] - s[1]


cdef void _rk4_hold(double* s, double force, CartParams* p, double h, int substeps) nogil:
    cdef double k1[3]
    cdef double k2[3]
    cdef double k3[3]
    cdef double k4[3]
    cdef double tmp[3]
    cdef int it, i
    for it in range(substeps):
        _rhs(s, force, p, k1)
        for i in range(3):
            tmp[i] = s[i] + 0.5 * h * k1[i]
        _rhs(tmp, force, p, k2)
        for i in range(3):
            tmp[i] = s[i] + 0.5 * h * k2[i]
        _rhs(tmp, force, p, k3)
        for i in range(3):
            tmp[i] = s[i] + h * k3[i]
        _rhs(tmp, force, p, k4)
        for i in range(3):
            s[i] = s[i] + h / 6.0 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i])


cdef CartParams _unpack(params):
    cdef CartParams p
    p.m1, p.m2, p.k12, p.c12, p.c, p.thr, p.s_small, p.s_large = [float(v) for v in params[:8]]
    p.piecewise = 1 if params[8] else 0
    return p


def two_cart_open_loop(params, u, double ts, int substeps):
    cdef CartParams p = _unpack(params)
    cdef const double[::1] U = np.ascontiguousarray(u, dtype=np.float64)
    cdef Py_ssize_t steps = U.shape[0], t
    out = np.empty(steps)
    cdef double[::1] Y = out
    cdef double s[3]
    cdef double h = ts / substeps
    s[0] = 0.0
    s[1] = 0.0
    s[2] = 0.0
    for t in range(steps):
        Y[t] = s[0]
        _rk4_hold(s, U[t], &p, h, substeps)
    return out


def two_cart_closed_loop(params, cnum, cden, r, double ts, int substeps):
    cdef CartParams p = _unpack(params)
    cdef double[::1] bn = np.ascontiguousarray(cnum, dtype=np.float64) / cden[0]
    cdef double[::1] an = np.ascontiguousarray(cden, dtype=np.float64) / cden[0]
    cdef const double[::1] R = np.ascontiguousarray(r, dtype=np.float64)
    cdef Py_ssize_t steps = R.shape[0], t
    y_out = np.zeros(steps)
    u_out = np.zeros(steps)
    cdef double[::1] Y = y_out
    cdef double[::1] Uc = u_out
    cdef double[::1] E = np.zeros(steps)
    cdef double s[3]
    cdef double h = ts / substeps
    s[0] = 0.0
    s[1] = 0.0
    s[2] = 0.0
    for t in range(steps):
        Y[t] = s[0]
        E[t] = R[t] - Y[t]
        Uc[t] = _partial(bn, an, E, Uc, t) + bn[0] * E[t]
        _rk4_hold(s, Uc[t], &p, h, substeps)
    return y_out, u_out
