# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled versions of the loops in ``qcl._kernels_py``.

Same signatures and same results; the loops release the GIL so chunked
work can run on several threads.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log, log1p, sqrt, fabs, expm1, INFINITY

cnp.import_array()

cdef double LOG2 = 0.6931471805599453
cdef long D_OMEGA[4]
cdef long D_LAM[4]
D_OMEGA[:] = [1, -1, 1, -1]
D_LAM[:] = [1, 1, -1, -1]


def radial_walk(u, up, long lam0, bint keep_path=True):
    cdef const double[:, ::1] uu = np.ascontiguousarray(u, dtype=np.float64)
    cdef const double[::1] pp = np.ascontiguousarray(up, dtype=np.float64)
    cdef Py_ssize_t N = uu.shape[0], n = uu.shape[1], i, k
    cdef long lam
    shape = [N, n + 1] if keep_path else [N]
    path_arr = np.empty(shape, dtype=np.int64)
    cdef cnp.int64_t[:, ::1] path
    cdef cnp.int64_t[::1] last
    if keep_path:
        path = path_arr
    else:
        last = path_arr
    with nogil:
        for i in range(N):
            lam = lam0
            if keep_path:
                path[i, 0] = lam
            for k in range(n):
                if uu[i, k] < pp[lam]:
                    lam = lam + 1
                else:
                    lam = lam - 1
                if keep_path:
                    path[i, k + 1] = lam
            if not keep_path:
                last[i] = lam
    return path_arr


def joint_walk(u, cum, long omega0, long lam0, long omega_offset, bint keep_path=True):
    cdef const double[:, ::1] uu = np.ascontiguousarray(u, dtype=np.float64)
    cdef const double[:, :, ::1] cc = np.ascontiguousarray(cum, dtype=np.float64)
    cdef Py_ssize_t N = uu.shape[0], n = uu.shape[1], i, k
    cdef long om, lam, j
    cdef double x
    shape = [N, n + 1, 2] if keep_path else [N, 2]
    path_arr = np.empty(shape, dtype=np.int64)
    cdef cnp.int64_t[:, :, ::1] path
    cdef cnp.int64_t[:, ::1] last
    if keep_path:
        path = path_arr
    else:
        last = path_arr
    with nogil:
        for i in range(N):
            om = omega0
            lam = lam0
            if keep_path:
                path[i, 0, 0] = om
                path[i, 0, 1] = lam
            for k in range(n):
                x = uu[i, k]
                j = 0
                while j < 3 and x >= cc[lam, om + omega_offset, j]:
                    j = j + 1
                om = om + D_OMEGA[j]
                lam = lam + D_LAM[j]
                if keep_path:
                    path[i, k + 1, 0] = om
                    path[i, k + 1, 1] = lam
            if not keep_path:
                last[i, 0] = om
                last[i, 1] = lam
    return path_arr


cdef inline double log_sinh(double y) nogil:
    if y <= 0.0:
        return -INFINITY
    return y + log(-expm1(-2.0 * y)) - LOG2


cdef inline double logaddexp(double a, double b) nogil:
    if a < b:
        a, b = b, a
    if b == -INFINITY:
        return a
    return a + log1p(exp(b - a))


cdef inline double radial(double r, double x, double log_abs_2rf) nogil:
    cdef double log_a = LOG2 + 2.0 * log_sinh(0.5 * r * fabs(x))
    cdef double log_b = 2.0 * log_abs_2rf - LOG2
    cdef double log_d = logaddexp(log_a, log_b)
    cdef double d, log_x
    if log_d < 30.0:
        d = exp(log_d)
        return log1p(d + sqrt(d * (d + 2.0))) / r
    log_x = log_d + log1p(exp(-log_d))
    return (log_x + log1p(sqrt(-expm1(-2.0 * log_x)))) / r


cdef inline double radial_direct(double r, double x1, double m, double mod2) nogil:
    # d = cosh(r x) - 1 + |2 r F|^2 / 2 evaluated directly while it cannot overflow
    cdef double y = 0.5 * r * fabs(x1)
    cdef double e2 = r * (x1 - 2.0 * m)
    cdef double s, sh, d, lf
    if y < 150.0 and e2 < 300.0:
        s = expm1(y)
        sh = 0.5 * s * (s + 2.0) / (s + 1.0)
        d = 2.0 * sh * sh + 0.5 * r * r * mod2 * exp(e2)
        return log1p(d + sqrt(d * (d + 2.0))) / r
    if mod2 > 0.0:
        lf = log(r) + 0.5 * r * x1 + 0.5 * log(mod2) - r * m
    else:
        lf = -INFINITY
    return radial(r, x1, lf)


def bj_lambda(X, dY, dZ, double r):
    cdef const double[:, ::1] xx = np.ascontiguousarray(X, dtype=np.float64)
    cdef const double[:, ::1] yy = np.ascontiguousarray(dY, dtype=np.float64)
    cdef const double[:, ::1] zz = np.ascontiguousarray(dZ, dtype=np.float64)
    cdef Py_ssize_t N = xx.shape[0], n1 = xx.shape[1], i, k
    out_arr = np.empty((N, n1), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef double jr, ji, m, decay, step, xk
    with nogil:
        for i in range(N):
            out[i, 0] = fabs(xx[i, 0])
            jr = 0.0
            ji = 0.0
            m = xx[i, 0]
            for k in range(n1 - 1):
                xk = xx[i, k]
                if xk < m:
                    # new running minimum: rescale the carried integral
                    decay = exp(r * (xk - m))
                    jr = decay * jr + yy[i, k]
                    ji = decay * ji + zz[i, k]
                    m = xk
                else:
                    step = exp(-r * (xk - m))
                    jr = jr + step * yy[i, k]
                    ji = ji + step * zz[i, k]
                out[i, k + 1] = radial_direct(r, xx[i, k + 1], m, jr * jr + ji * ji)
    return out_arr
