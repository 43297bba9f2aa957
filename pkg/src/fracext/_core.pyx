# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: CSR matvec, Jacobi-preconditioned CG and Temme's K_nu.

Mirrors fracext._fallback; fracext.kernels picks one of the two at import.
"""

import numpy as np
cimport numpy as cnp
from cython.parallel cimport prange
from libc.math cimport sqrt, log, exp, sin, sinh, cosh, fabs, M_PI

cnp.import_array()

DEF EPS = 1.0e-16
DEF MAXIT = 10000

cdef double[27] RG = [
    1.0,
    0.57721566490153286061,
    -0.65587807152025388108,
    -0.042002635034095235529,
    0.1665386113822914895,
    -0.042197734555544336748,
    -0.0096219715278769735621,
    0.0072189432466630995424,
    -0.0011651675918590651121,
    -0.00021524167411495097282,
    0.00012805028238811618615,
    -0.000020134854780788238656,
    -1.2504934821426706573e-6,
    1.1330272319816958824e-6,
    -2.0563384169776071035e-7,
    6.1160951044814158179e-9,
    5.0020076444692229301e-9,
    -1.1812745704870201446e-9,
    1.0434267116911005105e-10,
    7.782263439905071254e-12,
    -3.6968056186422057082e-12,
    5.100370287454475979e-13,
    -2.0583260535665067832e-14,
    -5.3481225394230179824e-15,
    1.2267786282382607902e-15,
    -1.1812593016974587695e-16,
    1.1866922547516003326e-18,
]

BACKEND = "compiled"


cdef double _k_scaled(double nu, double x) nogil:
    cdef int nl = <int>(nu + 0.5)
    cdef double xmu = nu - nl
    cdef double xmu2 = xmu * xmu
    cdef double xi = 1.0 / x
    cdef double xi2 = 2.0 * xi
    cdef double x2, pimu, fact, d, e, fact2, ff, total, total1, p, q, c, delta
    cdef double gam1 = 0.0, gam2 = 0.0, gampl = 0.0, gammi = 0.0, pw, term, mk
    cdef double b, h, delh, q1, q2, a1, a, s, qnew, dels, rkmu, rk1, tmp
    cdef int i, k
    if x < 2.0:
        pw = 1.0
        for k in range(27):
            term = RG[k] * pw
            gampl += term
            if k % 2:
                gammi -= term
            else:
                gammi += term
                gam2 += term
            pw *= xmu
        mk = 1.0
        for k in range(1, 27, 2):
            gam1 -= RG[k] * mk
            mk *= xmu2
        x2 = 0.5 * x
        pimu = M_PI * xmu
        fact = 1.0 if fabs(pimu) < EPS else pimu / sin(pimu)
        d = -log(x2)
        e = xmu * d
        fact2 = 1.0 if fabs(e) < EPS else sinh(e) / e
        ff = fact * (gam1 * cosh(e) + gam2 * fact2 * d)
        total = ff
        e = exp(e)
        p = 0.5 * e / gampl
        q = 0.5 / (e * gammi)
        c = 1.0
        d = x2 * x2
        total1 = p
        for i in range(1, MAXIT):
            ff = (i * ff + p + q) / (i * i - xmu2)
            c = c * d / i
            p = p / (i - xmu)
            q = q / (i + xmu)
            delta = c * ff
            total = total + delta
            total1 = total1 + c * (p - i * ff)
            if fabs(delta) < fabs(total) * EPS:
                break
        tmp = exp(x)
        rkmu = total * tmp
        rk1 = total1 * xi2 * tmp
    else:
        b = 2.0 * (1.0 + x)
        d = 1.0 / b
        h = d
        delh = d
        q1 = 0.0
        q2 = 1.0
        a1 = 0.25 - xmu2
        q = a1
        c = a1
        a = -a1
        s = 1.0 + q * delh
        for i in range(2, MAXIT):
            a = a - 2 * (i - 1)
            c = -a * c / i
            qnew = (q1 - b * q2) / a
            q1 = q2
            q2 = qnew
            q = q + c * qnew
            b = b + 2.0
            d = 1.0 / (b + a * d)
            delh = (b * d - 1.0) * delh
            h = h + delh
            dels = q * delh
            s = s + dels
            if fabs(dels / s) < EPS:
                break
        h = a1 * h
        rkmu = sqrt(M_PI / (2.0 * x)) / s
        rk1 = rkmu * (xmu + x + 0.5 - h) * xi
    for i in range(1, nl + 1):
        tmp = (xmu + i) * xi2 * rk1 + rkmu
        rkmu = rk1
        rk1 = tmp
    return rkmu


def bessel_k_scaled_array(double nu, x):
    """e^x K_nu(x) elementwise for 0 < nu <= 1 and positive x."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1] xv = np.ascontiguousarray(x, dtype=np.float64).ravel()
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty_like(xv)
    cdef Py_ssize_t i, n = xv.shape[0]
    cdef double[::1] xm = xv
    cdef double[::1] om = out
    with nogil:
        for i in range(n):
            om[i] = _k_scaled(nu, xm[i])
    return out.reshape(np.shape(x))


cdef void _matvec(const int[::1] indptr, const int[::1] indices, const double[::1] data,
                  const double[::1] x, double[::1] y, int nthreads) nogil:
    cdef Py_ssize_t i, n = y.shape[0]
    cdef int jj
    cdef double acc
    if nthreads > 1:
        for i in prange(n, num_threads=nthreads, schedule="static"):
            acc = 0.0
            for jj in range(indptr[i], indptr[i + 1]):
                acc = acc + data[jj] * x[indices[jj]]
            y[i] = acc
    else:
        for i in range(n):
            acc = 0.0
            for jj in range(indptr[i], indptr[i + 1]):
                acc = acc + data[jj] * x[indices[jj]]
            y[i] = acc


def csr_matvec(indptr, indices, data, x, int nthreads=1):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(len(indptr) - 1)
    _matvec(np.ascontiguousarray(indptr, dtype=np.int32),
            np.ascontiguousarray(indices, dtype=np.int32),
            np.ascontiguousarray(data, dtype=np.float64),
            np.ascontiguousarray(x, dtype=np.float64), out, nthreads)
    return out


def pcg_jacobi(indptr, indices, data, b, x0, double tol, int maxiter, bint jacobi=True,
               int nthreads=1):
    """Preconditioned CG on a CSR matrix.

    Returns (x, iterations, recursive residual norm).  Stops when the
    recursively updated residual satisfies ||r|| <= tol * ||b||.
    """
    cdef const int[::1] ip = np.ascontiguousarray(indptr, dtype=np.int32)
    cdef const int[::1] ix = np.ascontiguousarray(indices, dtype=np.int32)
    cdef const double[::1] dv = np.ascontiguousarray(data, dtype=np.float64)
    cdef double[::1] bv = np.ascontiguousarray(b, dtype=np.float64)
    cdef Py_ssize_t n = bv.shape[0], i
    cdef int jj, it = 0
    xa = np.array(x0, dtype=np.float64, copy=True)
    cdef double[::1] x = xa
    cdef double[::1] r = np.empty(n)
    cdef double[::1] z = np.empty(n)
    cdef double[::1] p = np.empty(n)
    cdef double[::1] q = np.empty(n)
    cdef double[::1] dinv = np.empty(n)
    cdef double bnorm = 0.0, rnorm2, rz, rz_new, pq, alpha, beta, thresh
    with nogil:
        for i in range(n):
            dinv[i] = 1.0
            if jacobi:
                for jj in range(ip[i], ip[i + 1]):
                    if ix[jj] == i:
                        dinv[i] = 1.0 / dv[jj]
            bnorm += bv[i] * bv[i]
        bnorm = sqrt(bnorm)
        _matvec(ip, ix, dv, x, q, nthreads)
        rnorm2 = 0.0
        rz = 0.0
        for i in range(n):
            r[i] = bv[i] - q[i]
            z[i] = dinv[i] * r[i]
            p[i] = z[i]
            rnorm2 += r[i] * r[i]
            rz += r[i] * z[i]
        thresh = tol * bnorm
        while sqrt(rnorm2) > thresh and it < maxiter:
            _matvec(ip, ix, dv, p, q, nthreads)
            pq = 0.0
            for i in range(n):
                pq += p[i] * q[i]
            if pq <= 0.0:
                break
            alpha = rz / pq
            rnorm2 = 0.0
            rz_new = 0.0
            for i in range(n):
                x[i] += alpha * p[i]
                r[i] -= alpha * q[i]
                z[i] = dinv[i] * r[i]
                rnorm2 += r[i] * r[i]
                rz_new += r[i] * z[i]
            beta = rz_new / rz
            rz = rz_new
            for i in range(n):
                p[i] = z[i] + beta * p[i]
            it += 1
    return xa, it, sqrt(rnorm2)
