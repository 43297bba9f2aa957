"""Pure-Python/NumPy versions of the kernels in ``_core.pyx``."""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .specfun import bessel_k_scaled

BACKEND = "python"


def bessel_k_scaled_array(nu: float, x):
    xv = np.asarray(x, dtype=float)
    out = np.fromiter((bessel_k_scaled(nu, float(v)) for v in xv.ravel()), float, xv.size)
    return out.reshape(xv.shape)


def _as_csr(indptr, indices, data):
    n = len(indptr) - 1
    return sp.csr_matrix((data, indices, indptr), shape=(n, n))


def csr_matvec(indptr, indices, data, x, nthreads: int = 1):
    return _as_csr(indptr, indices, data) @ np.asarray(x, dtype=float)


def pcg_jacobi(indptr, indices, data, b, x0, tol, maxiter, jacobi=True, nthreads=1, callback=None):
    A = _as_csr(indptr, indices, data)
    b = np.asarray(b, dtype=float)
    x = np.array(x0, dtype=float, copy=True)
    dinv = 1.0 / A.diagonal() if jacobi else np.ones_like(b)
    r = b - A @ x
    z = dinv * r
    p = z.copy()
    rz = r @ z
    thresh = tol * np.linalg.norm(b)
    rnorm = np.linalg.norm(r)
    it = 0
    while rnorm > thresh and it < maxiter:
        q = A @ p
        pq = p @ q
        if pq <= 0.0:
            break
        alpha = rz / pq
        x += alpha * p
        r -= alpha * q
        z = dinv * r
        rz_new = r @ z
        p = z + (rz_new / rz) * p
        rz = rz_new
        rnorm = np.linalg.norm(r)
        it += 1
        if callback is not None:
            callback(x)
    return x, it, rnorm
