"""Independent reference computations shared by the tests."""

import math

import mpmath
import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import roots_jacobi


def geometric_weighted_integral(fun, Y, beta, n=24, first=1e-14, ratio=2.0):
    """int_0^Y fun(y) dy where fun(y) ~ y^beta * smooth near 0.

    Gauss-Jacobi (weight y^beta) on [0, first * Y], Gauss-Legendre on a
    geometric sequence of intervals above it.
    """
    h0 = first * Y
    xj, wj = roots_jacobi(n, 0.0, beta)
    yj = 0.5 * h0 * (xj + 1.0)
    wj = wj * (0.5 * h0) ** (beta + 1.0)
    total = math.fsum(wj * fun(yj) / yj**beta)
    edges = [h0]
    while edges[-1] < Y:
        edges.append(min(edges[-1] * ratio, Y))
    xg, wg = leggauss(n)
    for a, b in zip(edges[:-1], edges[1:]):
        y = a + 0.5 * (b - a) * (xg + 1.0)
        total += math.fsum(0.5 * (b - a) * wg * fun(y))
    return total


def mp_bessel_k(nu, z, dps=30):
    with mpmath.workdps(dps):
        return float(mpmath.besselk(nu, z))


def mp_weighted_moment(a, b, alpha, poly):
    """int_a^b y^alpha poly(y) dy with mpmath (poly: numpy coefficient array, low first)."""
    with mpmath.workdps(30):
        f = lambda y: y**alpha * sum(c * y**k for k, c in enumerate(poly))  # noqa: E731
        return float(mpmath.quad(f, [a, b]))


def weighted_y_matrices_mp(points, alpha):
    """Dense P1 y-stiffness and y-mass matrices with weight y^alpha via mpmath."""
    n = len(points)
    K = np.zeros((n, n))
    M = np.zeros((n, n))
    for k in range(n - 1):
        a, b = float(points[k]), float(points[k + 1])
        h = b - a
        # shape functions (b - y)/h, (y - a)/h as polynomials in y
        shapes = [np.array([b, -1.0]) / h, np.array([-a, 1.0]) / h]
        d = [-1.0 / h, 1.0 / h]
        for p in range(2):
            for q in range(2):
                prod = np.polynomial.polynomial.polymul(shapes[p], shapes[q])
                M[k + p, k + q] += mp_weighted_moment(a, b, alpha, prod)
                K[k + p, k + q] += d[p] * d[q] * mp_weighted_moment(a, b, alpha, [1.0])
    return K, M


def classical_q1_stiffness(xs, ys):
    """Unweighted Q1 Laplacian stiffness on a tensor grid, element by element."""
    nx, ny = len(xs), len(ys)
    A = np.zeros((nx * ny, nx * ny))
    g, w = leggauss(3)
    for k in range(ny - 1):
        for i in range(nx - 1):
            hx = xs[i + 1] - xs[i]
            hy = ys[k + 1] - ys[k]
            nodes = [(i, k), (i + 1, k), (i, k + 1), (i + 1, k + 1)]
            for gx, wx in zip(g, w):
                for gy, wy in zip(g, w):
                    t, u = 0.5 * (gx + 1), 0.5 * (gy + 1)
                    grads = [
                        (-(1 - u) / hx, -(1 - t) / hy),
                        ((1 - u) / hx, -t / hy),
                        (-u / hx, (1 - t) / hy),
                        (u / hx, t / hy),
                    ]
                    wt = 0.25 * wx * wy * hx * hy
                    for p, (ip, kp) in enumerate(nodes):
                        for q, (iq, kq) in enumerate(nodes):
                            A[ip + nx * kp, iq + nx * kq] += wt * (
                                grads[p][0] * grads[q][0] + grads[p][1] * grads[q][1]
                            )
    return A
