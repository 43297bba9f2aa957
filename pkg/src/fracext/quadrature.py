"""Gauss rules on intervals, including Gauss-Jacobi rules for y^beta weights."""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import roots_jacobi


@lru_cache(maxsize=64)
def _legendre_ref(n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = leggauss(n)
    return x, w


@lru_cache(maxsize=64)
def _jacobi_ref(n: int, beta: float) -> tuple[np.ndarray, np.ndarray]:
    # weight (1 + x)^beta on [-1, 1]
    x, w = roots_jacobi(n, 0.0, beta)
    return x, w


def gauss_legendre(n: int, a: float = -1.0, b: float = 1.0):
    """n-point Gauss-Legendre nodes and weights on [a, b]."""
    x, w = _legendre_ref(int(n))
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


def gauss_jacobi_origin(n: int, beta: float, h: float):
    """Nodes and weights on [0, h] integrating y^beta * p(y) exactly for deg p <= 2n-1."""
    x, w = _jacobi_ref(int(n), float(beta))
    half = 0.5 * h
    return half * (x + 1.0), w * half ** (beta + 1.0)


def composite_legendre(edges, n: int):
    """Composite n-point rule on consecutive intervals of ``edges``.

    Returns arrays of shape (len(edges) - 1, n): nodes, weights.
    """
    edges = np.asarray(edges, dtype=float)
    x, w = _legendre_ref(int(n))
    a = edges[:-1, None]
    half = 0.5 * (edges[1:] - edges[:-1])[:, None]
    return a + half * (x[None, :] + 1.0), half * w[None, :]
