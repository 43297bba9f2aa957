"""Matrix-power reference solver for fractional powers of 1-D operators.

Discretize L u = -(a u')' + c u on (0, 1) with homogeneous Dirichlet data by
P1 elements, solve the generalized eigenproblem K phi = mu M phi densely and
apply mu^(-s) mode by mode.  The result is an independent check of the
extension solver for variable coefficients, where no closed form exists.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .exceptions import DomainError, SolverError
from .linalg import sym_eig_dense
from .quadrature import gauss_legendre

MAX_NODES = 2000


@dataclass(frozen=True)
class Operator1D:
    """-(a u')' + c u on a uniform grid of N cells; a, c vectorized callables."""

    a: Callable | None = None
    c: Callable | None = None
    N: int = 64

    def __post_init__(self):
        if int(self.N) < 2:
            raise DomainError(f"grid needs at least 2 cells, got N={self.N!r}")
        object.__setattr__(self, "N", int(self.N))

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.N + 1)


def _cell_quadrature(nodes, order):
    g, w = gauss_legendre(order, 0.0, 1.0)
    h = np.diff(nodes)
    xq = nodes[:-1, None] + h[:, None] * g
    return xq, h[:, None] * w, g, h


def _field(fn, xq, default):
    if fn is None:
        return np.full_like(xq, default)
    return np.broadcast_to(np.asarray(fn(xq), dtype=float), xq.shape)


def operator_matrices(op: Operator1D, order: int = 4):
    """Dense interior stiffness K (with a and c) and mass M."""
    nodes = op.nodes
    xq, wq, g, h = _cell_quadrature(nodes, order)
    aq = _field(op.a, xq, 1.0)
    cq = _field(op.c, xq, 0.0)
    if np.any(aq <= 0.0):
        raise DomainError("coefficient a must be positive on the grid")
    if np.any(cq < 0.0):
        raise DomainError("coefficient c must be nonnegative on the grid")
    n = nodes.size
    K = np.zeros((n, n))
    M = np.zeros((n, n))
    shape = (1.0 - g, g)
    dshape = (-1.0, 1.0)
    for p in range(2):
        for q in range(2):
            k_loc = (aq * wq).sum(1) * dshape[p] * dshape[q] / h**2
            k_loc = k_loc + (cq * shape[p] * shape[q] * wq).sum(1)
            m_loc = (shape[p] * shape[q] * wq).sum(1)
            rows = np.arange(op.N) + p
            cols = np.arange(op.N) + q
            np.add.at(K, (rows, cols), k_loc)
            np.add.at(M, (rows, cols), m_loc)
    return K[1:-1, 1:-1], M[1:-1, 1:-1]


def load_vector_1d(nodes: np.ndarray, f: Callable, order: int = 6) -> np.ndarray:
    """Interior entries of int f hat_i."""
    xq, wq, g, _ = _cell_quadrature(nodes, order)
    fq = _field(f, xq, 0.0)
    b = np.zeros(nodes.size)
    b[:-1] += (fq * (1.0 - g) * wq).sum(1)
    b[1:] += (fq * g * wq).sum(1)
    return b[1:-1]


def mtt_solve(op: Operator1D, f: Callable, s: float) -> np.ndarray:
    """Nodal values (all N + 1 nodes) of u_h = Phi Lambda^-s Phi^T b.

    Phi holds the M-orthonormal eigenvectors and b the load vector, which
    equals M times the L^2 projection of f.
    """
    if not (0.0 <= s <= 1.0):
        raise DomainError(f"s must lie in [0, 1], got {s!r}")
    if op.N + 1 > MAX_NODES:
        raise DomainError(f"dense eigensolve limited to {MAX_NODES} nodes, got {op.N + 1}")
    K, M = operator_matrices(op)
    b = load_vector_1d(op.nodes, f)
    mu, Phi = sym_eig_dense(K, M)
    if not np.all(mu > 0.0):
        raise SolverError("discrete operator is not positive definite")
    u = Phi @ (mu ** (-s) * (Phi.T @ b))
    return np.concatenate([[0.0], u, [0.0]])


def discrete_eigenvalues(op: Operator1D) -> np.ndarray:
    K, M = operator_matrices(op)
    return sym_eig_dense(K, M)[0]


def l2_gap(x1, u1, x2, u2) -> float:
    """L^2(0, 1) distance between two continuous piecewise linear functions."""
    x1, u1, x2, u2 = (np.asarray(v, dtype=float) for v in (x1, u1, x2, u2))
    brk = np.union1d(x1, x2)
    g, w = gauss_legendre(2, 0.0, 1.0)
    h = np.diff(brk)
    xq = (brk[:-1, None] + h[:, None] * g).ravel()
    wq = (h[:, None] * w).ravel()
    d = np.interp(xq, x1, u1) - np.interp(xq, x2, u2)
    return float(np.sqrt(wq @ d**2))


__all__ = [
    "MAX_NODES",
    "Operator1D",
    "discrete_eigenvalues",
    "l2_gap",
    "load_vector_1d",
    "mtt_solve",
    "operator_matrices",
]
