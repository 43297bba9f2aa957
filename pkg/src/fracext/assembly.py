"""Assembly of the weighted stiffness system on a tensor-product cylinder mesh.

Because the coefficient matrix diag{A(x'), 1} and the reaction term c(x')
depend on x' only, every Q1 element matrix on T = K x I factors into an
Omega part and a y part.  The global free-dof matrix is therefore

    kron(M_y, K_Omega(A)) + kron(K_y, M_Omega) + kron(M_y, M_Omega(c))

where K_y, M_y are the y^alpha-weighted 1-D stiffness and mass matrices.
The y factors are integrated exactly (closed-form moments of y^alpha times
polynomials), the Omega factors with tensor Gauss rules.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import scipy.io
import scipy.sparse as sp

from .exceptions import AssemblyError, DomainError
from .mesh import CylinderMesh
from .quadrature import gauss_legendre
from .specfun import FracParams

# below this ratio a/h the closed-form moments are used directly
_SERIES_RATIO = 2.0
_SERIES_TERMS = 80


def weighted_moment(a: float, b: float, alpha: float, j: int) -> float:
    """Exact integral of y^(alpha + j) over [a, b]."""
    if a < 0.0:
        raise DomainError(f"weighted_moment needs a >= 0, got a={a!r}")
    if not b > a:
        raise DomainError(f"weighted_moment needs b > a, got a={a!r}, b={b!r}")
    p = alpha + j + 1.0
    if p <= 0.0:
        raise DomainError(f"y^{alpha + j} is not integrable at 0")
    return (b**p - a**p) / p


def _shifted_moments(a: np.ndarray, h: np.ndarray, alpha: float) -> np.ndarray:
    """J[:, j] = integral over t in [0, h] of (a + t)^alpha t^j, for j = 0, 1, 2.

    Uses the closed-form antiderivative when a is comparable to h and the
    binomial series in h/a otherwise, which avoids cancellation on the thin
    intervals far from y = 0.
    """
    a = np.asarray(a, dtype=float)
    h = np.asarray(h, dtype=float)
    b = a + h
    J = np.empty(a.shape + (3,))
    near = a <= _SERIES_RATIO * h
    if np.any(near):
        an, bn = a[near], b[near]
        m = [(bn ** (alpha + i + 1) - an ** (alpha + i + 1)) / (alpha + i + 1) for i in range(3)]
        J[near, 0] = m[0]
        J[near, 1] = m[1] - an * m[0]
        J[near, 2] = m[2] - 2.0 * an * m[1] + an * an * m[0]
    far = ~near
    if np.any(far):
        af, hf = a[far], h[far]
        r = hf / af
        coef = np.ones_like(af)  # binom(alpha, k) (r)^k
        acc = np.zeros((af.size, 3))
        for k in range(_SERIES_TERMS):
            for j in range(3):
                acc[:, j] += coef / (k + j + 1)
            coef = coef * (alpha - k) / (k + 1) * r
            if not np.any(np.abs(coef) > 1e-18):
                break
        scale = af**alpha
        for j in range(3):
            J[far, j] = scale * hf ** (j + 1) * acc[:, j]
    return J


def y_matrices(points: np.ndarray, alpha: float) -> tuple[sp.csr_matrix, sp.csr_matrix]:
    """Weighted 1-D Q1 stiffness and mass matrices over the partition ``points``.

    K[i, j] = int y^alpha phi_i' phi_j',  M[i, j] = int y^alpha phi_i phi_j.
    """
    points = np.asarray(points, dtype=float)
    a = points[:-1]
    h = np.diff(points)
    J = _shifted_moments(a, h, alpha)
    k_loc = J[:, 0] / (h * h)
    m11 = J[:, 2] / (h * h)
    m01 = J[:, 1] / h - m11
    m00 = J[:, 0] - 2.0 * J[:, 1] / h + m11
    return _tridiag(k_loc, -k_loc, k_loc), _tridiag(m00, m01, m11)


def _tridiag(e00, e01, e11) -> sp.csr_matrix:
    n = e00.size + 1
    diag = np.zeros(n)
    diag[:-1] += e00
    diag[1:] += e11
    return sp.diags([e01, diag, e01], [-1, 0, 1], shape=(n, n), format="csr")


@dataclass(frozen=True)
class OperatorCoeffs:
    """Coefficients of L w = -div(A grad w) + c w on Omega.

    ``A`` is None (identity) or a vectorized callable of the Omega coordinates
    returning a positive scalar field (n = 1, or isotropic n = 2) or a field of
    symmetric 2x2 matrices with trailing shape (2, 2).  ``c`` is None (zero)
    or a nonnegative vectorized callable.
    """

    A: Callable | None = None
    c: Callable | None = None

    @property
    def is_laplacian(self) -> bool:
        return self.A is None and self.c is None


LAPLACIAN = OperatorCoeffs()


@dataclass
class SparseSystem:
    matrix: sp.csr_matrix
    rhs: np.ndarray
    mesh: CylinderMesh
    params: FracParams

    def expand(self, x_free: np.ndarray) -> np.ndarray:
        """Nodal vector over all mesh nodes, zero on the Dirichlet boundary."""
        full = np.zeros(self.mesh.n_nodes)
        full[self.mesh.free] = x_free
        return full

    def dump_matrix_market(self, path) -> None:
        scipy.io.mmwrite(str(path), self.matrix, symmetry="symmetric")


def _interval_cells(nodes: np.ndarray, order: int):
    xg, wg = gauss_legendre(order, 0.0, 1.0)
    h = np.diff(nodes)
    xq = nodes[:-1, None] + h[:, None] * xg[None, :]
    wq = h[:, None] * wg[None, :]
    return xq, wq, h


def _omega_matrices_1d(nodes, A, c, order):
    """P1 stiffness (coefficient A), mass and reaction matrices on a 1-D grid."""
    xq, wq, h = _interval_cells(nodes, order)
    xg = (xq - nodes[:-1, None]) / h[:, None]
    n0 = 1.0 - xg
    n1 = xg
    if A is None:
        aq = np.ones_like(xq)
    else:
        aq = np.broadcast_to(np.asarray(A(xq), dtype=float), xq.shape)
        bad = np.argwhere(~(aq > 0.0))
        if bad.size:
            cell = int(bad[0, 0])
            raise AssemblyError(f"coefficient A is not positive on cell {cell} at x={xq[tuple(bad[0])]:g}")
    kint = (aq * wq).sum(axis=1) / (h * h)
    stiff = _tridiag(kint, -kint, kint)
    mass = _tridiag((n0 * n0 * wq).sum(1), (n0 * n1 * wq).sum(1), (n1 * n1 * wq).sum(1))
    if c is None:
        react = None
    else:
        cq = np.broadcast_to(np.asarray(c(xq), dtype=float), xq.shape)
        bad = np.argwhere(~(cq >= 0.0))
        if bad.size:
            raise AssemblyError(f"coefficient c is negative on cell {int(bad[0, 0])}")
        react = _tridiag((cq * n0 * n0 * wq).sum(1), (cq * n0 * n1 * wq).sum(1), (cq * n1 * n1 * wq).sum(1))
    return stiff, mass, react


def _omega_matrices_2d(nodes, A, c, order):
    """Q1 matrices on the uniform square grid; returns (stiff, mass, react)."""
    m = nodes.size - 1
    n1 = m + 1
    if A is None and c is None:
        k1, m1, _ = _omega_matrices_1d(nodes, None, None, 2)
        return (sp.kron(m1, k1) + sp.kron(k1, m1)).tocsr(), sp.kron(m1, m1).tocsr(), None
    g, w = gauss_legendre(order, 0.0, 1.0)
    h = np.diff(nodes)
    # reference shape values / gradients at the tensor points, local node (a, b)
    xi, eta = np.meshgrid(g, g, indexing="ij")  # xi along x1
    wq = np.outer(w, w)
    lin = [lambda t: 1.0 - t, lambda t: t]
    dlin = [-1.0, 1.0]
    local = [(a, b) for b in (0, 1) for a in (0, 1)]
    N = np.stack([lin[a](xi) * lin[b](eta) for a, b in local])
    dN1 = np.stack([dlin[a] * lin[b](eta) for a, b in local])
    dN2 = np.stack([lin[a](xi) * dlin[b] for a, b in local])
    I, Jc = np.meshgrid(np.arange(m), np.arange(m), indexing="ij")  # I along x1
    I = I.ravel()
    Jc = Jc.ravel()
    hx1 = h[I]
    hx2 = h[Jc]
    X1 = nodes[I][:, None, None] + hx1[:, None, None] * xi[None]
    X2 = nodes[Jc][:, None, None] + hx2[:, None, None] * eta[None]
    det = (hx1 * hx2)[:, None, None]
    W = wq[None] * det
    if A is None:
        Aq = np.zeros(X1.shape + (2, 2))
        Aq[..., 0, 0] = 1.0
        Aq[..., 1, 1] = 1.0
    else:
        val = np.asarray(A(X1, X2), dtype=float)
        if val.shape == X1.shape or val.ndim == 0:
            Aq = np.zeros(X1.shape + (2, 2))
            Aq[..., 0, 0] = val
            Aq[..., 1, 1] = val
        else:
            Aq = np.broadcast_to(val, X1.shape + (2, 2))
        a11, a12, a21, a22 = Aq[..., 0, 0], Aq[..., 0, 1], Aq[..., 1, 0], Aq[..., 1, 1]
        spd = (a11 > 0) & (a11 * a22 - a12 * a21 > 0) & np.isclose(a12, a21, rtol=1e-12, atol=0.0)
        bad = np.argwhere(~spd)
        if bad.size:
            cell = int(bad[0, 0])
            raise AssemblyError(
                f"coefficient A is not symmetric positive definite on cell ({I[cell]}, {Jc[cell]})"
            )
    G1 = dN1[None] / hx1[:, None, None, None]
    G2 = dN2[None] / hx2[:, None, None, None]
    AG1 = Aq[:, None, ..., 0, 0] * G1 + Aq[:, None, ..., 0, 1] * G2
    AG2 = Aq[:, None, ..., 1, 0] * G1 + Aq[:, None, ..., 1, 1] * G2
    Ke = np.einsum("cpxy,cqxy,cxy->cpq", G1, AG1, W) + np.einsum("cpxy,cqxy,cxy->cpq", G2, AG2, W)
    Me = np.einsum("pxy,qxy,cxy->cpq", N, N, W)
    glob = np.stack([(I + a) + n1 * (Jc + b) for a, b in local], axis=1)
    rows = np.repeat(glob, 4, axis=1).ravel()
    cols = np.tile(glob, (1, 4)).ravel()
    shape = (n1 * n1, n1 * n1)
    stiff = sp.coo_matrix((Ke.ravel(), (rows, cols)), shape=shape).tocsr()
    mass = sp.coo_matrix((Me.ravel(), (rows, cols)), shape=shape).tocsr()
    react = None
    if c is not None:
        cq = np.broadcast_to(np.asarray(c(X1, X2), dtype=float), X1.shape)
        bad = np.argwhere(~(cq >= 0.0))
        if bad.size:
            cell = int(bad[0, 0])
            raise AssemblyError(f"coefficient c is negative on cell ({I[cell]}, {Jc[cell]})")
        Ce = np.einsum("pxy,qxy,cxy->cpq", N, N, W * cq)
        react = sp.coo_matrix((Ce.ravel(), (rows, cols)), shape=shape).tocsr()
    return stiff, mass, react


def omega_matrices(mesh: CylinderMesh, coeffs: OperatorCoeffs = LAPLACIAN, order: int | None = None):
    """Stiffness, mass and reaction matrices on the full Omega grid."""
    if order is None:
        order = 2 if coeffs.is_laplacian else 3
    nodes = mesh.omega.points_1d
    if mesh.dim == 1:
        return _omega_matrices_1d(nodes, coeffs.A, coeffs.c, order)
    return _omega_matrices_2d(nodes, coeffs.A, coeffs.c, order)


def omega_interior(mesh: CylinderMesh) -> np.ndarray:
    """Indices of interior Omega nodes (x-fastest numbering)."""
    m = mesh.omega.subdivisions
    inner = np.arange(1, m)
    if mesh.dim == 1:
        return inner
    return (inner[None, :] + (m + 1) * inner[:, None]).ravel()


def load_vector(mesh: CylinderMesh, f, order: int = 4) -> np.ndarray:
    """Integrals of f against every Omega hat function (full Omega grid).

    ``f`` is a vectorized callable of the Omega coordinates or a sequence of
    spectral modes, in which case the truncated eigen-expansion is evaluated at
    the quadrature points.
    """
    from .spectral import eval_modes

    fun = f if callable(f) else (lambda *x: eval_modes(f, *x))
    nodes = mesh.omega.points_1d
    xq, wq, h = _interval_cells(nodes, order)
    t = (xq - nodes[:-1, None]) / h[:, None]
    sh = (1.0 - t, t)
    m = nodes.size - 1
    if mesh.dim == 1:
        fq = np.broadcast_to(np.asarray(fun(xq), dtype=float), xq.shape)
        b = np.zeros(m + 1)
        b[:-1] += (fq * sh[0] * wq).sum(1)
        b[1:] += (fq * sh[1] * wq).sum(1)
        return b
    X1 = xq[None, None, :, :]  # (cell j, qp, cell i, qp) layout via broadcasting
    X2 = xq[:, :, None, None]
    fq = np.broadcast_to(np.asarray(fun(X1, X2), dtype=float), (m, order, m, order))
    W = wq[:, :, None, None] * wq[None, None, :, :]
    b = np.zeros((m + 1, m + 1))  # [j, i]
    for bj in (0, 1):
        for ai in (0, 1):
            wts = fq * W * sh[bj][:, :, None, None] * sh[ai][None, None, :, :]
            b[bj : bj + m, ai : ai + m] += wts.sum(axis=(1, 3))
    return b.ravel()


def assemble_extension_system(
    mesh: CylinderMesh,
    params: FracParams,
    f,
    coeffs: OperatorCoeffs = LAPLACIAN,
    omega_order: int | None = None,
    rhs_order: int = 4,
) -> SparseSystem:
    """Free-dof system for the truncated extension problem.

    Matrix: int y^alpha (A grad_x' V . grad_x' W + V_y W_y + c V W).
    Right-hand side: d_s * int_Omega f tr(W), nonzero on bottom nodes only.
    """
    ky, my = y_matrices(mesh.ypart.points, params.alpha)
    stiff, mass, react = omega_matrices(mesh, coeffs, omega_order)
    inner = omega_interior(mesh)
    yfree = mesh.y_free()
    ky = ky[yfree][:, yfree]
    my = my[yfree][:, yfree]
    stiff = stiff[inner][:, inner]
    mass = mass[inner][:, inner]
    mat = sp.kron(my, stiff) + sp.kron(ky, mass)
    if react is not None:
        mat = mat + sp.kron(my, react[inner][:, inner])
    mat = sp.csr_matrix(mat)
    mat.sum_duplicates()
    mat.sort_indices()
    b_omega = params.d_s * load_vector(mesh, f, rhs_order)[inner]
    rhs = np.zeros(mat.shape[0])
    rhs[: inner.size] = b_omega
    return SparseSystem(matrix=mat, rhs=rhs, mesh=mesh, params=params)


def bottom_trace(system: SparseSystem, x_free: np.ndarray) -> np.ndarray:
    """Nodal values of tr V on the full Omega grid (zeros on the boundary)."""
    return system.expand(x_free)[: system.mesh.n_omega_nodes]


def polynomial_coefficient(coefs: Sequence[float]) -> Callable:
    """Vectorized callable for sum_i coefs[i] * x**i (n = 1 coefficients)."""
    coefs = tuple(float(v) for v in coefs)

    def fn(x):
        return np.polynomial.polynomial.polyval(np.asarray(x, dtype=float), coefs)

    return fn


def local_cell_matrix(mesh: CylinderMesh, alpha: float, i: int, k: int) -> np.ndarray:
    """4x4 Laplacian element matrix of the n = 1 cell (i, k), local order
    (i,k), (i+1,k), (i,k+1), (i+1,k+1).  Mostly useful for testing."""
    x = mesh.omega.points_1d
    hx = x[i + 1] - x[i]
    kx = np.array([[1.0, -1.0], [-1.0, 1.0]]) / hx
    mx = np.array([[2.0, 1.0], [1.0, 2.0]]) * hx / 6.0
    ky, my = y_matrices(mesh.ypart.points[k : k + 2], alpha)
    return np.kron(my.toarray(), kx) + np.kron(ky.toarray(), mx)


__all__ = [
    "LAPLACIAN",
    "OperatorCoeffs",
    "SparseSystem",
    "assemble_extension_system",
    "bottom_trace",
    "load_vector",
    "omega_interior",
    "omega_matrices",
    "polynomial_coefficient",
    "weighted_moment",
    "y_matrices",
]

