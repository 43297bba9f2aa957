"""Error functionals: weighted energy seminorm and the H^s trace error.

The weighted energy error is integrated with tensor rules: Gauss points in
x' and, in y, Gauss points on every interval except the first, which is cut
dyadically toward y = 0; its innermost piece uses a Gauss-Jacobi rule whose
weight carries the leading singularity of y^alpha |grad(U - V)|^2.

Near y = 0 that integrand is a combination of y^alpha, y^0 and y^-alpha, so no
single Jacobi weight makes it polynomial; the dyadic cuts (16 by default)
push the non-polynomial remainder below 1e-6 relative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .mesh import CylinderMesh
from .quadrature import composite_legendre, gauss_jacobi_origin
from .spectral import (
    SpectralMode,
    SpectralSolution,
    eigenfunction,
    hs_norm,
    mode_difference,
    project_trace,
    psi_profile,
    tail_energy,
)
from .spectral import _dphi_1d, _phi_1d


@dataclass(frozen=True)
class QuadRule:
    """Per-cell quadrature orders for the error integrals."""

    x_order: int = 4
    y_order: int = 4
    jacobi_order: int = 6
    subdivisions: int = 16

    def singular_exponent(self, alpha: float) -> float:
        """Exponent of the Jacobi weight used next to y = 0.

        Near y = 0 the squared error behaves like y^alpha for alpha <= 0 and
        like y^-alpha for alpha > 0, i.e. y^-|alpha| in both cases.
        """
        return -abs(alpha)


def _geometric_edges(points: np.ndarray, ratio: float) -> tuple[np.ndarray, np.ndarray]:
    """Edges of the intervals above the first one, each split geometrically so
    that no piece has right/left endpoint ratio above ``ratio``; plus the
    mesh interval each piece belongs to."""
    edges = [points[1:2]]
    owner = []
    for k in range(1, points.size - 1):
        a, b = points[k], points[k + 1]
        n = max(1, int(math.ceil(math.log(b / a) / math.log(ratio) - 1e-12)))
        edges.append(a * (b / a) ** (np.arange(1, n + 1) / n))
        owner.extend([k] * n)
    e = np.concatenate(edges)
    e[-1] = points[-1]
    return e, np.array(owner, dtype=int)


def y_quadrature(points: np.ndarray, alpha: float, rule: QuadRule = QuadRule()):
    """Nodes, effective weights (including y^alpha) and interval ids in y.

    Intervals [a, b] with b/a > 2 (the first few of a strongly graded
    partition) are split geometrically, since the exact field is a function
    of log y there rather than a polynomial.
    """
    points = np.asarray(points, dtype=float)
    beta = rule.singular_exponent(alpha)
    y1 = points[1]
    L = max(int(rule.subdivisions), 0)
    inner = y1 / 2.0**L
    yj, wj = gauss_jacobi_origin(rule.jacobi_order, beta, inner)
    wj = wj * yj ** (alpha - beta)
    ys = [yj]
    ws = [wj]
    if L:
        edges = inner * 2.0 ** np.arange(L + 1)
        yd, wd = composite_legendre(edges, rule.jacobi_order)
        ys.append(yd.ravel())
        ws.append((wd * yd**alpha).ravel())
    first = np.concatenate(ys)
    wfirst = np.concatenate(ws)
    if points.size > 2:
        edges, owner = _geometric_edges(points, 2.0)
        yr, wr = composite_legendre(edges, rule.y_order)
        yrest, wrest = yr.ravel(), (wr * yr**alpha).ravel()
        crest = np.repeat(owner, rule.y_order)
    else:
        yrest = wrest = np.zeros(0)
        crest = np.zeros(0, dtype=int)
    yq = np.concatenate([first, yrest])
    wq = np.concatenate([wfirst, wrest])
    cell = np.concatenate([np.zeros(first.size, dtype=int), crest])
    return yq, wq, cell


def _hat_eval(points: np.ndarray, xq: np.ndarray, cell: np.ndarray):
    """Dense value / derivative matrices of 1-D hat functions at xq."""
    n = points.size
    a = points[cell]
    h = points[cell + 1] - a
    t = (xq - a) / h
    B = np.zeros((xq.size, n))
    D = np.zeros((xq.size, n))
    r = np.arange(xq.size)
    B[r, cell] = 1.0 - t
    B[r, cell + 1] = t
    D[r, cell] = -1.0 / h
    D[r, cell + 1] = 1.0 / h
    return B, D


def x_quadrature(points: np.ndarray, order: int):
    xq, wq = composite_legendre(points, order)
    cell = np.repeat(np.arange(points.size - 1), order)
    return xq.ravel(), wq.ravel(), cell


@dataclass(frozen=True)
class SeparableTerm:
    """coeff * prod_d f_d(x_d) * g(y), with value/derivative callables.

    ``xfactors`` holds one (f, df) pair per Omega direction; ``yfactor`` maps a
    y-array to (g, dg).
    """

    coeff: float
    xfactors: tuple
    yfactor: Callable


def spectral_terms(sol: SpectralSolution) -> list[SeparableTerm]:
    terms = []
    for mode in sol.modes:
        xf = tuple(
            ((lambda x, m=m: _phi_1d(m, x)), (lambda x, m=m: _dphi_1d(m, x))) for m in mode.index
        )
        yf = lambda y, lam=mode.lam: psi_profile(sol.params, lam, y)  # noqa: E731
        terms.append(SeparableTerm(mode.coeff, xf, yf))
    return terms


def weighted_h1_error(
    V, exact, mesh: CylinderMesh, rule: QuadRule = QuadRule(), alpha=None, include_tail: bool = True
) -> float:
    """(int y^alpha |grad(exact - V)|^2)^(1/2), V extended by zero above Y.

    ``V`` is a nodal vector over all mesh nodes; ``exact`` a SpectralSolution
    or a sequence of SeparableTerm (then ``alpha`` must be given).  For a
    SpectralSolution the energy of the exact field over Omega x (Y, inf) is
    added in closed form unless ``include_tail`` is false; otherwise only the
    cells of the mesh are integrated.
    """
    tail = 0.0
    if isinstance(exact, SpectralSolution):
        alpha = exact.params.alpha
        terms = spectral_terms(exact)
        if include_tail:
            tail = tail_energy(exact, mesh.ypart.Y)
    else:
        terms = list(exact)
        if alpha is None:
            raise ValueError("alpha is required for non-spectral reference fields")
    ypts = mesh.ypart.points
    xpts = mesh.omega.points_1d
    yq, wy, ycell = y_quadrature(ypts, alpha, rule)
    xq, wx, xcell = x_quadrature(xpts, rule.x_order)
    By, Dy = _hat_eval(ypts, yq, ycell)
    Bx, Dx = _hat_eval(xpts, xq, xcell)
    yvals = [t.yfactor(yq) for t in terms]
    n1 = xpts.size
    V = np.asarray(V, dtype=float)
    if mesh.dim == 1:
        Vg = V.reshape(ypts.size, n1)
        ex_x = sum(t.coeff * np.outer(g, t.xfactors[0][1](xq)) for t, (g, _) in zip(terms, yvals))
        ex_y = sum(t.coeff * np.outer(dg, t.xfactors[0][0](xq)) for t, (_, dg) in zip(terms, yvals))
        e_x = ex_x - By @ Vg @ Dx.T
        e_y = ex_y - Dy @ Vg @ Bx.T
        dens = e_x**2 + e_y**2
        return float(np.sqrt(wy @ dens @ wx + tail))
    Vg = V.reshape(ypts.size, n1, n1)  # [k, j (x2), i (x1)]
    # contract the Omega directions once
    VB = np.einsum("kji,qi->kjq", Vg, Bx)
    VD = np.einsum("kji,qi->kjq", Vg, Dx)
    V_bb = np.einsum("kjq,pj->kpq", VB, Bx)  # value in x', per y node
    V_d1 = np.einsum("kjq,pj->kpq", VD, Bx)  # d/dx1
    V_d2 = np.einsum("kjq,pj->kpq", VB, Dx)  # d/dx2
    fx = [
        (t.xfactors[0][0](xq), t.xfactors[0][1](xq), t.xfactors[1][0](xq), t.xfactors[1][1](xq))
        for t in terms
    ]
    W2 = np.outer(wx, wx)  # [p (x2), q (x1)]
    total = 0.0
    chunk = 16
    for start in range(0, yq.size, chunk):
        sl = slice(start, start + chunk)
        e1 = -np.tensordot(By[sl], V_d1, axes=(1, 0))
        e2 = -np.tensordot(By[sl], V_d2, axes=(1, 0))
        e3 = -np.tensordot(Dy[sl], V_bb, axes=(1, 0))
        for t, (g, dg), (f1, df1, f2, df2) in zip(terms, yvals, fx):
            c = t.coeff
            e1 += c * g[sl, None, None] * np.outer(f2, df1)[None]
            e2 += c * g[sl, None, None] * np.outer(df2, f1)[None]
            e3 += c * dg[sl, None, None] * np.outer(f2, f1)[None]
        dens = e1**2 + e2**2 + e3**2
        total += float(np.einsum("y,ypq,pq->", wy[sl], dens, W2))
    return float(np.sqrt(total + tail))


def trace_hs_error(U, u_modes: Sequence[SpectralMode], s: float, dim: int, K: int | None = None) -> float:
    """||u - U||_{H^s} with U given by nodal values on the full Omega grid."""
    proj = project_trace(U, dim, K)
    return hs_norm(mode_difference(u_modes, proj), s)


def trace_l2_error(U, u_modes: Sequence[SpectralMode], dim: int, order: int = 6) -> float:
    """Direct L^2(Omega) quadrature of u - U for a nodal Q1 trace U."""
    U = np.asarray(U, dtype=float)
    n1 = round(U.size ** (1.0 / dim))
    pts = np.linspace(0.0, 1.0, n1)
    xq, wx, cell = x_quadrature(pts, order)
    B, _ = _hat_eval(pts, xq, cell)
    if dim == 1:
        diff = sum(m.coeff * eigenfunction(m.index, xq) for m in u_modes) - B @ U
        return float(np.sqrt(wx @ diff**2))
    Ug = B @ U.reshape(n1, n1) @ B.T  # [x2, x1]
    X2, X1 = np.meshgrid(xq, xq, indexing="ij")
    diff = sum(m.coeff * eigenfunction(m.index, X1, X2) for m in u_modes) - Ug
    return float(np.sqrt(np.einsum("pq,p,q->", diff**2, wx, wx)))


__all__ = [
    "QuadRule",
    "SeparableTerm",
    "spectral_terms",
    "trace_hs_error",
    "trace_l2_error",
    "weighted_h1_error",
    "x_quadrature",
    "y_quadrature",
]
