"""Exact spectral reference solutions on the unit interval and unit square.

Dirichlet eigenpairs are phi_m = sqrt(2) sin(m pi x), lambda = pi^2 m^2 on
(0, 1) and phi_mn = 2 sin(m pi x1) sin(n pi x2), lambda = pi^2 (m^2 + n^2) on
(0, 1)^2, both L^2-normalized.  The fractional solution and its extension
are u = sum u_k phi_k and U(x', y) = sum u_k phi_k(x') psi_k(y).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import kernels
from .exceptions import DomainError, SingularPointError
from .quadrature import gauss_legendre
from .specfun import FracParams


def dirichlet_eigenvalue(index: Sequence[int]) -> float:
    return math.pi**2 * sum(int(m) ** 2 for m in index)


@dataclass(frozen=True)
class SpectralMode:
    index: tuple
    coeff: float
    lam: float = field(default=None)

    def __post_init__(self):
        idx = tuple(int(m) for m in self.index)
        if not idx or len(idx) > 2 or min(idx) < 1:
            raise DomainError(f"mode index must be one or two positive integers, got {self.index!r}")
        object.__setattr__(self, "index", idx)
        object.__setattr__(self, "coeff", float(self.coeff))
        lam = dirichlet_eigenvalue(idx)
        if self.lam is not None and not math.isclose(self.lam, lam, rel_tol=1e-14):
            raise DomainError(f"eigenvalue {self.lam!r} does not match index {idx}")
        object.__setattr__(self, "lam", lam)

    @property
    def dim(self) -> int:
        return len(self.index)


@dataclass(frozen=True)
class SpectralSolution:
    modes: tuple
    params: FracParams

    @property
    def dim(self) -> int:
        return self.modes[0].dim


def sine_modes(terms, dim: int | None = None) -> list[SpectralMode]:
    """Modes for sum_j a_j prod_i sin(m_ij pi x_i) given as (index, a_j) pairs."""
    modes = []
    for index, amp in terms:
        index = (index,) if np.isscalar(index) else tuple(index)
        if dim is not None and len(index) != dim:
            raise DomainError(f"index {index} does not match dimension {dim}")
        modes.append(SpectralMode(index, amp / math.sqrt(2.0) ** len(index)))
    return modes


def unit_mode_rhs(dim: int, s: float) -> list[SpectralMode]:
    """f = lambda_1^s prod sin(pi x_i), whose fractional solution is prod sin(pi x_i)."""
    index = (1,) * dim
    return sine_modes([(index, dirichlet_eigenvalue(index) ** s)])


def _phi_1d(m, x):
    return math.sqrt(2.0) * np.sin(m * math.pi * np.asarray(x, dtype=float))


def _dphi_1d(m, x):
    return math.sqrt(2.0) * m * math.pi * np.cos(m * math.pi * np.asarray(x, dtype=float))


def eigenfunction(index, *x):
    """phi_index evaluated at the coordinate arrays x (broadcast)."""
    val = 1.0
    for m, xi in zip(index, x):
        val = val * _phi_1d(m, xi)
    return val


def eigenfunction_grad(index, *x) -> list:
    grads = []
    for d in range(len(index)):
        g = 1.0
        for e, (m, xi) in enumerate(zip(index, x)):
            g = g * (_dphi_1d(m, xi) if e == d else _phi_1d(m, xi))
        grads.append(g)
    return grads


def eval_modes(modes: Sequence[SpectralMode], *x):
    total = 0.0
    for mode in modes:
        total = total + mode.coeff * eigenfunction(mode.index, *x)
    return total


def spectral_fractional_solve(f_modes: Sequence[SpectralMode], s: float) -> SpectralSolution:
    """Mode-wise u_k = lambda_k^(-s) f_k."""
    params = FracParams(s)
    modes = tuple(SpectralMode(m.index, m.lam ** (-params.s) * m.coeff) for m in f_modes)
    return SpectralSolution(modes=modes, params=params)


def apply_fractional_power(modes: Sequence[SpectralMode], s: float) -> list[SpectralMode]:
    """Mode-wise lambda_k^s w_k."""
    return [SpectralMode(m.index, m.lam**s * m.coeff) for m in modes]


def psi_profile(params: FracParams, lam: float, y):
    """Vectorized psi and d psi/dy at heights y > 0 (psi = 1 and dpsi = nan at y = 0)."""
    y = np.asarray(y, dtype=float)
    sq = math.sqrt(lam)
    if params.is_half:
        psi = np.exp(-sq * y)
        return psi, -sq * psi
    z = sq * y
    pos = z > 0.0
    psi = np.ones_like(z)
    dpsi = np.full_like(z, np.nan)
    zp = z[pos]
    if zp.size:
        s = params.s
        logz = np.log(zp)
        ks = kernels.bessel_k_scaled_array(s, zp)
        k1s = kernels.bessel_k_scaled_array(1.0 - s, zp)
        with np.errstate(under="ignore"):
            psi[pos] = np.exp(math.log(params.c_s) + s * logz + np.log(ks) - zp)
            dpsi[pos] = -np.exp(math.log(params.c_s * sq) + s * logz + np.log(k1s) - zp)
    return psi, dpsi


def exact_extension_eval(sol: SpectralSolution, x, y: float):
    """Value and gradient (d/dx'..., d/dy) of the exact extension at (x', y)."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.size != sol.dim:
        raise DomainError(f"point {x} does not match dimension {sol.dim}")
    y = float(y)
    if y < 0.0:
        raise DomainError(f"height must be nonnegative, got {y!r}")
    if y == 0.0 and not sol.params.is_half:
        raise SingularPointError("the y-derivative of the extension is singular at y = 0")
    value = 0.0
    grad = np.zeros(sol.dim + 1)
    for mode in sol.modes:
        psi, dpsi = psi_profile(sol.params, mode.lam, np.array([y]))
        phi = float(eigenfunction(mode.index, *x))
        g = [float(v) for v in eigenfunction_grad(mode.index, *x)]
        value += mode.coeff * phi * psi[0]
        grad[:-1] += mode.coeff * np.array(g) * psi[0]
        grad[-1] += mode.coeff * phi * dpsi[0]
    return value, grad


def extension_value(sol: SpectralSolution, x, y: float) -> float:
    """Value of the exact extension; defined at y = 0 (the trace) for all s."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    total = 0.0
    for mode in sol.modes:
        psi, _ = psi_profile(sol.params, mode.lam, np.array([float(y)]))
        total += mode.coeff * float(eigenfunction(mode.index, *x)) * psi[0]
    return total


def hs_norm(modes: Sequence[SpectralMode], sigma: float) -> float:
    """(sum lambda_k^sigma w_k^2)^(1/2)."""
    if not (0.0 <= sigma <= 1.0):
        raise DomainError(f"sigma must lie in [0, 1], got {sigma!r}")
    return math.sqrt(math.fsum(m.lam**sigma * m.coeff**2 for m in modes))


def tail_energy(sol: SpectralSolution, Y: float) -> float:
    """Squared weighted energy of the exact extension over Omega x (Y, inf).

    Evaluated mode-wise from the boundary term -y^alpha psi psi' at y = Y.
    """
    total = 0.0
    for mode in sol.modes:
        psi, dpsi = psi_profile(sol.params, mode.lam, np.array([float(Y)]))
        total += mode.coeff**2 * (-(Y**sol.params.alpha) * psi[0] * dpsi[0])
    return total


def hat_sine_integrals(nodes: np.ndarray, K: int, order: int | None = None) -> np.ndarray:
    """A[m-1, i] = int hat_i(x) sqrt(2) sin(m pi x) dx on a 1-D grid, m = 1..K.

    Composite Gauss quadrature per cell with enough points to resolve the
    highest frequency.
    """
    nodes = np.asarray(nodes, dtype=float)
    ncell = nodes.size - 1
    if order is None:
        hmax = np.max(np.diff(nodes))
        order = 8 + 2 * int(math.ceil(K * hmax))
    g, w = gauss_legendre(order, 0.0, 1.0)
    h = np.diff(nodes)
    xq = nodes[:-1, None] + h[:, None] * g[None, :]
    wq = h[:, None] * w[None, :]
    m = np.arange(1, K + 1)[:, None, None]
    S = math.sqrt(2.0) * np.sin(m * math.pi * xq[None]) * wq[None]
    A = np.zeros((K, ncell + 1))
    A[:, :-1] += (S * (1.0 - g)[None, None, :]).sum(-1)
    A[:, 1:] += (S * g[None, None, :]).sum(-1)
    return A


def project_trace(U, dim: int, K: int | None = None) -> list[SpectralMode]:
    """Eigen-coefficients int_Omega U phi_k of a piecewise Q1 trace.

    ``U`` holds nodal values on the uniform full Omega grid (x fastest).
    ``K`` is the cutoff per coordinate direction (default 4 * subdivisions).
    """
    U = np.asarray(U, dtype=float)
    n1 = round(U.size ** (1.0 / dim))
    if n1**dim != U.size:
        raise DomainError(f"{U.size} values do not form a {dim}-D grid")
    m = n1 - 1
    K = 4 * m if K is None else int(K)
    A = hat_sine_integrals(np.linspace(0.0, 1.0, n1), K)
    if dim == 1:
        c = A @ U
        return [SpectralMode((k + 1,), c[k]) for k in range(K)]
    C = A @ U.reshape(n1, n1) @ A.T  # [n (x2), m (x1)]
    return [SpectralMode((i + 1, j + 1), C[j, i]) for j in range(K) for i in range(K)]


def mode_difference(a: Sequence[SpectralMode], b: Sequence[SpectralMode]) -> list[SpectralMode]:
    """Coefficient-wise a - b over the union of indices."""
    acc: dict = {}
    for mode in a:
        acc[mode.index] = acc.get(mode.index, 0.0) + mode.coeff
    for mode in b:
        acc[mode.index] = acc.get(mode.index, 0.0) - mode.coeff
    return [SpectralMode(k, v) for k, v in acc.items()]
