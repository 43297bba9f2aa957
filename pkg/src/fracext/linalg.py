"""Sparse CG with Jacobi preconditioning and a dense generalized eigensolver."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from . import kernels
from .exceptions import SolverError

# CSR storage is scipy's (indptr, indices, data)
CsrMatrix = sp.csr_matrix


# true residuals below FLOOR_FACTOR * (rounding floor) count as converged
FLOOR_FACTOR = 10.0


@dataclass(frozen=True)
class SolveReport:
    """Outcome of a CG solve.

    ``tolerance`` is the target actually applied: the requested relative
    tolerance, raised to FLOOR_FACTOR times ``rounding_floor`` when the
    latter is larger.  ``converged`` is ``relative_residual <= tolerance``.
    """

    iterations: int
    relative_residual: float
    converged: bool
    restarts: int = 0
    tolerance: float = float("nan")
    rounding_floor: float = 0.0


def rounding_floor(A, x, b) -> float:
    """eps * || |A||x| + |b| ||_2 / ||b||_2.

    The relative residual of x cannot be evaluated (let alone driven) below
    roughly this level in double precision.
    """
    b = np.asarray(b, dtype=float)
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return 0.0
    r = abs(A) @ np.abs(x) + np.abs(b)
    return float(np.finfo(float).eps * np.linalg.norm(r) / bnorm)


def as_csr(A) -> sp.csr_matrix:
    A = sp.csr_matrix(A, dtype=float)
    if A.shape[0] != A.shape[1]:
        raise ValueError(f"matrix must be square, got shape {A.shape}")
    A.sum_duplicates()
    A.sort_indices()
    return A


def matvec(A: sp.csr_matrix, x: np.ndarray) -> np.ndarray:
    A = as_csr(A)
    return kernels.csr_matvec(A.indptr, A.indices, A.data, x, kernels.get_num_threads())


def cg_solve(
    A,
    b,
    tol: float = 1e-12,
    maxiter: int | None = None,
    precond: str = "jacobi",
    x0=None,
    callback=None,
    max_restarts: int = 5,
):
    """Solve A x = b for SPD A by (Jacobi-preconditioned) conjugate gradients.

    Convergence means ||b - A x||_2 <= tol * ||b||_2 for the true residual,
    with tol raised to FLOOR_FACTOR * rounding_floor(A, x, b) when that is
    larger (strongly graded meshes produce rows whose entries cancel by many
    orders of magnitude, so 1e-12 can be out of reach in double precision).
    When the recursively updated residual has drifted, CG is restarted from
    the current iterate.  ``callback(x)`` is invoked after every iteration and
    forces the NumPy implementation.

    Returns ``(x, SolveReport)``.  Exceeding ``maxiter`` returns the last
    iterate with ``converged=False``.
    """
    if precond not in ("none", "jacobi"):
        raise ValueError(f"unknown preconditioner {precond!r}")
    if not (0.0 < tol < 1.0):
        raise ValueError(f"tol must lie in (0, 1), got {tol!r}")
    A = as_csr(A)
    b = np.asarray(b, dtype=float)
    n = b.size
    if A.shape[0] != n:
        raise ValueError(f"dimension mismatch: matrix {A.shape}, rhs {b.shape}")
    if maxiter is None:
        maxiter = max(10 * n, 1000)
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return np.zeros(n), SolveReport(0, 0.0, True, 0, tol, 0.0)
    jacobi = precond == "jacobi"
    if jacobi and np.any(A.diagonal() <= 0.0):
        raise SolverError("Jacobi preconditioner needs a positive diagonal")
    impl = kernels if callback is None else kernels.fallback
    extra = {} if callback is None else {"callback": callback}
    total = 0
    restarts = 0
    while True:
        x, it, _ = impl.pcg_jacobi(
            A.indptr, A.indices, A.data, b, x, tol, maxiter - total, jacobi,
            kernels.get_num_threads(), **extra,
        )
        total += it
        rel = float(np.linalg.norm(b - A @ x) / bnorm)
        floor = rounding_floor(A, x, b)
        target = max(tol, FLOOR_FACTOR * floor)
        if rel <= target or total >= maxiter or restarts >= max_restarts or it == 0:
            break
        restarts += 1
    return x, SolveReport(total, rel, rel <= target, restarts, target, floor)


def sym_eig_dense(A, B=None):
    """Generalized symmetric eigenproblem A v = mu B v with B SPD.

    Returns eigenvalues in ascending order and B-orthonormal eigenvectors
    (columns).
    """
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    if A.shape != (n, n):
        raise ValueError("A must be square")
    B = np.eye(n) if B is None else np.asarray(B, dtype=float)
    scale = max(np.max(np.abs(A)), 1e-300)
    if np.max(np.abs(A - A.T)) > 1e-12 * scale:
        raise SolverError("A is not symmetric")
    try:
        scipy.linalg.cholesky(B, lower=True)
    except np.linalg.LinAlgError as exc:
        raise SolverError("B is not symmetric positive definite") from exc
    try:
        mu, V = scipy.linalg.eigh(A, B)
    except np.linalg.LinAlgError as exc:
        raise SolverError(f"eigensolve failed: {exc}") from exc
    return mu, V
