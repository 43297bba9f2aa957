"""Fractional powers of elliptic operators through the truncated extension problem.

The fractional solution u of L^s u = f on Omega is the trace at y = 0 of a
degenerate elliptic problem div(y^alpha grad U) = 0 on Omega x (0, Y),
discretized here with tensor-product Q1 elements on graded meshes in y.
"""

from .exceptions import (
    AssemblyError,
    ConfigError,
    DomainError,
    FracExtError,
    SingularPointError,
    SolverError,
)
from .kernels import BACKEND
from .specfun import FracParams, bessel_k, gamma_fn, psi_pair

__version__ = "0.1.0"

__all__ = [
    "AssemblyError",
    "BACKEND",
    "ConfigError",
    "DomainError",
    "FracExtError",
    "FracParams",
    "SingularPointError",
    "SolverError",
    "bessel_k",
    "gamma_fn",
    "psi_pair",
]
