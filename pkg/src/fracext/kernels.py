"""Backend selection for the hot kernels.

The compiled extension ``fracext._core`` is used when it was built; otherwise
(or when FRACEXT_PURE_PYTHON=1 is set) the NumPy fallback is used.  Both
expose the same functions: ``bessel_k_scaled_array``, ``csr_matvec`` and
``pcg_jacobi``.
"""

from __future__ import annotations

import os

from . import _fallback as fallback

compiled = None
if os.environ.get("FRACEXT_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _core as compiled
    except ImportError:  # extension not built
        compiled = None

active = compiled if compiled is not None else fallback
BACKEND = active.BACKEND

bessel_k_scaled_array = active.bessel_k_scaled_array
csr_matvec = active.csr_matvec
pcg_jacobi = active.pcg_jacobi

_threads = 1


def set_num_threads(n: int) -> None:
    """Thread count used by the compiled matvec (ignored by the fallback)."""
    global _threads
    _threads = max(1, int(n))


def get_num_threads() -> int:
    return _threads
