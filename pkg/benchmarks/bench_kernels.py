"""Compare the compiled kernels with the NumPy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--M 32]

Times the Bessel array kernel, one CSR matvec and a full Jacobi-PCG solve on
an assembled n = 2 extension system, and checks that both backends agree.
"""

import argparse
import time

import numpy as np

from fracext import kernels
from fracext.assembly import assemble_extension_system
from fracext.mesh import OmegaSpec, build_cylinder_mesh, default_grading, make_y_partition
from fracext.spectral import unit_mode_rhs
from fracext.specfun import FracParams


def best_of(fn, repeat):
    times = []
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--M", type=int, default=32, help="cells per direction of the test system")
    ap.add_argument("--s", type=float, default=0.3)
    args = ap.parse_args()

    if kernels.compiled is None:
        print("compiled extension not built; only the fallback is timed")
    backends = {"python": kernels.fallback}
    if kernels.compiled is not None:
        backends["compiled"] = kernels.compiled

    z = np.geomspace(1e-6, 50.0, 20000)
    s = args.s
    mesh = build_cylinder_mesh(
        OmegaSpec("unit-square", args.M), make_y_partition(args.M, 3.0, default_grading(1 - 2 * s))
    )
    sysm = assemble_extension_system(mesh, FracParams(s), unit_mode_rhs(2, s))
    A = sysm.matrix
    x = np.random.default_rng(0).standard_normal(A.shape[0])
    print(f"system: {A.shape[0]} unknowns, {A.nnz} nonzeros; bessel: {z.size} points")

    cases = {
        "bessel_k_scaled_array": lambda m: m.bessel_k_scaled_array(s, z),
        "csr_matvec": lambda m: m.csr_matvec(A.indptr, A.indices, A.data, x, 1),
        "pcg_jacobi": lambda m: m.pcg_jacobi(
            A.indptr, A.indices, A.data, sysm.rhs, np.zeros_like(sysm.rhs), 1e-10, 5000, True, 1
        )[0],
    }
    print(f"{'kernel':24s}" + "".join(f"{name:>14s}" for name in backends) + f"{'speedup':>10s}{'max diff':>12s}")
    for label, fn in cases.items():
        times, outs = [], []
        for mod in backends.values():
            t, out = best_of(lambda: fn(mod), args.repeat)
            times.append(t)
            outs.append(np.asarray(out))
        line = f"{label:24s}" + "".join(f"{1e3 * t:12.2f}ms" for t in times)
        if len(times) == 2:
            diff = np.abs(outs[0] - outs[1]).max() / np.abs(outs[0]).max()
            line += f"{times[0] / times[1]:9.1f}x{diff:12.1e}"
        print(line)


if __name__ == "__main__":
    main()
