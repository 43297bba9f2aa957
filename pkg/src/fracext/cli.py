"""Command-line entry point: ``fracext {solve,converge,oracle-compare,selftest}``.

Exit codes: 0 success, 2 configuration error, 3 solver failure, 4 I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import kernels
from .exceptions import AssemblyError, ConfigError, DomainError, SolverError
from .harness import (
    StudyConfig,
    emit_csv,
    emit_timings,
    oracle_compare,
    run_study,
    selftest_table,
    solve_level,
)

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_IO = 0, 2, 3, 4
SELFTEST_TOL = 1e-10


def _load(args) -> StudyConfig:
    if args.config is None:
        raise ConfigError("--config is required for this command")
    return StudyConfig.load(args.config)


def _out_path(args, cfg: StudyConfig | None, default: str) -> str:
    if args.out:
        return args.out
    if cfg is not None and cfg.output:
        return cfg.output
    return default


def _check_writable(path: str) -> None:
    """Fail fast (before any solving) when the output cannot be created."""
    with open(path, "a", encoding="utf-8"):
        pass


def cmd_solve(args) -> int:
    cfg = _load(args)
    _check_writable(_out_path(args, cfg, "trace.csv"))
    sol = solve_level(cfg, len(cfg.levels) - 1, None)
    mesh = sol.mesh
    x = mesh.omega.points_1d
    out = _out_path(args, cfg, "trace.csv")
    with open(out, "w", encoding="utf-8", newline="\n") as fh:
        if mesh.dim == 1:
            fh.write("x,U\n")
            for xi, ui in zip(x, sol.trace):
                fh.write(f"{xi:.16g},{ui:.16g}\n")
        else:
            fh.write("x1,x2,U\n")
            n1 = x.size
            U = sol.trace.reshape(n1, n1)
            for j in range(n1):
                for i in range(n1):
                    fh.write(f"{x[i]:.16g},{x[j]:.16g},{U[j, i]:.16g}\n")
    if args.dump_matrix:
        sol.system.dump_matrix_market(args.dump_matrix)
    summary = mesh.summary()
    summary.update(cg_iters=sol.report.iterations, relative_residual=sol.report.relative_residual)
    print(json.dumps(summary))
    return EXIT_OK


def cmd_converge(args) -> int:
    cfg = _load(args)
    deterministic = args.threads == 1

    def progress(row):
        if not args.quiet:
            print(
                f"level {row['level']}: M={row['M']} cells={row['cells']} "
                f"err_h1w={row['err_h1w']:.4e} err_hs={row['err_hs']:.4e}",
                file=sys.stderr,
            )

    out = _out_path(args, cfg, "convergence.csv")
    _check_writable(out)
    table = run_study(cfg, progress)
    emit_csv(table, out, timings=not deterministic)
    if deterministic:
        emit_timings(table, out + ".timings.csv")
    if not args.quiet:
        print(f"rate_h1w={table.rate('err_h1w'):.4f} rate_hs={table.rate('err_hs'):.4f}", file=sys.stderr)
    return EXIT_OK


def cmd_oracle_compare(args) -> int:
    cfg = _load(args)
    rows = oracle_compare(cfg)
    out = _out_path(args, cfg, "oracle.csv")
    with open(out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("N_omega,M_cyl,l2_gap\n")
        for N, M, gap in rows:
            fh.write(f"{N},{M},{gap:.16g}\n")
    return EXIT_OK


def cmd_selftest(args) -> int:
    rows = selftest_table()
    out = _out_path(args, None, "selftest.csv")
    with open(out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("nu,z,computed,oracle,rel_err\n")
        for nu, z, k, ref, err in rows:
            fh.write(f"{nu:.16g},{z:.16g},{k:.16g},{ref:.16g},{err:.16g}\n")
    worst = max(r[4] for r in rows)
    print(f"bessel_k max relative error {worst:.3e} over {len(rows)} points")
    return EXIT_OK if worst < SELFTEST_TOL else EXIT_SOLVER


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fracext", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON study configuration")
        p.add_argument("--out", help="output CSV path")
        p.add_argument("--threads", type=int, default=1, help="threads for the compiled kernels (default 1)")
        return p

    p = common(sub.add_parser("solve", help="solve at the finest configured level and write the trace"))
    p.add_argument("--dump-matrix", metavar="PATH", help="also write the system matrix (MatrixMarket)")
    p.set_defaults(func=cmd_solve)
    p = common(sub.add_parser("converge", help="run a convergence study"))
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_converge)
    p = common(sub.add_parser("oracle-compare", help="compare against the matrix-power reference"))
    p.set_defaults(func=cmd_oracle_compare)
    p = common(sub.add_parser("selftest", help="tabulate bessel_k against its integral representation"))
    p.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    kernels.set_num_threads(args.threads)
    try:
        return args.func(args)
    except (ConfigError, DomainError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SolverError, AssemblyError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
