"""Convergence studies: configuration, refinement loops, rate fits and CSV output."""

from __future__ import annotations

import csv
import json
import math
import time
from dataclasses import dataclass, field, fields
from typing import Sequence

import numpy as np
import scipy.integrate

from . import kernels
from .assembly import OperatorCoeffs, assemble_extension_system, polynomial_coefficient
from .errors import QuadRule, trace_hs_error, weighted_h1_error
from .exceptions import ConfigError, SolverError
from .linalg import cg_solve
from .mesh import OmegaSpec, build_cylinder_mesh, choose_truncation, default_grading, make_y_partition
from .oracle_mtt import Operator1D, l2_gap, mtt_solve
from .spectral import (
    dirichlet_eigenvalue,
    eval_modes,
    sine_modes,
    spectral_fractional_solve,
    unit_mode_rhs,
)
from .specfun import FracParams, bessel_k

CSV_COLUMNS = ("level", "M", "cells", "dofs", "Y", "err_h1w", "err_hs", "assemble_ms", "solve_ms", "cg_iters")
DOMAINS = {"interval": "unit-interval", "square": "unit-square"}


def _sig16(v: float) -> float:
    """v rounded to 16 significant digits (what the CSV stores)."""
    return float(f"{v:.16g}")


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.16g}"


@dataclass
class StudyConfig:
    """Study parameters; JSON files use these field names verbatim.

    domain: "interval" or "square"; mesh: "uniform" or "graded" with
    gamma "auto" (1.05 * 3/(1 - alpha)) or a number; levels: strictly
    increasing M values (cells per direction of Omega and in y);
    truncation: "auto" (choose_truncation with eps = #T_prev^(-1/(n+1))) or a
    fixed height; rhs: "unit-mode" or a list of {"index": [...], "amplitude": a}
    giving f = sum a prod sin(m pi x); operator: null or {"a": [...], "c": [...]}
    polynomial coefficients (n = 1 only); mtt_levels: oracle grid sizes for
    oracle-compare (default 4 * M).
    """

    domain: str = "interval"
    s: float = 0.5
    mesh: str = "graded"
    gamma: object = "auto"
    levels: list = field(default_factory=lambda: [8, 16, 32])
    truncation: object = "auto"
    C: float = 1.0
    rhs: object = "unit-mode"
    operator: dict | None = None
    tol: float = 1e-12
    maxiter: int | None = None
    quad: dict = field(default_factory=dict)
    mtt_levels: list | None = None
    output: str | None = None

    def __post_init__(self):
        self.validate()

    @classmethod
    def from_dict(cls, data: dict) -> "StudyConfig":
        if not isinstance(data, dict):
            raise ConfigError("configuration must be a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown configuration keys: {', '.join(unknown)}")
        return cls(**data)

    @classmethod
    def load(cls, path) -> "StudyConfig":
        try:
            with open(path, encoding="utf-8") as fh:
                data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
        return cls.from_dict(data)

    def validate(self) -> None:
        if self.domain not in DOMAINS:
            raise ConfigError(f"domain must be one of {sorted(DOMAINS)}, got {self.domain!r}")
        if not isinstance(self.s, (int, float)) or not (0.0 < self.s < 1.0):
            raise ConfigError(f"s must lie in (0, 1), got {self.s!r}")
        if self.mesh not in ("uniform", "graded"):
            raise ConfigError(f"mesh must be 'uniform' or 'graded', got {self.mesh!r}")
        if self.gamma != "auto" and not (isinstance(self.gamma, (int, float)) and self.gamma >= 1.0):
            raise ConfigError(f"gamma must be 'auto' or a number >= 1, got {self.gamma!r}")
        lv = self.levels
        if not isinstance(lv, list) or not all(isinstance(m, int) and m >= 2 for m in lv):
            raise ConfigError(f"levels must be a list of integers >= 2, got {lv!r}")
        if any(b <= a for a, b in zip(lv, lv[1:])):
            raise ConfigError(f"levels must be strictly increasing, got {lv!r}")
        if self.truncation != "auto" and not (
            isinstance(self.truncation, (int, float)) and self.truncation > 0
        ):
            raise ConfigError(f"truncation must be 'auto' or a positive number, got {self.truncation!r}")
        if not (isinstance(self.C, (int, float)) and self.C > 0):
            raise ConfigError(f"C must be positive, got {self.C!r}")
        if not (isinstance(self.tol, float) and 0.0 < self.tol < 1.0):
            raise ConfigError(f"tol must lie in (0, 1), got {self.tol!r}")
        if self.maxiter is not None and not (isinstance(self.maxiter, int) and self.maxiter > 0):
            raise ConfigError(f"maxiter must be a positive integer, got {self.maxiter!r}")
        if self.rhs != "unit-mode":
            if not isinstance(self.rhs, list) or not self.rhs:
                raise ConfigError("rhs must be 'unit-mode' or a non-empty list of modes")
            for term in self.rhs:
                if not isinstance(term, dict) or set(term) != {"index", "amplitude"}:
                    raise ConfigError(f"rhs terms need exactly 'index' and 'amplitude', got {term!r}")
        if self.operator is not None:
            if self.domain != "interval":
                raise ConfigError("operator coefficients are supported on the interval only")
            if not isinstance(self.operator, dict) or not set(self.operator) <= {"a", "c"}:
                raise ConfigError(f"operator must be an object with keys 'a' and/or 'c', got {self.operator!r}")
            for key, coefs in self.operator.items():
                if not isinstance(coefs, list) or not all(isinstance(v, (int, float)) for v in coefs):
                    raise ConfigError(f"operator.{key} must be a list of polynomial coefficients")
        if not isinstance(self.quad, dict) or not set(self.quad) <= {"x", "y", "jacobi", "subdivisions"}:
            raise ConfigError(f"quad accepts keys x, y, jacobi, subdivisions; got {self.quad!r}")
        if self.mtt_levels is not None:
            if not isinstance(self.mtt_levels, list) or len(self.mtt_levels) != len(self.levels):
                raise ConfigError("mtt_levels must list one grid size per level")
        try:
            self.rhs_modes()
            self.operator_coeffs()
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc

    @property
    def dim(self) -> int:
        return 1 if self.domain == "interval" else 2

    @property
    def params(self) -> FracParams:
        return FracParams(float(self.s))

    def rhs_modes(self):
        if self.rhs == "unit-mode":
            return unit_mode_rhs(self.dim, float(self.s))
        return sine_modes([(t["index"], float(t["amplitude"])) for t in self.rhs], self.dim)

    def operator_coeffs(self) -> OperatorCoeffs:
        if self.operator is None:
            return OperatorCoeffs()
        a = self.operator.get("a")
        c = self.operator.get("c")
        return OperatorCoeffs(
            A=None if a is None else polynomial_coefficient(a),
            c=None if c is None else polynomial_coefficient(c),
        )

    def quad_rule(self) -> QuadRule:
        q = self.quad
        d = QuadRule()
        return QuadRule(
            x_order=int(q.get("x", d.x_order)),
            y_order=int(q.get("y", d.y_order)),
            jacobi_order=int(q.get("jacobi", d.jacobi_order)),
            subdivisions=int(q.get("subdivisions", d.subdivisions)),
        )

    def grading(self) -> float:
        if self.mesh == "uniform":
            return 1.0
        if self.gamma == "auto":
            return default_grading(self.params.alpha)
        return float(self.gamma)

    def lambda1_bound(self) -> float:
        """Lower bound for the smallest eigenvalue of the operator."""
        lam = dirichlet_eigenvalue((1,) * self.dim)
        if self.operator is None or "a" not in self.operator:
            return lam
        xs = np.linspace(0.0, 1.0, 2001)
        amin = float(np.min(polynomial_coefficient(self.operator["a"])(xs)))
        if amin <= 0.0:
            raise ConfigError("operator coefficient a must be positive on [0, 1]")
        return amin * lam

    def truncation_height(self, prev_cells: int | None, cells: int) -> float:
        if self.truncation != "auto":
            return float(self.truncation)
        eps = float(prev_cells if prev_cells else cells) ** (-1.0 / (self.dim + 1))
        return choose_truncation(eps, self.lambda1_bound(), float(self.C))


@dataclass
class LevelSolution:
    level: int
    mesh: object
    system: object
    V: np.ndarray
    report: object
    assemble_ms: float
    solve_ms: float

    @property
    def trace(self) -> np.ndarray:
        return self.V[: self.mesh.n_omega_nodes]


def solve_level(config: StudyConfig, level: int, prev_cells: int | None = None) -> LevelSolution:
    """Build, assemble and solve the discrete extension problem at one level.

    Raises SolverError (with the level diagnostics) if CG does not converge.
    """
    M = config.levels[level]
    omega = OmegaSpec(DOMAINS[config.domain], M)
    Y = config.truncation_height(prev_cells, omega.cells * M)
    ypart = make_y_partition(M, Y, config.grading())
    mesh = build_cylinder_mesh(omega, ypart)
    coeffs = config.operator_coeffs()
    f = config.rhs_modes()
    t0 = time.perf_counter()
    system = assemble_extension_system(mesh, config.params, f, coeffs)
    t1 = time.perf_counter()
    x, report = cg_solve(system.matrix, system.rhs, tol=config.tol, maxiter=config.maxiter)
    t2 = time.perf_counter()
    if not report.converged:
        raise SolverError(
            f"CG did not converge at level {level} (M={M}, dofs={mesh.n_free}, Y={Y:.6g}): "
            f"{report.iterations} iterations, relative residual {report.relative_residual:.3e} "
            f"> {report.tolerance:.3e}"
        )
    return LevelSolution(level, mesh, system, system.expand(x), report, 1e3 * (t1 - t0), 1e3 * (t2 - t1))


@dataclass
class ConvergenceTable:
    """Per-level rows keyed by CSV_COLUMNS (floats kept at 16 significant digits)."""

    rows: list = field(default_factory=list)

    def add(self, **row) -> None:
        missing = set(CSV_COLUMNS) - set(row)
        if missing:
            raise ValueError(f"row lacks columns {sorted(missing)}")
        self.rows.append({k: row[k] if isinstance(row[k], int) else _sig16(row[k]) for k in CSV_COLUMNS})

    def __len__(self) -> int:
        return len(self.rows)

    def column(self, name: str) -> np.ndarray:
        return np.array([r[name] for r in self.rows], dtype=float)

    def fit_rows(self) -> int:
        """Rows used by the rate fit: the last ceil(levels/2), at least 3."""
        return max(3, math.ceil(len(self.rows) / 2))

    def rate(self, column: str) -> float:
        if len(self.rows) < 3:
            return float("nan")
        k = self.fit_rows()
        slope, _, _ = fit_rate(self.column("cells")[-k:], self.column(column)[-k:])
        return slope


def fit_rate(x: Sequence[float], err: Sequence[float]) -> tuple[float, float, float]:
    """Least-squares line through (log10 x, log10 err): (slope, intercept, r^2)."""
    x = np.asarray(x, dtype=float)
    err = np.asarray(err, dtype=float)
    if x.shape != err.shape or x.ndim != 1:
        raise ValueError("fit_rate needs two 1-D sequences of equal length")
    if x.size < 3:
        raise ValueError(f"fit_rate needs at least 3 points, got {x.size}")
    if np.any(~(x > 0)) or np.any(~(err > 0)):
        raise ValueError("fit_rate needs positive values")
    lx, ly = np.log10(x), np.log10(err)
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - float(np.sum(resid**2)) / ss_tot
    return float(slope), float(intercept), r2


def run_study(config: StudyConfig, progress=None) -> ConvergenceTable:
    """Solve every level of ``config`` and measure both errors against the exact solution."""
    if config.operator is not None:
        raise ConfigError("convergence studies need an exact solution; remove 'operator'")
    exact = spectral_fractional_solve(config.rhs_modes(), float(config.s))
    rule = config.quad_rule()
    table = ConvergenceTable()
    prev = None
    for level, M in enumerate(config.levels):
        sol = solve_level(config, level, prev)
        mesh = sol.mesh
        table.add(
            level=level,
            M=M,
            cells=mesh.n_cells,
            dofs=mesh.n_free,
            Y=mesh.ypart.Y,
            err_h1w=weighted_h1_error(sol.V, exact, mesh, rule),
            err_hs=trace_hs_error(sol.trace, exact.modes, float(config.s), config.dim),
            assemble_ms=sol.assemble_ms,
            solve_ms=sol.solve_ms,
            cg_iters=sol.report.iterations,
        )
        if progress is not None:
            progress(table.rows[-1])
        prev = mesh.n_cells
    return table


def emit_csv(table: ConvergenceTable, path, timings: bool = True) -> None:
    """Write the table; with ``timings=False`` the timing columns hold nan."""
    lines = [",".join(CSV_COLUMNS)]
    for row in table.rows:
        vals = dict(row)
        if not timings:
            vals["assemble_ms"] = vals["solve_ms"] = float("nan")
        lines.append(",".join(_fmt(vals[c]) for c in CSV_COLUMNS))
    lines.append(f"# rate_h1w={_fmt(table.rate('err_h1w'))}")
    lines.append(f"# rate_hs={_fmt(table.rate('err_hs'))}")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def emit_timings(table: ConvergenceTable, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("level,assemble_ms,solve_ms\n")
        for row in table.rows:
            fh.write(f"{row['level']},{_fmt(row['assemble_ms'])},{_fmt(row['solve_ms'])}\n")


def read_csv(path) -> tuple[ConvergenceTable, dict]:
    """Parse a file written by emit_csv: (table, {"rate_h1w": .., "rate_hs": ..})."""
    table = ConvergenceTable()
    rates = {}
    with open(path, encoding="utf-8") as fh:
        body = []
        for line in fh:
            if line.startswith("#"):
                key, _, val = line[1:].strip().partition("=")
                rates[key] = float(val)
            else:
                body.append(line)
    for rec in csv.DictReader(body):
        table.rows.append(
            {c: int(rec[c]) if c in ("level", "M", "cells", "dofs", "cg_iters") else float(rec[c]) for c in CSV_COLUMNS}
        )
    return table, rates


# -- cross-check against the matrix-power reference --------------------------


def oracle_compare(config: StudyConfig) -> list[tuple[int, int, float]]:
    """(N_omega, M_cyl, l2_gap) per level: extension trace vs matrix-power solution."""
    if config.domain != "interval":
        raise ConfigError("oracle-compare is available on the interval only")
    coeffs = config.operator or {}
    modes = config.rhs_modes()

    def f(x):
        return eval_modes(modes, x)

    mtt_levels = config.mtt_levels or [4 * m for m in config.levels]
    out = []
    prev = None
    for level, N in enumerate(mtt_levels):
        sol = solve_level(config, level, prev)
        prev = sol.mesh.n_cells
        op = Operator1D(
            a=polynomial_coefficient(coeffs["a"]) if "a" in coeffs else None,
            c=polynomial_coefficient(coeffs["c"]) if "c" in coeffs else None,
            N=int(N),
        )
        u = mtt_solve(op, f, float(config.s))
        gap = l2_gap(sol.mesh.omega.points_1d, sol.trace, op.nodes, u)
        out.append((int(N), int(config.levels[level]), gap))
    return out


# -- special-function self test ----------------------------------------------


def bessel_k_integral(nu: float, z: float) -> float:
    """K_nu(z) from int_0^inf exp(-z cosh t) cosh(nu t) dt by adaptive quadrature.

    The integrand is scaled by exp(z) and cut where z (cosh t - 1) exceeds 80.
    """
    T = math.acosh(1.0 + 80.0 / z) + 1.0
    peak = math.acosh(1.0 + 1.0 / z)
    val, _ = scipy.integrate.quad(
        lambda t: math.exp(-z * (math.cosh(t) - 1.0)) * math.cosh(nu * t),
        0.0,
        T,
        points=[peak],
        epsabs=0.0,
        epsrel=2e-14,
        limit=400,
    )
    return val * math.exp(-z)


SELFTEST_NU = tuple(round(0.1 * k, 1) for k in range(1, 10))
SELFTEST_Z = tuple(np.logspace(-3.0, math.log10(30.0), 40))


def selftest_table(nus=SELFTEST_NU, zs=SELFTEST_Z) -> list[tuple[float, float, float, float, float]]:
    rows = []
    for nu in nus:
        for z in zs:
            k = bessel_k(nu, float(z))
            ref = bessel_k_integral(nu, float(z))
            rows.append((nu, float(z), k, ref, abs(k - ref) / abs(ref)))
    return rows


def set_threads(n: int) -> None:
    kernels.set_num_threads(n)


__all__ = [
    "CSV_COLUMNS",
    "ConvergenceTable",
    "LevelSolution",
    "StudyConfig",
    "bessel_k_integral",
    "emit_csv",
    "emit_timings",
    "exponential_rate",
    "fit_rate",
    "oracle_compare",
    "read_csv",
    "run_study",
    "selftest_table",
    "solve_level",
    "truncation_study",
]


# -- truncation study ---------------------------------------------------------


def truncation_study(
    s: float, heights: Sequence[float], m_omega: int, hy: float, rule: QuadRule = QuadRule()
) -> list[tuple[float, float]]:
    """(Y, err_h1w) for the unit-mode problem on (0, 1) with fixed spacing.

    Omega keeps ``m_omega`` cells; the uniform y-partition of [0, Y] uses
    round(Y / hy) cells, so only the truncation height changes.
    """
    f = unit_mode_rhs(1, s)
    exact = spectral_fractional_solve(f, s)
    params = FracParams(s)
    out = []
    for Y in heights:
        ypart = make_y_partition(max(2, round(Y / hy)), float(Y))
        mesh = build_cylinder_mesh(OmegaSpec("unit-interval", m_omega), ypart)
        system = assemble_extension_system(mesh, params, f)
        x, report = cg_solve(system.matrix, system.rhs)
        if not report.converged:
            raise SolverError(f"CG did not converge for Y={Y:g}")
        out.append((float(Y), weighted_h1_error(system.expand(x), exact, mesh, rule)))
    return out


def exponential_rate(heights: Sequence[float], err: Sequence[float], flatten: float = 0.5):
    """Fit log(err) = rate * Y + b on the points before the error floor.

    The floor starts at the first segment whose local slope is less than
    ``flatten`` times the slope of the first segment.  Returns
    (rate, number of points used).
    """
    Y = np.asarray(heights, dtype=float)
    le = np.log(np.asarray(err, dtype=float))
    if Y.size < 2:
        raise ValueError("need at least two heights")
    slopes = np.diff(le) / np.diff(Y)
    used = Y.size
    for j in range(1, slopes.size):
        if slopes[j] > flatten * slopes[0]:
            used = j + 1
            break
    rate = float(np.polyfit(Y[:used], le[:used], 1)[0])
    return rate, used
