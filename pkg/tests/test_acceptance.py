"""Acceptance suite: one test per criterion, each recording a PASS/FAIL line.

The lines are printed in the terminal summary (see conftest.py) and also
directly to stdout, so ``pytest -s tests/test_acceptance.py`` shows them inline.
"""

import math
import subprocess
import sys
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from fracext.assembly import assemble_extension_system, bottom_trace
from fracext.harness import (
    StudyConfig,
    exponential_rate,
    oracle_compare,
    run_study,
    selftest_table,
    truncation_study,
)
from fracext.linalg import cg_solve
from fracext.mesh import OmegaSpec, build_cylinder_mesh, choose_truncation, default_grading, make_y_partition
from fracext.spectral import unit_mode_rhs
from fracext.specfun import FracParams, psi_pair

from _oracles import classical_q1_stiffness, geometric_weighted_integral


def record(number, ok, detail):
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def test_criterion_1_bessel_selftest():
    t0 = time.perf_counter()
    rows = selftest_table()
    elapsed = time.perf_counter() - t0
    worst = max(r[4] for r in rows)
    assert len(rows) == 9 * 40
    record(1, worst < 1e-10 and elapsed < 5.0, f"max rel err {worst:.2e} over {len(rows)} points, {elapsed:.2f} s")


def test_criterion_2_energy_identity():
    worst = 0.0
    for s in (0.2, 0.5, 0.8):
        p = FracParams(s)
        for lam in (math.pi**2, 2 * math.pi**2):

            def integrand(y):
                vals = np.array([psi_pair(p, lam, v) for v in y])
                return y**p.alpha * (lam * vals[:, 0] ** 2 + vals[:, 1] ** 2)

            energy = geometric_weighted_integral(integrand, 40 / math.sqrt(lam), -abs(p.alpha))
            ref = p.d_s * lam**s
            worst = max(worst, abs(energy - ref) / ref)
    record(2, worst < 1e-6, f"max rel err {worst:.2e}")


def test_criterion_3_quasi_uniform_rate():
    # one truncation height for all levels: the automatic value at M = 256
    Y = choose_truncation(1.0 / 128, math.pi**2)
    cfg = StudyConfig(domain="interval", s=0.2, mesh="uniform", levels=[16, 32, 64, 128, 256], truncation=Y)
    t0 = time.perf_counter()
    table = run_study(cfg)
    elapsed = time.perf_counter() - t0
    rate = table.rate("err_h1w")
    record(3, -0.14 <= rate <= -0.08 and elapsed < 120, f"slope {rate:.4f} (Y = {Y:.3f}), {elapsed:.1f} s")


@pytest.mark.parametrize("s", [0.2, 0.8])
def test_criterion_4_graded_rate_n1(s):
    cfg = StudyConfig(domain="interval", s=s, mesh="graded", levels=[16, 32, 64, 128, 256])
    t0 = time.perf_counter()
    table = run_study(cfg)
    elapsed = time.perf_counter() - t0
    rate = table.rate("err_h1w")
    record(4, -0.56 <= rate <= -0.44 and elapsed < 180, f"s={s}: slope {rate:.4f}, {elapsed:.1f} s")


@pytest.mark.parametrize("s", [0.2, 0.8])
def test_criterion_5_graded_rate_n2(s):
    cfg = StudyConfig(domain="square", s=s, mesh="graded", levels=[8, 12, 16, 24, 32, 48])
    t0 = time.perf_counter()
    table = run_study(cfg)
    elapsed = time.perf_counter() - t0
    rate = table.rate("err_h1w")
    record(5, -0.40 <= rate <= -0.27 and elapsed < 900, f"s={s}: slope {rate:.4f}, {elapsed:.1f} s")


def test_criterion_6_truncation_decay():
    heights = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0]
    data = truncation_study(0.5, heights, 256, 1.0 / 128)
    err = [e for _, e in data]
    rate, used = exponential_rate(heights, err)
    bound = -math.pi / 4
    record(6, used >= 2 and rate <= bound, f"rate {rate:.3f} on {used} heights before the floor (bound {bound:.3f})")


@pytest.mark.parametrize("s", [0.3, 0.7])
def test_criterion_7_oracle_agreement(s):
    cfg = StudyConfig(
        domain="interval",
        s=s,
        levels=[32, 64, 128],
        operator={"a": [1.0, 0.5], "c": [0.0, 1.0]},
        mtt_levels=[128, 256, 512],
    )
    rows = oracle_compare(cfg)
    gaps = [g for _, _, g in rows]
    ok = all(b < a for a, b in zip(gaps, gaps[1:])) and gaps[-1] < 1e-3 and rows[-1][:2] == (512, 128)
    record(7, ok, f"s={s}: gaps " + ", ".join(f"{g:.2e}" for g in gaps))


def test_criterion_8_structure():
    failures = []
    sym_worst = 0.0
    for kind in ("unit-interval", "unit-square"):
        for s in (0.2, 0.5, 0.8):
            for M in (2, 4, 8):
                mesh = build_cylinder_mesh(
                    OmegaSpec(kind, 6), make_y_partition(M, 2.0, default_grading(1 - 2 * s))
                )
                A = assemble_extension_system(mesh, FracParams(s), unit_mode_rhs(mesh.dim, s)).matrix.toarray()
                sym_worst = max(sym_worst, np.abs(A - A.T).max() / np.abs(A).max())
                try:
                    np.linalg.cholesky(A)
                except np.linalg.LinAlgError:
                    failures.append(f"cholesky {kind} s={s} M={M}")
    if sym_worst >= 1e-12:
        failures.append(f"symmetry {sym_worst:.1e}")

    mesh = build_cylinder_mesh(OmegaSpec("unit-interval", 7), make_y_partition(5, 1.7, 2.0))
    sysm = assemble_extension_system(mesh, FracParams(0.5), unit_mode_rhs(1, 0.5))
    ref = classical_q1_stiffness(mesh.omega.points_1d, mesh.ypart.points)[np.ix_(mesh.free, mesh.free)]
    classical = np.abs(sysm.matrix.toarray() - ref).max()
    if classical >= 1e-13:
        failures.append(f"classical Q1 {classical:.1e}")

    x, _ = cg_solve(sysm.matrix, sysm.rhs, tol=1e-12)
    V = sysm.expand(x)
    if not np.array_equal(bottom_trace(sysm, x), V[mesh.bottom_nodes()]):
        failures.append("trace")
    record(
        8,
        not failures,
        f"symmetry {sym_worst:.1e}, alpha=0 vs classical {classical:.1e}" + (f"; {failures}" if failures else ""),
    )


def test_criterion_9_determinism(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text('{"domain": "square", "s": 0.4, "levels": [4, 6, 8, 12]}')
    outs = []
    for name in ("a.csv", "b.csv"):
        out = tmp_path / name
        cmd = [sys.executable, "-m", "fracext", "converge", "--config", str(cfg), "--out", str(out)]
        subprocess.run(cmd + ["--threads", "1", "--quiet"], check=True)
        outs.append(out.read_bytes())
    record(9, outs[0] == outs[1], f"{len(outs[0])} bytes, identical={outs[0] == outs[1]}")
