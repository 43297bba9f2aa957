import math

import numpy as np
import pytest

from fracext.assembly import assemble_extension_system
from fracext.errors import (
    QuadRule,
    SeparableTerm,
    trace_hs_error,
    trace_l2_error,
    weighted_h1_error,
    y_quadrature,
)
from fracext.linalg import cg_solve
from fracext.mesh import OmegaSpec, build_cylinder_mesh, default_grading, make_y_partition
from fracext.spectral import SpectralMode, spectral_fractional_solve, unit_mode_rhs
from fracext.specfun import FracParams


def _mesh(dim, M, Y, gamma):
    kind = "unit-interval" if dim == 1 else "unit-square"
    return build_cylinder_mesh(OmegaSpec(kind, M), make_y_partition(M, Y, gamma))


def _solve(dim, s, M, Y=3.0):
    mesh = _mesh(dim, M, Y, default_grading(1 - 2 * s))
    sysm = assemble_extension_system(mesh, FracParams(s), unit_mode_rhs(dim, s))
    x, _ = cg_solve(sysm.matrix, sysm.rhs)
    return mesh, sysm.expand(x), spectral_fractional_solve(unit_mode_rhs(dim, s), s)


def _bilinear_terms(dim):
    lin = (lambda x: x, lambda x: np.ones_like(x))
    one = (lambda x: np.ones_like(x), lambda x: np.zeros_like(x))
    ylin = lambda y: (2.0 - y, -np.ones_like(y))  # noqa: E731
    xf = (lin,) if dim == 1 else (lin, one)
    return [SeparableTerm(1.5, xf, ylin)]


@pytest.mark.parametrize("dim", [1, 2])
@pytest.mark.parametrize("alpha", [-0.6, 0.0, 0.6])
def test_bilinear_field_has_zero_error(dim, alpha):
    mesh = _mesh(dim, 4, 2.0, 3.0)
    X = mesh.node_coordinates()
    V = 1.5 * X[:, 0] * (2.0 - X[:, -1])
    err = weighted_h1_error(V, _bilinear_terms(dim), mesh, alpha=alpha)
    assert err < 1e-13


def test_separable_terms_require_alpha():
    mesh = _mesh(1, 2, 1.0, 1.0)
    with pytest.raises(ValueError):
        weighted_h1_error(np.zeros(mesh.n_nodes), _bilinear_terms(1), mesh)


@pytest.mark.parametrize("dim", [1, 2])
@pytest.mark.parametrize("s", [0.2, 0.5, 0.8])
def test_zero_field_energy(dim, s):
    # ||grad U||^2 over the whole cylinder = d_s lambda^s u_1^2 (u_1 = 1/sqrt(2)^dim)
    mesh = _mesh(dim, 8, 3.0, default_grading(1 - 2 * s))
    sol = spectral_fractional_solve(unit_mode_rhs(dim, s), s)
    p = sol.params
    lam = dim * math.pi**2
    expected = p.d_s * lam**s * sol.modes[0].coeff ** 2
    rule = QuadRule(x_order=8, y_order=8, jacobi_order=12, subdivisions=12)
    err = weighted_h1_error(np.zeros(mesh.n_nodes), sol, mesh, rule)
    assert err**2 == pytest.approx(expected, rel=1e-6)
    inside = weighted_h1_error(np.zeros(mesh.n_nodes), sol, mesh, rule, include_tail=False)
    assert inside < err


def test_homogeneity_and_triangle():
    mesh, V, sol = _solve(1, 0.3, 8)
    rule = QuadRule()
    base = weighted_h1_error(V, sol, mesh, rule)
    t = -2.5
    scaled = spectral_fractional_solve([SpectralMode(m.index, t * m.coeff) for m in unit_mode_rhs(1, 0.3)], 0.3)
    assert weighted_h1_error(t * V, scaled, mesh, rule) == pytest.approx(abs(t) * base, rel=1e-12)
    W = np.random.default_rng(2).standard_normal(mesh.n_nodes) * 0.01
    a = weighted_h1_error(V + W, sol, mesh, rule)
    zero = spectral_fractional_solve([SpectralMode((1,), 0.0)], 0.3)
    b = weighted_h1_error(-W, zero, mesh, rule)
    assert a <= base + b + 1e-14


@pytest.mark.parametrize("dim, s", [(1, 0.2), (1, 0.8), (2, 0.3)])
def test_quadrature_order_stability(dim, s):
    mesh, V, sol = _solve(dim, s, 16 if dim == 1 else 8)
    e0 = weighted_h1_error(V, sol, mesh, QuadRule())
    e1 = weighted_h1_error(V, sol, mesh, QuadRule(x_order=6, y_order=6, jacobi_order=10, subdivisions=4))
    assert abs(e1 - e0) / e1 < 1e-3


@pytest.mark.parametrize("alpha", [-0.8, -0.2, 0.0, 0.4, 0.9])
def test_jacobi_piece_exact_on_first_interval(alpha):
    pts = make_y_partition(6, 2.0, 4.0).points
    yq, wq, cell = y_quadrature(pts, alpha, QuadRule(jacobi_order=6, subdivisions=0))
    assert np.all(wq > 0)
    first = cell == 0
    beta = -abs(alpha)
    h = pts[1]
    # weights carry y^alpha; dividing by y^(alpha - beta) leaves the Jacobi rule for y^beta
    wj = wq[first] / yq[first] ** (alpha - beta)
    for j in range(12):
        exact = h ** (beta + j + 1) / (beta + j + 1)
        assert np.sum(wj * yq[first] ** j) == pytest.approx(exact, rel=1e-12)


@pytest.mark.parametrize("alpha", [-0.8, -0.2, 0.0, 0.4, 0.9])
def test_y_rule_integrates_weight(alpha):
    pts = make_y_partition(6, 2.0, 4.0).points
    yq, wq, _ = y_quadrature(pts, alpha, QuadRule())
    for j in range(3):
        exact = 2.0 ** (alpha + j + 1) / (alpha + j + 1)
        assert np.sum(wq * yq**j) == pytest.approx(exact, rel=1e-6)


def test_trace_hs_error_examples():
    # U = 0 against u = phi_1: ||phi_1||_{H^s} = pi^s
    for s in (0.2, 0.7):
        err = trace_hs_error(np.zeros(17), [SpectralMode((1,), 1.0)], s, 1)
        assert err == pytest.approx(math.pi**s, rel=1e-14)


def test_trace_error_vanishes_under_refinement():
    u = [SpectralMode((1,), 1.0)]
    errs = []
    for m in (8, 32, 128):
        x = np.linspace(0, 1, m + 1)
        errs.append(trace_hs_error(math.sqrt(2) * np.sin(np.pi * x), u, 0.5, 1))
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 1e-3


def test_trace_l2_matches_hs_zero():
    x = np.linspace(0, 1, 33)
    U = x * (1 - x)
    u = [SpectralMode((1,), 0.3), SpectralMode((3,), 0.1)]
    assert trace_l2_error(U, u, 1) == pytest.approx(trace_hs_error(U, u, 0.0, 1, K=400), rel=1e-4)


@pytest.mark.parametrize("s", [0.2, 0.8])
def test_trace_error_bounded_by_energy_error(s):
    ratios = []
    for M in (4, 8, 12, 16):
        mesh, V, sol = _solve(2, s, M, Y=2.0)
        e = weighted_h1_error(V, sol, mesh)
        t = trace_hs_error(V[: mesh.n_omega_nodes], sol.modes, s, 2)
        ratios.append(t / e)
    C = ratios[0]
    assert all(r <= 1.5 * C for r in ratios)
