import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fracext.exceptions import DomainError, SingularPointError
from fracext.spectral import (
    SpectralMode,
    apply_fractional_power,
    eigenfunction,
    eval_modes,
    exact_extension_eval,
    extension_value,
    hs_norm,
    mode_difference,
    project_trace,
    psi_profile,
    sine_modes,
    spectral_fractional_solve,
    tail_energy,
    unit_mode_rhs,
)
from fracext.specfun import FracParams, psi_pair

from _oracles import mp_bessel_k


def test_mode_eigenvalues():
    assert SpectralMode((2,), 1.0).lam == pytest.approx(4 * math.pi**2)
    assert SpectralMode((1, 3), 1.0).lam == pytest.approx(10 * math.pi**2)
    with pytest.raises(DomainError):
        SpectralMode((0,), 1.0)
    with pytest.raises(DomainError):
        SpectralMode((1,), 1.0, lam=5.0)


def test_eigenfunctions_are_orthonormal():
    x = np.linspace(0, 1, 4001)
    w = np.full(x.size, 1 / 4000)
    w[[0, -1]] /= 2
    G = np.array([[np.sum(w * eigenfunction((i,), x) * eigenfunction((j,), x)) for j in (1, 2, 3)] for i in (1, 2, 3)])
    np.testing.assert_allclose(G, np.eye(3), atol=1e-7)


@pytest.mark.parametrize("s", [0.2, 0.5, 0.8])
def test_unit_mode_solution_is_sine(s):
    sol = spectral_fractional_solve(unit_mode_rhs(1, s), s)
    x = np.linspace(0, 1, 7)
    np.testing.assert_allclose(eval_modes(sol.modes, x), np.sin(np.pi * x), atol=1e-15)
    sol2 = spectral_fractional_solve(unit_mode_rhs(2, s), s)
    np.testing.assert_allclose(
        eval_modes(sol2.modes, x, x[::-1]), np.sin(np.pi * x) * np.sin(np.pi * x[::-1]), atol=1e-15
    )


@given(st.floats(min_value=0.01, max_value=0.99), st.lists(st.floats(-5, 5), min_size=1, max_size=5))
def test_fractional_round_trip(s, amps):
    f = sine_modes([((k + 1,), a) for k, a in enumerate(amps)])
    back = apply_fractional_power(spectral_fractional_solve(f, s).modes, s)
    for a, b in zip(f, back):
        assert b.coeff == pytest.approx(a.coeff, rel=1e-13, abs=1e-300)


@pytest.mark.parametrize("s", [0.2, 0.5, 0.7])
def test_trace_identity(s):
    f = sine_modes([((1, 1), 1.0), ((2, 3), -0.5), ((4, 1), 0.25)])
    sol = spectral_fractional_solve(f, s)
    for pt in [(0.3, 0.6), (0.5, 0.5), (0.91, 0.13)]:
        assert extension_value(sol, pt, 0.0) == pytest.approx(float(eval_modes(sol.modes, *pt)), abs=1e-15)


def test_half_closed_form():
    sol = spectral_fractional_solve(unit_mode_rhs(1, 0.5), 0.5)
    x, y = 0.3, 0.4
    val, grad = exact_extension_eval(sol, [x], y)
    e = math.exp(-math.pi * y)
    assert val == pytest.approx(math.sin(math.pi * x) * e, rel=1e-14)
    np.testing.assert_allclose(
        grad, [math.pi * math.cos(math.pi * x) * e, -math.pi * math.sin(math.pi * x) * e], rtol=1e-14
    )
    val0, _ = exact_extension_eval(sol, [x], 0.0)
    assert val0 == pytest.approx(math.sin(math.pi * x), rel=1e-15)


def test_value_through_bessel_oracle():
    s = 0.2
    sol = spectral_fractional_solve(unit_mode_rhs(1, s), s)
    p = FracParams(s)
    z = math.pi * 0.3
    ref = p.c_s * z**s * mp_bessel_k(s, z)
    val, grad = exact_extension_eval(sol, [0.5], 0.3)
    assert val == pytest.approx(ref, rel=1e-13)
    assert grad[0] == pytest.approx(0.0, abs=1e-15)
    with pytest.raises(SingularPointError):
        exact_extension_eval(sol, [0.5], 0.0)
    with pytest.raises(DomainError):
        exact_extension_eval(sol, [0.5, 0.5], 0.1)


def test_gradient_by_finite_differences():
    s = 0.35
    sol = spectral_fractional_solve(sine_modes([((1, 2), 1.0), ((3, 1), 0.3)]), s)
    pt, y, h = np.array([0.37, 0.61]), 0.45, 1e-6
    _, grad = exact_extension_eval(sol, pt, y)
    fd = [
        (extension_value(sol, pt + h * e, y) - extension_value(sol, pt - h * e, y)) / (2 * h)
        for e in np.eye(2)
    ]
    fd.append((extension_value(sol, pt, y + h) - extension_value(sol, pt, y - h)) / (2 * h))
    np.testing.assert_allclose(grad, fd, rtol=1e-7)


@pytest.mark.parametrize("s", [0.15, 0.5, 0.85])
def test_psi_profile_matches_scalar(s):
    p = FracParams(s)
    y = np.array([0.0, 1e-9, 0.01, 0.5, 2.0, 40.0])
    psi, dpsi = psi_profile(p, 3.0, y)
    assert psi[0] == 1.0
    for k in range(1, y.size):
        ref = psi_pair(p, 3.0, y[k])
        assert psi[k] == pytest.approx(ref[0], rel=1e-13)
        assert dpsi[k] == pytest.approx(ref[1], rel=1e-13)


def test_hs_norm_examples():
    phi1 = SpectralMode((1,), 1.0)
    assert hs_norm([phi1], 0.0) == 1.0
    assert hs_norm([SpectralMode((1,), -2.5)], 0.3) == pytest.approx(2.5 * math.pi**0.3)
    two = [SpectralMode((1,), 3.0), SpectralMode((2,), 4.0)]
    assert hs_norm(two, 0.0) == pytest.approx(5.0)
    with pytest.raises(DomainError):
        hs_norm(two, 1.5)


def test_tail_energy_matches_boundary_term():
    s = 0.4
    sol = spectral_fractional_solve(unit_mode_rhs(1, s), s)
    p = sol.params
    psi, dpsi = psi_pair(p, math.pi**2, 2.0)
    assert tail_energy(sol, 2.0) == pytest.approx(-(2.0**p.alpha) * psi * dpsi * 0.5 * 1.0)
    # tends to the full energy d_s lambda^s u^2 as Y -> 0
    assert tail_energy(sol, 1e-12) == pytest.approx(p.d_s * math.pi ** (2 * s) * 0.5, rel=1e-3)


def test_project_trace_of_sine_samples():
    errs = []
    for m in (16, 64, 256):
        x = np.linspace(0, 1, m + 1)
        proj = project_trace(math.sqrt(2) * np.sin(np.pi * x), 1)
        c = np.array([p.coeff for p in proj])
        errs.append((abs(c[0] - 1), np.max(np.abs(c[1:]))))
    assert errs[-1][0] < 1e-4 and errs[-1][1] < 1e-4
    assert errs[0][0] > errs[1][0] > errs[2][0]


def test_project_trace_zero_and_parseval():
    assert all(p.coeff == 0 for p in project_trace(np.zeros(9), 1))
    rng = np.random.default_rng(5)
    m = 20
    U = rng.standard_normal(m + 1)
    U[[0, -1]] = 0.0
    c = np.array([p.coeff for p in project_trace(U, 1, K=200)])
    # exact L2 norm of the piecewise-linear interpolant
    h = 1 / m
    l2 = math.sqrt(sum(h / 3 * (a * a + a * b + b * b) for a, b in zip(U[:-1], U[1:])))
    assert np.sum(c**2) <= l2**2 * (1 + 1e-12)
    assert np.sum(c**2) == pytest.approx(l2**2, rel=1e-2)


def test_project_trace_square_separable():
    m = 32
    x = np.linspace(0, 1, m + 1)
    U = np.outer(np.sin(2 * np.pi * x), np.sin(np.pi * x)).ravel()  # [x2, x1]: sin(pi x1) sin(2 pi x2)
    proj = {p.index: p.coeff for p in project_trace(U, 2, K=8)}
    assert proj[(1, 2)] == pytest.approx(0.5, rel=5e-3)
    assert abs(proj[(2, 1)]) < 1e-12


def test_mode_difference():
    a = [SpectralMode((1,), 1.0), SpectralMode((2,), 2.0)]
    b = [SpectralMode((2,), 0.5), SpectralMode((3,), 1.0)]
    d = {m.index: m.coeff for m in mode_difference(a, b)}
    assert d == {(1,): 1.0, (2,): 1.5, (3,): -1.0}


@settings(max_examples=30)
@given(st.lists(st.tuples(st.integers(1, 6), st.integers(1, 6), st.floats(-3, 3)), min_size=1, max_size=4))
def test_sine_modes_normalization(terms):
    modes = sine_modes([((m, n), a) for m, n, a in terms], dim=2)
    x1, x2 = 0.23, 0.71
    direct = sum(a * math.sin(m * math.pi * x1) * math.sin(n * math.pi * x2) for m, n, a in terms)
    assert float(eval_modes(modes, x1, x2)) == pytest.approx(direct, abs=1e-12)
