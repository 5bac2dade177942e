import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import special

from heatpot.core import DomainError, make_graded_grid, make_uniform_grid
from heatpot.specfun import heat_kernel
from heatpot.volterra import (NewtonConfig, SingularStepError, StepFailure, WeaklySingularSystem,
                              abel_analytic, abel_flat_ou_nu, discrete_residual,
                              quadrature_weights, solve_linear, solve_stepwise_nonlinear)


def constant_kernel(xi, f=lambda t: np.ones_like(t)):
    return WeaklySingularSystem(kernel=lambda t, tp: np.full(np.shape(tp), xi), rhs=f)


def exact_constant(xi, t):
    # y + xi int y / sqrt(t - s) ds = 1
    return special.erfcx(xi * np.sqrt(math.pi * t))


def test_weights():
    g = make_graded_grid(1.0, 9, 1.7)
    t = g.nodes
    for k in range(1, 10):
        pi = quadrature_weights(t, k)
        assert np.all(pi > 0)
        assert pi[-1] == pytest.approx(math.sqrt(t[k] - t[k - 1]), rel=1e-14)
        # telescoping: sum of weights is sqrt(t_k - t_0)
        assert pi.sum() == pytest.approx(math.sqrt(t[k] - t[0]), rel=1e-13)


def test_zero_kernel_returns_rhs():
    g = make_uniform_grid(1, 10)
    sys_ = WeaklySingularSystem(kernel=lambda t, tp: np.zeros(np.shape(tp)), rhs=np.cos)
    np.testing.assert_array_equal(solve_linear(sys_, g).values, np.cos(g.nodes))


def test_constant_kernel_against_closed_form():
    g = make_uniform_grid(1.0, 200)
    nu = solve_linear(constant_kernel(1.0), g)
    t = g.nodes
    rel = np.abs(nu.values / exact_constant(1.0, t) - 1)
    # away from the sqrt(t) start layer the scheme is well inside 1e-3
    assert rel[t >= 0.05].max() < 1e-3
    # at the first node the error is the scheme's (pi - 2) xi^2 h startup term
    h = t[1]
    assert abs(nu.values[1] - exact_constant(1.0, h)) == pytest.approx((math.pi - 2) * h, rel=0.2)


def test_self_convergence_at_common_times():
    errs = []
    for n in (50, 100, 200, 400, 800):
        g = make_uniform_grid(1.0, n)
        nu = solve_linear(constant_kernel(1.0), g).values[:: n // 50]
        errs.append(np.abs(nu - exact_constant(1.0, g.nodes[:: n // 50])).max())
    ratios = np.array(errs[:-1]) / np.array(errs[1:])
    assert np.all(ratios >= 2.0)


def test_refinement_against_finer_reference():
    ref_grid = make_uniform_grid(1.0, 1600)
    ref = solve_linear(constant_kernel(0.7, lambda t: np.cos(2 * t)), ref_grid)
    errs = []
    for n in (50, 100, 200, 400):
        g = make_uniform_grid(1.0, n)
        nu = solve_linear(constant_kernel(0.7, lambda t: np.cos(2 * t)), g)
        errs.append(np.abs(nu.values[:: n // 50] - ref(g.nodes[:: n // 50])).max())
    assert all(a > b for a, b in zip(errs, errs[1:]))
    assert math.log2(errs[0] / errs[-1]) / 3 >= 1.0


@settings(max_examples=25, deadline=None)
@given(st.floats(-2, 2), st.integers(5, 120), st.floats(1, 3))
def test_discrete_residual_vanishes(xi, n, gamma):
    g = make_graded_grid(1.0, n, gamma)
    sys_ = WeaklySingularSystem(kernel=lambda t, tp: xi * np.cos(t - tp) + 0.3 * tp,
                                rhs=lambda t: np.exp(-t) + t)
    try:
        nu = solve_linear(sys_, g)
    except SingularStepError:
        return
    scale = max(1.0, np.abs(nu.values).max())
    assert np.abs(discrete_residual(sys_, g, nu)).max() <= 1e-13 * scale


def test_singular_step_detected():
    g = make_uniform_grid(1.0, 4)
    xi = -1.0 / math.sqrt(0.25)
    with pytest.raises(SingularStepError) as info:
        solve_linear(constant_kernel(xi), g)
    assert info.value.k == 1


def test_row_cache():
    g = make_uniform_grid(1.0, 5)
    rows = {}
    solve_linear(constant_kernel(0.5), g, rows=rows)
    assert sorted(rows) == [1, 2, 3, 4, 5]
    assert rows[3].shape == (4,)


def test_nonlinear_wrapper_reproduces_linear_solve():
    g = make_uniform_grid(1.0, 60)
    sys_ = constant_kernel(0.8, f=lambda t: 1 + t)
    ref = solve_linear(sys_, g)
    t = g.nodes

    def step(k, m, nu, mu):
        pi = quadrature_weights(t, k)
        w = np.append(0.8 * nu[:k], 0.8 * m)
        return m + np.dot(w[1:] + w[:-1], pi) - (1 + t[k]), m

    nu, mu, rep = solve_stepwise_nonlinear(step, g, init=(1.0, 1.0))
    np.testing.assert_allclose(mu.values, ref.values, atol=1e-12)
    assert rep.converged and rep.max_residual <= 1e-12


def test_nonlinear_failure_reports_step():
    g = make_uniform_grid(1.0, 5)
    with pytest.raises(StepFailure) as info:
        solve_stepwise_nonlinear(lambda k, m, nu, mu: (1 + m * m, 0.0), g)
    assert info.value.k == 1
    assert info.value.report.failed_step == 1


def test_newton_config_validation():
    with pytest.raises(ValueError):
        NewtonConfig(tol=0)
    with pytest.raises(ValueError):
        NewtonConfig(max_iter=0)


def test_abel_analytic_trivial_cases():
    g = make_uniform_grid(1.0, 50)
    np.testing.assert_array_equal(abel_analytic(0.0, np.sin, g).values, np.sin(g.nodes))
    assert np.all(abel_analytic(1.3, np.zeros_like, g).values == 0)


@pytest.mark.parametrize("xi", [-2.0, -1.0, 0.5, 1.0, 2.0])
def test_abel_analytic_is_exact(xi):
    g = make_uniform_grid(1.0, 100)
    y = abel_analytic(xi, np.ones_like, g).values
    ex = exact_constant(xi, g.nodes)
    assert np.max(np.abs(y / ex - 1)) < 1e-10


@pytest.mark.parametrize("xi", [0.5, 1.0, 1.5, 2.0])
def test_abel_analytic_matches_solver(xi):
    g = make_uniform_grid(1.0, 400)
    f = lambda t: 1 + np.sin(3 * t)  # noqa: E731
    y = abel_analytic(xi, f, g).values
    nu = solve_linear(constant_kernel(xi, f), g).values
    sel = g.nodes >= 0.05
    assert np.abs(y - nu)[sel].max() < 1e-3


@pytest.mark.parametrize("xi", [-2.0, -1.0])
def test_growing_solutions_converge(xi):
    # exp(pi xi^2 t) growth amplifies the O(h) error; check the rate instead
    errs = []
    for n in (100, 200, 400):
        g = make_uniform_grid(1.0, n)
        nu = solve_linear(constant_kernel(xi), g).values
        errs.append(np.max(np.abs(nu / abel_analytic(xi, np.ones_like, g).values - 1)))
    assert errs[0] / errs[1] >= 1.8 and errs[1] / errs[2] >= 1.8


def test_abel_analytic_at_quarter():
    g = make_uniform_grid(1.0, 400)
    y = abel_analytic(1.0, np.ones_like, g)
    nu = solve_linear(constant_kernel(1.0), g)
    assert abs(y(0.25) - nu(0.25)) < 1e-3
    assert abs(y(0.25) - exact_constant(1.0, 0.25)) < 1e-3


def test_abel_flat_closed_form():
    th = np.array([0.01, 0.1, 1.0])
    np.testing.assert_allclose(abel_flat_ou_nu(0.0, 2.0, th), -heat_kernel(th, 2.0), rtol=1e-14)
    assert abs(abel_flat_ou_nu(1.0, 2.0, 1e-4)) < 1e-100
    with pytest.raises(DomainError):
        abel_flat_ou_nu(1.0, 2.0, 0.0)


def test_abel_flat_solves_its_equation():
    # the closed form must satisfy the Abel equation it comes from
    b, z = 1.0, 2.0
    g = make_uniform_grid(0.1, 2000)
    sys_ = WeaklySingularSystem(kernel=lambda t, tp: np.full(np.shape(tp), b / math.sqrt(2 * math.pi)),
                                rhs=lambda t: -np.where(t > 0, heat_kernel(np.maximum(t, 1e-300), b - z), 0.0))
    nu = solve_linear(sys_, g).values
    ref = abel_flat_ou_nu(b, z, g.nodes[1:])
    sel = g.nodes[1:] >= 0.02
    assert np.max(np.abs(nu[1:][sel] / ref[sel] - 1)) < 1e-2
