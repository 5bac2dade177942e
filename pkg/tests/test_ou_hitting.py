import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, stats

from heatpot.core import (DomainError, ExponentialPair, Flat, Linear, Sinusoid, TimeGrid,
                          make_uniform_grid)
from heatpot.ou_hitting import (OUHittingInput, abel_relative_gap, heat_frame_boundary,
                                images_exponential_boundary, images_zero_boundary, solve_flat,
                                solve_general)


def _at(t):
    return TimeGrid(np.array([0.0, t]))


@pytest.fixture(scope="module")
def zero_general():
    return solve_general(OUHittingInput(2.0, Flat(0.0), 2.0), 500)


@pytest.fixture(scope="module")
def flat_pair():
    return (solve_flat(1.0, 2.0, 2000, 2.0),
            solve_general(OUHittingInput(2.0, Flat(1.0), 2.0), 4000))


def test_images_values():
    d = images_zero_boundary(2.0, _at(1.0))
    assert d.tau[1] == pytest.approx(3.19453, abs=1e-5)
    assert d.pdf.values[1] == pytest.approx(0.5521, abs=1e-4)
    assert d.cdf.values[1] == pytest.approx(0.2632, abs=1e-4)


def test_images_limits():
    d = images_zero_boundary(2.0, TimeGrid(np.array([0.0, 1e-3, 20.0])))
    assert d.pdf.values[1] < 1e-100
    assert d.cdf.values[2] == pytest.approx(1.0, abs=1e-8)
    with pytest.raises(DomainError):
        images_zero_boundary(0.0, _at(1.0))


@pytest.mark.parametrize("A,B,z", [(0.0, 0.0, 2.0), (0.5, 0.0, 2.0), (1.0, 1.0, 3.0), (0.3, -0.2, 1.0)])
def test_images_pdf_is_cdf_derivative(A, B, z):
    t = np.linspace(0.0, 2.0, 4001)
    d = images_exponential_boundary(A, B, z, TimeGrid(t))
    G = integrate.cumulative_trapezoid(d.pdf.values, t, initial=0.0)
    assert np.max(np.abs(G - d.cdf.values)) < 1e-6


def test_exponential_images_reductions():
    grid = make_uniform_grid(3.0, 300)
    zero = images_zero_boundary(2.0, grid)
    same = images_exponential_boundary(0.0, 0.0, 2.0, grid)
    assert np.max(np.abs(zero.pdf.values - same.pdf.values)) < 1e-12
    # B = 0: flat heat-frame level A
    d = images_exponential_boundary(0.5, 0.0, 2.0, grid)
    tau = d.tau[1:]
    assert np.allclose(d.cdf.values[1:], 2 * stats.norm.cdf(-1.5 / np.sqrt(tau)), atol=1e-14)
    with pytest.raises(DomainError):
        images_exponential_boundary(1.0, 1.0, 2.0, grid)


def test_heat_frame_boundary_derivative():
    b = Sinusoid(0.1, 0.2, 3.0)
    tau = np.linspace(0.0, 4.0, 9)
    beta = heat_frame_boundary(b, tau)
    h = 1e-6
    up = np.sqrt(1 + 2 * (tau + h)) * b.value(0.5 * np.log1p(2 * (tau + h)))
    dn = np.sqrt(1 + 2 * (tau - h)) * b.value(0.5 * np.log1p(2 * (tau - h)))
    assert np.allclose(beta.derivative(tau)[1:], ((up - dn) / (2 * h))[1:], atol=1e-7)


def test_general_zero_boundary(zero_general):
    ref = images_zero_boundary(2.0, zero_general.pdf.grid)
    assert np.max(np.abs(zero_general.cdf.values - ref.cdf.values)) <= 1e-3
    assert np.max(np.abs(zero_general.pdf.values - ref.pdf.values)) <= 1e-3


def test_general_exponential_pair():
    d = solve_general(OUHittingInput(3.0, ExponentialPair(1.0, 1.0), 2.0), 2000)
    ref = images_exponential_boundary(1.0, 1.0, 3.0, d.pdf.grid)
    assert np.max(np.abs(d.cdf.values - ref.cdf.values)) <= 1e-3
    g, G = d.resample([0.5])
    r = images_exponential_boundary(1.0, 1.0, 3.0, _at(0.5))
    assert abs(g[0] - r.pdf.values[1]) <= 1e-3
    assert abs(G[0] - r.cdf.values[1]) <= 1e-3


def test_flat_zero_level_is_images():
    d = solve_flat(0.0, 2.0, 1000, 2.0)
    g, G = d.resample([1.0])
    assert g[0] == pytest.approx(0.5521, abs=1e-3)
    assert G[0] == pytest.approx(0.2632, abs=1e-3)


def test_frame_invariance(flat_pair):
    flat, gen = flat_pair
    t = np.linspace(0.0, 2.0, 401)
    a, b = flat.resample(t), gen.resample(t)
    assert np.max(np.abs(a[0] - b[0])) <= 1e-3
    assert np.max(np.abs(a[1] - b[1])) <= 1e-3


def test_frame_invariance_coarse_late_times():
    flat = solve_flat(1.0, 2.0, 500, 2.0)
    gen = solve_general(OUHittingInput(2.0, Flat(1.0), 2.0), 500)
    t = np.linspace(0.5, 2.0, 301)
    a, b = flat.resample(t), gen.resample(t)
    assert np.max(np.abs(a[0] - b[0])) <= 1e-3
    assert np.max(np.abs(a[1] - b[1])) <= 1e-3


def test_cdf_routes_agree(flat_pair):
    for d in flat_pair:
        Gq = integrate.cumulative_trapezoid(d.pdf.values, d.t, initial=0.0)
        assert np.max(np.abs(Gq - d.cdf.values)) <= 5e-3


def test_self_convergence():
    ref = solve_general(OUHittingInput(2.0, Flat(1.0), 2.0), 4000)
    t = np.linspace(0.0, 2.0, 201)
    gr = ref.resample(t)[1]
    errs = [np.max(np.abs(solve_general(OUHittingInput(2.0, Flat(1.0), 2.0), N).resample(t)[1] - gr))
            for N in (500, 1000)]
    assert errs[1] <= 0.5 * errs[0]


@settings(max_examples=10, deadline=None)
@given(level=st.floats(-1.0, 1.0), slope=st.floats(-0.5, 0.5), gap=st.floats(0.3, 2.0))
def test_distribution_invariants(level, slope, gap):
    d = solve_general(OUHittingInput(level + gap, Linear(level, slope), 2.0), 200)
    assert np.all(d.pdf.values >= -1e-8)
    assert np.all(np.diff(d.cdf.values) >= -1e-8)
    assert np.all(d.cdf.values <= 1 + 1e-6)


def test_input_validation():
    with pytest.raises(ValueError):
        OUHittingInput(0.0, Flat(0.0), 1.0)
    with pytest.raises(ValueError):
        solve_flat(1.0, 0.5, 10, 1.0)


def test_abel_equation_differs_from_flat_equation_at_small_theta():
    # the flat equation's source carries exp(-((1+theta)b - z)^2/((1+theta)^2 - 1)),
    # which exceeds H(theta, b - z) by an O(1) factor as theta -> 0
    gap, theta, nu, ref = abel_relative_gap(1.0, 2.0, 400, 0.1)
    assert np.all(np.sign(nu) == np.sign(ref))
    assert gap > 1.0
