import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from heatpot.core import DomainError
from heatpot.specfun import (bivariate_normal_cdf, dawson, dawson_integral, heat_kernel,
                             ou_time, ou_variance, std_normal_cdf, std_normal_cdf_inv,
                             tail_expansion, tail_inverse_asymptotic)


def test_normal_cdf_values():
    assert std_normal_cdf(0.0) == 0.5
    assert abs(std_normal_cdf(38.0) - 1.0) <= 1e-15
    # erf-based oracle from the standard library
    assert abs(std_normal_cdf(1.0) - 0.5 * (1 + math.erf(1 / math.sqrt(2)))) <= 1e-15
    assert std_normal_cdf(1.0) == pytest.approx(0.8413447460685429, abs=1e-15)


def test_normal_cdf_symmetry():
    x = np.linspace(-8, 8, 1601)
    assert np.abs(std_normal_cdf(x) + std_normal_cdf(-x) - 1).max() <= 1e-15


def _bisect_inverse(p):
    lo, hi = -40.0, 40.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if std_normal_cdf(mid) < p:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def test_normal_inverse():
    assert std_normal_cdf_inv(0.5) == 0.0
    assert std_normal_cdf_inv(0.999) == pytest.approx(_bisect_inverse(0.999), abs=1e-12)
    assert std_normal_cdf_inv(0.999) == pytest.approx(3.090232, abs=1e-6)
    for p in (0.0, 1.0, -0.1, 2.0):
        with pytest.raises(DomainError):
            std_normal_cdf_inv(p)


@settings(max_examples=200)
@given(st.floats(-6, 6))
def test_inverse_round_trip(x):
    # near x = 6 one ulp of N(x) already moves the inverse by eps / phi(x)
    phi = math.exp(-0.5 * x * x) / math.sqrt(2 * math.pi)
    tol = max(1e-10, 4 * np.finfo(float).eps / phi)
    assert abs(std_normal_cdf_inv(std_normal_cdf(x)) - x) <= tol


@settings(max_examples=200)
@given(st.floats(-6, 5))
def test_inverse_round_trip_well_conditioned(x):
    assert abs(std_normal_cdf_inv(std_normal_cdf(x)) - x) <= 1e-10


def test_tail_asymptotic():
    exact = std_normal_cdf_inv(0.999)
    approx = tail_inverse_asymptotic(0.999)
    assert approx == pytest.approx(3.0913, abs=1e-3)
    assert abs(approx / exact - 1) < 5e-4
    p = 1 - 1e-7
    assert abs(tail_inverse_asymptotic(p) / std_normal_cdf_inv(p) - 1) < 1e-5
    with pytest.raises(DomainError):
        tail_inverse_asymptotic(0.6)
    with pytest.raises(DomainError):
        tail_expansion(0.5)


def _bvn_oracle(x, y, rho):
    c = 1.0 / (2 * math.pi * math.sqrt(1 - rho * rho))

    def dens(v, u):
        return c * math.exp(-(u * u - 2 * rho * u * v + v * v) / (2 * (1 - rho * rho)))

    val, _ = integrate.dblquad(dens, -12, x, -12, y, epsabs=1e-13, epsrel=1e-13)
    return val


def test_bvn_values():
    assert bivariate_normal_cdf(0.3, -0.7, 0.0) == pytest.approx(
        std_normal_cdf(0.3) * std_normal_cdf(-0.7), abs=1e-15)
    assert bivariate_normal_cdf(0, 0, 0.5) == pytest.approx(0.25 + math.asin(0.5) / (2 * math.pi),
                                                            abs=1e-12)
    assert bivariate_normal_cdf(-math.inf, 0.4, 0.3) == 0.0
    for x, y, rho in [(0.3, -0.2, 0.6), (-1.1, 0.5, -0.8), (1.5, 2.0, 0.95)]:
        assert abs(bivariate_normal_cdf(x, y, rho) - _bvn_oracle(x, y, rho)) <= 1e-10


def test_bvn_degenerate_correlation():
    assert bivariate_normal_cdf(0.3, 0.3, 1.0) == pytest.approx(std_normal_cdf(0.3), abs=1e-10)
    assert bivariate_normal_cdf(0.3, -0.3, -1.0) == pytest.approx(0.0, abs=1e-10)
    with pytest.raises(DomainError):
        bivariate_normal_cdf(0, 0, 1.5)


@settings(max_examples=60, deadline=None)
@given(st.floats(-5, 5), st.floats(-0.99, 0.99))
def test_bvn_marginal(x, rho):
    assert abs(bivariate_normal_cdf(x, math.inf, rho) - std_normal_cdf(x)) <= 1e-10
    assert abs(bivariate_normal_cdf(x, 40.0, rho) - std_normal_cdf(x)) <= 1e-10


def test_dawson_values():
    assert dawson(0.0) == 0.0

    def oracle(x):
        return integrate.quad(lambda y: math.exp(y * y - x * x), 0, x, epsabs=1e-14)[0]

    assert abs(dawson(1.0) - oracle(1.0)) <= 1e-12
    assert dawson(1.0) == pytest.approx(0.538079506, abs=1e-9)
    assert dawson(10.0) == pytest.approx(0.0502538, abs=1e-7)


@settings(max_examples=100)
@given(st.floats(-20, 20))
def test_dawson_odd_and_ode(x):
    assert dawson(-x) == -dawson(x)
    h = 1e-5
    deriv = (dawson(x + h) - dawson(x - h)) / (2 * h)
    assert abs(deriv - (1 - 2 * x * dawson(x))) <= 1e-8


def test_dawson_integral():
    ref = integrate.quad(dawson, -1.5, 0.7, epsabs=1e-14)[0]
    assert dawson_integral(-1.5, 0.7) == pytest.approx(ref, abs=1e-12)
    assert dawson_integral(0.2, 0.2) == 0.0


def test_heat_kernel():
    assert heat_kernel(1, 0) == pytest.approx(1 / math.sqrt(2 * math.pi), rel=1e-15)
    assert heat_kernel(1, 0.5) == pytest.approx(0.352065, abs=1e-6)
    mass = integrate.quad(lambda x: heat_kernel(1, x), -np.inf, np.inf)[0]
    assert mass == pytest.approx(1.0, abs=1e-10)
    with pytest.raises(DomainError):
        heat_kernel(0, 1)


def test_heat_equation():
    t, x, h = 1.0, 0.7, 1e-4
    ht = (heat_kernel(t + h, x) - heat_kernel(t - h, x)) / (2 * h)
    hxx = (heat_kernel(t, x + h) - 2 * heat_kernel(t, x) + heat_kernel(t, x - h)) / h ** 2
    assert abs(ht - 0.5 * hxx) <= 1e-6


def test_ou_variance():
    assert ou_variance(0.0) == 0.0
    assert ou_variance(0.5 * math.log(5)) == pytest.approx(2.0, rel=1e-14)
    assert ou_variance(1.0) == pytest.approx(3.194528049, abs=1e-9)
    assert ou_variance(1e-8) == pytest.approx(1e-8, rel=1e-7)
    t = np.linspace(0, 3, 31)
    assert np.all(np.diff(ou_variance(t)) > 0)
    np.testing.assert_allclose(ou_time(ou_variance(t)), t, atol=1e-14)
