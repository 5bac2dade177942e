import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from heatpot.cherkasov import (DiffusionSpec, NotReducibleError, cherkasov_residual,
                               integrating_factor, ou_spec, start_point, to_wiener,
                               transform_boundary, wiener_spec)
from heatpot.core import DomainError, ExponentialPair, Flat, Sinusoid, make_uniform_grid
from heatpot.specfun import heat_kernel, ou_variance


def cubic_spec():
    return DiffusionSpec(drift=lambda t, x: -x ** 3, drift_x=lambda t, x: -3 * x ** 2,
                         drift_xx=lambda t, x: -6 * x)


def gbm_spec(mu=0.05, s=0.3):
    # geometric Brownian motion: reducible through the logarithm
    return DiffusionSpec(drift=lambda t, x: mu * x, drift_x=lambda t, x: mu,
                         drift_xx=lambda t, x: 0.0, sigma=lambda t, x: s * x,
                         sigma_x=lambda t, x: s, sigma_xx=lambda t, x: 0.0,
                         sigma_xxx=lambda t, x: 0.0, x_ref=1.0)


@settings(max_examples=30, deadline=None)
@given(st.floats(0, 3), st.floats(-4, 4))
def test_residual_vanishes_for_reducible(t, x):
    assert cherkasov_residual(wiener_spec(), t, x) == 0.0
    assert abs(cherkasov_residual(ou_spec(), t, x)) <= 1e-10


def test_residual_gbm():
    for x in (0.5, 1.0, 3.0):
        assert abs(cherkasov_residual(gbm_spec(), 0.2, x)) <= 1e-10


def test_residual_nonreducible():
    # rows (1, x, -2x^3), (0, 1, -6x^2), (0, 0, -12x) give R = -12x
    assert cherkasov_residual(cubic_spec(), 0.0, 1.0) == pytest.approx(-12.0, rel=1e-12)
    with pytest.raises(NotReducibleError):
        to_wiener(cubic_spec(), 0.5, 1.0)


def test_negative_volatility():
    spec = DiffusionSpec(drift=lambda t, x: 0.0, drift_x=lambda t, x: 0.0,
                         drift_xx=lambda t, x: 0.0, sigma=lambda t, x: -1.0)
    with pytest.raises(DomainError):
        cherkasov_residual(spec, 0.0, 0.0)


@settings(max_examples=15, deadline=None)
@given(st.floats(0, 2), st.floats(-3, 3))
def test_wiener_identity(t, x):
    img = to_wiener(wiener_spec(), t, x, z=0.3)
    assert img.t == pytest.approx(t, abs=1e-12)
    assert img.x == pytest.approx(x, abs=1e-12)
    assert img.z == pytest.approx(0.3)
    assert img.jacobian == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("t,x", [(0.3, -1.0), (1.0, 0.5), (2.0, 2.0)])
def test_ou_map(t, x):
    img = to_wiener(ou_spec(), t, x, z=2.0)
    assert abs(img.t - ou_variance(t)) <= 1e-8
    assert abs(img.x - math.exp(t) * x) <= 1e-8
    assert img.jacobian == pytest.approx(math.exp(t), rel=1e-9)
    assert img.z == 2.0
    assert integrating_factor(ou_spec(), t, x) == pytest.approx(math.exp(t), rel=1e-11)


def test_gbm_start_is_log():
    assert start_point(gbm_spec(), math.e) == pytest.approx(1 / 0.3, rel=1e-10)


def test_image_time_increases():
    ts = np.linspace(0, 2, 11)
    vals = [to_wiener(ou_spec(), t, 0.7).t for t in ts]
    assert np.all(np.diff(vals) > 0)


def test_ou_density_round_trip():
    # transport H(t, x - z) back to the OU frame and integrate over x~
    t_tilde, z = 1.0, 2.0
    spec = ou_spec()
    zi = start_point(spec, z)

    def dens(x):
        img = to_wiener(spec, t_tilde, x)
        return abs(img.jacobian) * heat_kernel(img.t, img.x - zi)

    m = math.exp(-t_tilde) * z
    mass = integrate.quad(dens, m - 12, m + 12, epsabs=1e-10, limit=200)[0]
    assert mass == pytest.approx(1.0, abs=1e-6)


def test_transform_boundary_wiener():
    g = make_uniform_grid(1.0, 20)
    b = Sinusoid(0.1, 0.2, 5)
    img = transform_boundary(wiener_spec(), b, g)
    np.testing.assert_allclose(img.values, b.value(g.nodes), atol=1e-12)
    np.testing.assert_allclose(img.nodes, g.nodes, atol=1e-12)


def test_transform_boundary_ou_flat():
    g = make_uniform_grid(1.0, 20)
    img = transform_boundary(ou_spec(), Flat(0.8), g)
    tau = img.nodes
    np.testing.assert_allclose(img.values, np.sqrt(1 + 2 * tau) * 0.8, atol=1e-8)


def test_transform_boundary_exponential_pair():
    A, B = 1.0, 0.5
    g = make_uniform_grid(1.0, 20)
    img = transform_boundary(ou_spec(), ExponentialPair(A, B), g)
    np.testing.assert_allclose(img.values, 2 * B * img.nodes + A + B, atol=1e-8)
