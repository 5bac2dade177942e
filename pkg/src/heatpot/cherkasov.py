"""Reduction of a scalar diffusion to the standard Wiener process.

For ``dx~ = delta(t~, x~) dt~ + sigma(t~, x~) dW`` define

    beta  = sigma int^x~ dy / sigma,
    gamma = 2 delta - sigma sigma_x - 2 sigma int^x~ sigma_t / sigma^2 dy,

and the determinants ``P = |beta gamma; beta_x gamma_x|``,
``Q = |sigma gamma; sigma_x gamma_x|`` and the 3x3 Wronskian-type ``R`` of
``(sigma, beta, gamma)``.  When ``R`` vanishes identically the map

    t = int_0^t~ Phi^2 du,   x = Phi beta / sigma + 1/2 int_0^t~ Phi P / sigma du,
    Phi = exp(-1/2 int_0^t~ Q / sigma du)

takes the process to a standard Brownian motion.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import integrate

from .core import BoundaryCurve, DomainError, Tabulated, TimeGrid

_Fn = Callable[[float, float], float]


class NotReducibleError(ValueError):
    """The reducibility determinant does not vanish along the path."""


def _zero(t, x):
    return 0.0


@dataclass(frozen=True)
class DiffusionSpec:
    """Drift, volatility and the partial derivatives the transform needs.

    All callables take ``(t~, x~)``.  Volatility derivatives left as None are
    taken to be zero, i.e. the default is a volatility that depends on
    neither argument.  ``x_ref`` is the lower limit of the ``dy``
    antiderivatives.
    """

    drift: _Fn
    drift_x: _Fn
    drift_xx: _Fn
    sigma: _Fn = lambda t, x: 1.0  # noqa: E731
    sigma_x: Optional[_Fn] = None
    sigma_xx: Optional[_Fn] = None
    sigma_xxx: Optional[_Fn] = None
    sigma_t: Optional[_Fn] = None
    sigma_tx: Optional[_Fn] = None
    x_ref: float = 0.0

    def d(self, name):
        fn = getattr(self, name)
        return _zero if fn is None else fn


def wiener_spec() -> DiffusionSpec:
    return DiffusionSpec(drift=_zero, drift_x=_zero, drift_xx=_zero)


def ou_spec() -> DiffusionSpec:
    """Standard OU process ``dx = -x dt + dW``."""
    return DiffusionSpec(drift=lambda t, x: -x, drift_x=lambda t, x: -1.0, drift_xx=_zero)


@dataclass(frozen=True)
class WienerImage:
    """Image ``(t, x)`` of a point, the image ``z`` of the start and ``dx/dx~``."""

    t: float
    x: float
    z: Optional[float]
    jacobian: float


@dataclass(frozen=True)
class _Local:
    sigma: float
    beta: tuple   # (beta, beta_x, beta_xx)
    gamma: tuple  # (gamma, gamma_x, gamma_xx)
    sig: tuple    # (sigma, sigma_x, sigma_xx)


def _antiderivatives(spec: DiffusionSpec, t, x):
    """``I = int dy/sigma`` and ``J = int sigma_t/sigma^2 dy`` from ``x_ref`` to ``x``."""
    s = spec.sigma
    st = spec.d("sigma_t")
    if spec.sigma_x is None:
        # volatility constant in x: both integrals are linear
        sv = s(t, x)
        return (x - spec.x_ref) / sv, (x - spec.x_ref) * st(t, x) / sv ** 2
    opts = dict(epsabs=1e-13, epsrel=1e-12, limit=200)
    I = integrate.quad(lambda y: 1.0 / s(t, y), spec.x_ref, x, **opts)[0]
    J = 0.0
    if spec.sigma_t is not None:
        J = integrate.quad(lambda y: st(t, y) / s(t, y) ** 2, spec.x_ref, x, **opts)[0]
    return I, J


def _local(spec: DiffusionSpec, t: float, x: float) -> _Local:
    s = spec.sigma(t, x)
    if not s > 0:
        raise DomainError(f"volatility must be positive, got {s} at ({t}, {x})")
    sx = spec.d("sigma_x")(t, x)
    sxx = spec.d("sigma_xx")(t, x)
    sxxx = spec.d("sigma_xxx")(t, x)
    st = spec.d("sigma_t")(t, x)
    stx = spec.d("sigma_tx")(t, x)
    I, J = _antiderivatives(spec, t, x)
    beta = (s * I, sx * I + 1.0, sxx * I + sx / s)
    d, dx, dxx = spec.drift(t, x), spec.drift_x(t, x), spec.drift_xx(t, x)
    g = 2 * d - s * sx - 2 * s * J
    # d/dx of J is sigma_t / sigma^2
    jx = st / s ** 2
    jxx = (stx * s - 2 * st * sx) / s ** 3
    gx = 2 * dx - sx * sx - s * sxx - 2 * sx * J - 2 * s * jx
    gxx = 2 * dxx - 3 * sx * sxx - s * sxxx - 2 * sxx * J - 4 * sx * jx - 2 * s * jxx
    return _Local(s, beta, (g, gx, gxx), (s, sx, sxx))


def _PQR(loc: _Local):
    b, g, sg = loc.beta, loc.gamma, loc.sig
    P = b[0] * g[1] - b[1] * g[0]
    Q = sg[0] * g[1] - sg[1] * g[0]
    R = float(np.linalg.det(np.array([[sg[0], b[0], g[0]], [sg[1], b[1], g[1]], [sg[2], b[2], g[2]]])))
    return P, Q, R


def cherkasov_residual(spec: DiffusionSpec, t: float, x: float) -> float:
    """Determinant ``R(t~, x~)``; zero means the diffusion is reducible."""
    return _PQR(_local(spec, float(t), float(x)))[2]


def integrating_factor(spec: DiffusionSpec, t: float, x: float) -> float:
    """``Phi(t~, x~) = exp(-1/2 int_0^t~ Q/sigma du)``."""
    return _integrate_path(spec, t, x)[0]


def _integrate_path(spec: DiffusionSpec, t: float, x: float, check_tol: float = 1e-8):
    """Return ``(Phi, int Phi^2, int Phi P / sigma)`` along ``u in [0, t]`` at fixed ``x``.

    The three integrals are integrated together as an ODE system to tight
    tolerance; ``R`` is checked at the solver's nodes.
    """
    if t == 0.0:
        return 1.0, 0.0, 0.0
    worst = [0.0]

    def rhs(u, y):
        loc = _local(spec, u, x)
        P, Q, R = _PQR(loc)
        worst[0] = max(worst[0], abs(R))
        phi = math.exp(-0.5 * y[0])
        return [Q / loc.sigma, phi * phi, phi * P / loc.sigma]

    sol = integrate.solve_ivp(rhs, (0.0, t), [0.0, 0.0, 0.0], method="DOP853",
                              rtol=1e-12, atol=1e-13)
    if not sol.success:
        raise ArithmeticError(f"path integration failed: {sol.message}")
    if worst[0] > check_tol:
        raise NotReducibleError(f"|R| = {worst[0]:.3e} exceeds {check_tol} on the path at x~={x}")
    y = sol.y[:, -1]
    return math.exp(-0.5 * y[0]), y[1], y[2]


def _image(spec: DiffusionSpec, t: float, x: float):
    phi, tt, pint = _integrate_path(spec, t, x)
    loc = _local(spec, t, x)
    return tt, phi * loc.beta[0] / loc.sigma + 0.5 * pint


def start_point(spec: DiffusionSpec, z: float) -> float:
    """Image of the start ``z~``: ``beta(0, z~) / sigma(0, z~)``."""
    loc = _local(spec, 0.0, float(z))
    return loc.beta[0] / loc.sigma


def to_wiener(spec: DiffusionSpec, t: float, x: float, z: Optional[float] = None) -> WienerImage:
    """Map ``(t~, x~)`` to Wiener coordinates.

    The jacobian ``dx/dx~`` is a fourth-order central difference of the map.
    """
    t, x = float(t), float(x)
    if t < 0:
        raise DomainError("t~ must be nonnegative")
    tt, xx = _image(spec, t, x)
    h = 1e-3 * max(1.0, abs(x))
    xs = [_image(spec, t, x + k * h)[1] for k in (-2, -1, 1, 2)]
    jac = (xs[0] - 8 * xs[1] + 8 * xs[2] - xs[3]) / (12 * h)
    return WienerImage(tt, xx, None if z is None else start_point(spec, z), jac)


def transform_boundary(spec: DiffusionSpec, boundary: BoundaryCurve, grid: TimeGrid) -> Tabulated:
    """Tabulate the image of ``b~`` on the image of ``grid``.

    Node ``k`` is ``(t(t~_k, b~_k), x(t~_k, b~_k))``; image times must be
    strictly increasing.
    """
    tt = np.empty(len(grid))
    xx = np.empty(len(grid))
    for k, u in enumerate(grid.nodes):
        tt[k], xx[k] = _image(spec, float(u), float(boundary.value(u)))
    if np.any(np.diff(tt) <= 0):
        raise ValueError("image time is not increasing along the boundary")
    return Tabulated(tt, xx)
