"""Stationary profile of the integrate-and-fire population model.

Voltages diffuse towards ``mu = m0 + m1 lambda``, are absorbed at 0 and
re-injected at ``X0 < 0`` at the firing rate ``lambda``.  The stationary
density solves ``1/2 p'' + ((x - mu) p)' = -lambda delta(x - X0)`` on
``(-inf, 0]`` with ``p(0) = 0``:

    p(x) = nu exp((X0 - mu)^2 - (x - mu)^2)                       x <= X0,
    p(x) = 2 lambda (exp(mu^2 - (x - mu)^2) D(-mu) - D(x - mu))    X0 <= x <= 0,

and normalisation fixes ``lambda``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize, special

from .core import DomainError
from .specfun import dawson, dawson_integral

SQRT_PI = math.sqrt(math.pi)


class NoStationarySolutionError(ArithmeticError):
    """The firing-rate equation has no root in the search bracket."""


@dataclass(frozen=True)
class NeuronParams:
    X0: float
    m0: float
    m1: float

    def __post_init__(self):
        if not self.X0 < 0:
            raise ValueError(f"re-injection point must be negative, got {self.X0}")


@dataclass(frozen=True)
class StationaryProfile:
    params: NeuronParams
    lam: float
    mu: float
    nu: float

    def __call__(self, x):
        return evaluate_profile(self, x)[0]


def rate_equation(lam: float, params: NeuronParams) -> float:
    """Left-hand side of the firing-rate equation; zero at the stationary ``lambda``.

    Uses ``exp(a^2) N(-sqrt(2) a) = erfcx(a) / 2`` to stay finite for large drifts.
    """
    mu = params.m0 + params.m1 * lam
    a = params.X0 - mu
    head = 0.5 * SQRT_PI * (special.erfcx(mu) * dawson(-mu) - special.erfcx(-a) * dawson(a))
    return head - dawson_integral(a, -mu) - 1.0 / (2.0 * lam)


def _nu(lam, mu, X0):
    return 2.0 * lam * (math.exp(mu * mu - (X0 - mu) ** 2) * dawson(-mu) - dawson(X0 - mu))


def solve_stationary(params: NeuronParams, lam_min: float = 1e-6, lam_max: float = 1e3,
                     n_scan: int = 400) -> StationaryProfile:
    """Firing rate by a log-spaced bracket scan followed by Brent's method."""
    grid = np.geomspace(lam_min, lam_max, n_scan)
    vals = np.array([rate_equation(v, params) for v in grid])
    sign = np.sign(vals)
    idx = np.nonzero(sign[:-1] * sign[1:] < 0)[0]
    if idx.size == 0:
        raise NoStationarySolutionError(
            f"no sign change of the rate equation on [{lam_min}, {lam_max}]")
    i = idx[0]
    lam = optimize.brentq(rate_equation, grid[i], grid[i + 1], args=(params,),
                          xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
    mu = params.m0 + params.m1 * lam
    return StationaryProfile(params, lam, mu, _nu(lam, mu, params.X0))


def evaluate_profile(profile: StationaryProfile, x):
    """``(p(x), p'(x))`` from the closed forms; at ``X0`` the right branch is used."""
    x = np.asarray(x, dtype=float)
    if np.any(x > 0):
        raise DomainError("the profile lives on x <= 0")
    lam, mu, nu, X0 = profile.lam, profile.mu, profile.nu, profile.params.X0
    y = x - mu
    left = x < X0
    p = np.empty_like(x)
    dp = np.empty_like(x)
    pl = nu * np.exp((X0 - mu) ** 2 - y[left] ** 2)
    p[left] = pl
    dp[left] = -2.0 * y[left] * pl
    yr = y[~left]
    e = np.exp(mu * mu - yr * yr) * dawson(-mu)
    d = dawson(yr)
    p[~left] = 2.0 * lam * (e - d)
    dp[~left] = 2.0 * lam * (-2.0 * yr * e - (1.0 - 2.0 * yr * d))
    return p[()], dp[()]


def left_derivative(profile: StationaryProfile, x):
    """``p'`` of the left branch continued to ``x`` (used for the jump at ``X0``)."""
    y = np.asarray(x, dtype=float) - profile.mu
    X0 = profile.params.X0
    return -2.0 * y * profile.nu * np.exp((X0 - profile.mu) ** 2 - y * y)


def derivative_jump(profile: StationaryProfile) -> float:
    """``p'(X0+) - p'(X0-)``; equals ``-2 lambda``."""
    X0 = profile.params.X0
    return float(evaluate_profile(profile, X0)[1] - left_derivative(profile, X0))


def check_normalization(profile: StationaryProfile) -> float:
    """``|int p - 1|``: closed form left of ``X0``, quadrature on ``[X0, 0]``."""
    mu, nu, X0 = profile.mu, profile.nu, profile.params.X0
    left = 0.5 * SQRT_PI * nu * special.erfcx(mu - X0)
    right = integrate.quad(lambda x: float(evaluate_profile(profile, x)[0]), X0, 0.0,
                           epsabs=1e-14, epsrel=1e-13, limit=200)[0]
    return abs(left + right - 1.0)


def ode_residual(profile: StationaryProfile, x):
    """``(x - mu) p + p'/2`` minus its expected value (0 left of ``X0``, ``-lambda`` right)."""
    x = np.asarray(x, dtype=float)
    p, dp = evaluate_profile(profile, x)
    target = np.where(x < profile.params.X0, 0.0, -profile.lam)
    return (x - profile.mu) * p + 0.5 * dp - target
