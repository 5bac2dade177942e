"""Special functions: normal cdf and its inverse, bivariate normal cdf,
Dawson's integral, the heat kernel and the Ornstein-Uhlenbeck variance map.
"""
from __future__ import annotations

import math

import numpy as np
from scipy import integrate, special

from .core import DomainError

SQRT_2PI = math.sqrt(2.0 * math.pi)


def std_normal_cdf(x):
    """Standard normal cdf ``N(x)``, accurate in both tails."""
    return special.ndtr(x)


def std_normal_cdf_inv(p):
    """Inverse of :func:`std_normal_cdf` on ``(0, 1)``."""
    p = np.asarray(p, dtype=float)
    if np.any(~((p > 0) & (p < 1))):
        raise DomainError("std_normal_cdf_inv needs 0 < p < 1")
    return special.ndtri(p)[()]


def tail_log_parameter(p: float) -> float:
    """``-ln(2 sqrt(pi) (1 - p))``: the log-parameter of the upper-tail expansion."""
    return -math.log(2.0 * math.sqrt(math.pi) * (1.0 - p))


def tail_expansion(eta: float) -> float:
    """Four-term expansion ``f(eta)`` with ``N^{-1}(p) ~ sqrt(2 f(eta))``."""
    if not eta > 1.0:
        raise DomainError(f"tail expansion needs eta > 1, got {eta}")
    L = math.log(eta)
    return eta - L / 2 + (L - 2) / (4 * eta) + (L * L - 6 * L + 14) / (16 * eta * eta)


def tail_inverse_asymptotic(p: float) -> float:
    """Asymptotic inverse normal cdf for ``p`` close to 1.

    Only valid deep in the upper tail; raises :class:`DomainError` when the
    log-parameter drops to 1 or below.
    """
    if not 0.0 < p < 1.0:
        raise DomainError("p must lie in (0, 1)")
    return math.sqrt(2.0 * tail_expansion(tail_log_parameter(p)))


def bivariate_normal_cdf(x: float, y: float, rho: float) -> float:
    """``P(X <= x, Y <= y)`` for standard normals with correlation ``rho``.

    Uses ``BVN = N(x)N(y) + (1/2pi) int_0^{asin rho} exp(-(x^2 - 2xy sin t + y^2)
    / (2 cos^2 t)) dt``, which is smooth up to ``|rho| = 1``.
    """
    if not -1.0 <= rho <= 1.0:
        raise DomainError(f"correlation must lie in [-1, 1], got {rho}")
    x, y = float(x), float(y)
    if x == -math.inf or y == -math.inf:
        return 0.0
    if x == math.inf:
        return float(special.ndtr(y))
    if y == math.inf:
        return float(special.ndtr(x))
    base = float(special.ndtr(x) * special.ndtr(y))
    if rho == 0.0:
        return base
    hi = math.asin(rho)
    s2 = x * x + y * y
    xy = x * y

    def integrand(theta):
        c = math.cos(theta)
        c2 = c * c
        if c2 < 1e-300:
            # endpoint of the |rho| = 1 case
            return math.exp(-0.5 * x * x) if x == (y if theta > 0 else -y) else 0.0
        return math.exp(-(s2 - 2.0 * xy * math.sin(theta)) / (2.0 * c2))

    val, _ = integrate.quad(integrand, 0.0, hi, epsabs=1e-14, epsrel=1e-12, limit=200)
    out = base + val / (2.0 * math.pi)
    return min(max(out, 0.0), 1.0)


def dawson(x):
    """Dawson's integral ``D(x) = exp(-x^2) int_0^x exp(y^2) dy``."""
    return special.dawsn(x)


def dawson_integral(a: float, b: float) -> float:
    """``int_a^b D(x) dx`` by adaptive quadrature, split at 0."""
    pts = [a, b] if a * b >= 0 else [a, 0.0, b]
    total = 0.0
    for lo, hi in zip(pts[:-1], pts[1:]):
        total += integrate.quad(special.dawsn, lo, hi, epsabs=1e-13, epsrel=1e-13, limit=200)[0]
    return total


def heat_kernel(t, x):
    """Standard heat kernel ``H(t, x) = exp(-x^2 / 2t) / sqrt(2 pi t)``."""
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise DomainError("heat kernel needs t > 0")
    return _heat(t, np.asarray(x, dtype=float))[()]


def _heat(t, x):
    # unchecked kernel for inner loops; callers guarantee t > 0
    return np.exp(-x * x / (2.0 * t)) / np.sqrt(2.0 * np.pi * t)


def ou_variance(t):
    """Time change of the standard OU process: ``(exp(2t) - 1) / 2``."""
    return 0.5 * np.expm1(2.0 * np.asarray(t, dtype=float))[()]


def ou_time(tau):
    """Inverse of :func:`ou_variance`: ``ln sqrt(1 + 2 tau)``."""
    return 0.5 * np.log1p(2.0 * np.asarray(tau, dtype=float))[()]
