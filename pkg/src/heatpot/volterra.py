"""Second-kind Volterra equations with a ``1/sqrt(t - t')`` singularity.

The archetype is

    nu(t) + int_0^t K(t, t') nu(t') / sqrt(t - t') dt' = f(t)

with a regular kernel ``K``.  Writing the singular factor as ``-2 d sqrt(t - t')``
and applying the trapezoidal rule panel by panel gives the identity

    f_k = nu_k + sum_{l=1}^{k} (K_{k,l} nu_l + K_{k,l-1} nu_{l-1}) Pi_{k,l},
    Pi_{k,l} = (t_l - t_{l-1}) / (sqrt(t_k - t_{l-1}) + sqrt(t_k - t_l)),

which is solved for ``nu_k`` by forward induction from ``nu_0 = f_0``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import integrate, special

from .core import DomainError, SampledSeries, SolveReport, TimeGrid
from .specfun import _heat


class SingularStepError(ArithmeticError):
    """The diagonal coefficient ``1 + K_{k,k} sqrt(t_k - t_{k-1})`` vanished."""

    def __init__(self, k: int, denominator: float):
        super().__init__(f"singular induction step k={k} (denominator {denominator:.3e})")
        self.k = k
        self.denominator = denominator


class StepFailure(ArithmeticError):
    """Newton iteration did not converge at an induction step.

    Carries the partial solution (valid up to ``k - 1``) so that callers can
    report it, e.g. as a blow-up.
    """

    def __init__(self, k, t, residual, nu, mu, report):
        super().__init__(f"Newton failed at step k={k} (t={t:.6g}), last residual {residual:.3e}")
        self.k = k
        self.t = t
        self.residual = residual
        self.nu = nu
        self.mu = mu
        self.report = report


@dataclass(frozen=True)
class WeaklySingularSystem:
    """Kernel and right-hand side of the archetypal equation.

    ``kernel(t, tp)`` returns ``K(t, tp)`` for an array ``tp <= t``; the last
    entry of ``tp`` may equal ``t`` and must then yield the diagonal limit.
    ``rhs`` is vectorised over node times.
    """

    kernel: Callable[[float, np.ndarray], np.ndarray]
    rhs: Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class NewtonConfig:
    tol: float = 1e-12
    max_iter: int = 50
    fd_step: float = 1e-7
    max_halvings: int = 10

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("Newton tolerance must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")


def quadrature_weights(nodes: np.ndarray, k: int) -> np.ndarray:
    """``Pi_{k,l}`` for ``l = 1..k`` (array of length ``k``)."""
    d = nodes[k] - nodes[: k + 1]
    sq = np.sqrt(d)
    return np.diff(nodes[: k + 1]) / (sq[:-1] + sq[1:])


def product_trapezoid(w: np.ndarray, pi: np.ndarray) -> float:
    """``sum_l (w_l + w_{l-1}) Pi_{k,l}``, approximating ``int w / sqrt(t_k - t') dt'``."""
    return float(np.dot(w[1:] + w[:-1], pi))


def solve_linear(system: WeaklySingularSystem, grid: TimeGrid, rows: Optional[dict] = None) -> SampledSeries:
    """Induction solve of the linear equation on ``grid``.

    If ``rows`` is a dict, kernel rows are stored in it keyed by step.
    """
    t = grid.nodes
    f = np.asarray(system.rhs(t), dtype=float) * np.ones_like(t)
    nu = np.empty_like(t)
    nu[0] = f[0]
    for k in range(1, t.size):
        row = np.asarray(system.kernel(t[k], t[: k + 1]), dtype=float) * np.ones(k + 1)
        if rows is not None:
            rows[k] = row
        pi = quadrature_weights(t, k)
        w = row[:k] * nu[:k]
        known = np.dot(w[1:] + w[:-1], pi[:-1]) + w[k - 1] * pi[-1]
        denom = 1.0 + row[k] * pi[-1]
        if abs(denom) < 1e-14:
            raise SingularStepError(k, denom)
        nu[k] = (f[k] - known) / denom
    return SampledSeries(grid, nu)


def discrete_residual(system: WeaklySingularSystem, grid: TimeGrid, nu) -> np.ndarray:
    """``f_k - nu_k - sum(...)`` at every node; zero up to rounding for a solve."""
    t = grid.nodes
    nu = np.asarray(getattr(nu, "values", nu), dtype=float)
    f = np.asarray(system.rhs(t), dtype=float) * np.ones_like(t)
    res = np.empty_like(t)
    res[0] = f[0] - nu[0]
    for k in range(1, t.size):
        row = np.asarray(system.kernel(t[k], t[: k + 1]), dtype=float) * np.ones(k + 1)
        res[k] = f[k] - nu[k] - product_trapezoid(row * nu[: k + 1], quadrature_weights(t, k))
    return res


def newton_scalar(fun, x0, config: NewtonConfig):
    """Damped finite-difference Newton on a scalar residual.

    Returns ``(x, residual, extra, iterations, ok)`` where ``extra`` is the
    auxiliary output of ``fun`` at the accepted point.
    """
    x = x0
    r, extra = fun(x)
    if not np.isfinite(r):
        return x, r, extra, 0, False
    for it in range(1, config.max_iter + 1):
        if abs(r) <= config.tol:
            return x, r, extra, it - 1, True
        h = config.fd_step * max(abs(x), 1.0)
        rh, _ = fun(x + h)
        d = (rh - r) / h
        if not np.isfinite(d) or d == 0.0:
            return x, r, extra, it, False
        dx = -r / d
        for _ in range(config.max_halvings + 1):
            xn = x + dx
            rn, en = fun(xn)
            if np.isfinite(rn) and abs(rn) < abs(r):
                break
            dx *= 0.5
        else:
            # no decrease; accept only if we are already at rounding level
            return x, r, extra, it, abs(r) <= 100 * config.tol
        x, r, extra = xn, rn, en
    return x, r, extra, config.max_iter, abs(r) <= config.tol


def solve_stepwise_nonlinear(step, grid: TimeGrid, config: NewtonConfig = NewtonConfig(),
                             init=(0.0, 0.0), guess=None, fallback=None):
    """Induction with a scalar Newton solve per step.

    ``step(k, mu_k, nu, mu)`` returns ``(residual, nu_k)`` where ``nu_k`` has
    already been eliminated in terms of the trial ``mu_k``; ``nu`` and ``mu``
    hold the accepted values for indices ``< k``.  ``guess(k, nu, mu)``
    supplies the starting point (default ``mu_{k-1}``).  ``fallback(k, fun,
    x0)``, if given, is tried when Newton fails and returns a root or None.

    Raises :class:`StepFailure` on non-convergence.
    """
    t = grid.nodes
    n = t.size
    nu = np.full(n, np.nan)
    mu = np.full(n, np.nan)
    nu[0], mu[0] = init
    iters = np.zeros(n, dtype=int)
    resid = np.zeros(n)
    report = SolveReport(iterations=iters, residuals=resid)
    for k in range(1, n):
        fun = lambda m, k=k: step(k, m, nu, mu)  # noqa: E731
        x0 = guess(k, nu, mu) if guess is not None else mu[k - 1]
        x, r, nuk, it, ok = newton_scalar(fun, x0, config)
        if not ok and fallback is not None:
            root = fallback(k, fun, x0)
            if root is not None:
                x, r, nuk, it2, ok = newton_scalar(fun, root, config)
                it += it2
        iters[k] = it
        resid[k] = r
        if not ok:
            resid[k:] = np.nan
            report.failed_step = k
            report.failure_time = float(t[k])
            report.message = f"Newton failed at step {k}"
            raise StepFailure(k, float(t[k]), float(r), nu, mu, report)
        mu[k] = x
        nu[k] = nuk
    return SampledSeries(grid, nu), SampledSeries(grid, mu), report


# ---------------------------------------------------------------------------
# Abel equation of the second kind


def abel_analytic(xi: float, f, grid: TimeGrid) -> SampledSeries:
    """Closed-form solution of ``y + xi int_0^t y(s)/sqrt(t-s) ds = f``.

    ``y = F + pi xi^2 int_0^t exp(pi xi^2 (t-s)) F(s) ds`` with
    ``F = f - xi int_0^t f(s)/sqrt(t-s) ds``.  ``F`` uses the product
    trapezoidal rule on ``grid``.  Written literally the outer integral
    cancels catastrophically (errors grow like ``exp(pi xi^2 t)``), so the
    inner integral is folded in analytically:

        y = F + c int_0^t f(u) E(t - u) du,   c = pi xi^2,
        E(r) = erfcx(sqrt(c r))             for xi > 0,
        E(r) = 2 exp(c r) - erfcx(sqrt(c r)) for xi < 0,

    and the remaining integral (smooth apart from a square-root endpoint) is
    done by adaptive quadrature, since ``f`` is available as a function.
    """
    t = grid.nodes
    fv = np.asarray(f(t), dtype=float) * np.ones_like(t)
    if xi == 0.0:
        return SampledSeries(grid, fv)
    F = fv.copy()
    for k in range(1, t.size):
        F[k] -= xi * product_trapezoid(fv[: k + 1], quadrature_weights(t, k))
    c = math.pi * xi * xi
    if xi > 0:
        def kern(r):
            return special.erfcx(math.sqrt(c * r))
    else:
        def kern(r):
            return 2.0 * math.exp(c * r) - special.erfcx(math.sqrt(c * r))
    y = F.copy()
    for k in range(1, t.size):
        tk = float(t[k])
        val, _ = integrate.quad(lambda u: float(f(u)) * kern(tk - u), float(t[0]), tk,
                                epsabs=1e-13, epsrel=1e-12, limit=200)
        y[k] += c * val
    return SampledSeries(grid, y)


def abel_flat_ou_nu(b: float, z: float, theta):
    """Laplace-inversion solution of the small-``theta`` Abel equation

        nu + (b / sqrt(2 pi)) int_0^theta nu / sqrt(theta - s) ds + H(theta, b - z) = 0,

    i.e. ``b exp(b^2 theta/2 + b(z-b)) N(-(b theta + z - b)/sqrt(theta)) - H(theta, b - z)``.
    """
    theta = np.asarray(theta, dtype=float)
    if np.any(theta <= 0):
        raise DomainError("abel_flat_ou_nu needs theta > 0")
    first = 0.0
    if b != 0.0:
        arg = -(b * theta + z - b) / np.sqrt(theta)
        first = b * np.exp(0.5 * b * b * theta + b * (z - b) + special.log_ndtr(arg))
    return (first - _heat(theta, b - z))[()]
