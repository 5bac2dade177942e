"""Structural default boundary calibrated to a constant default intensity.

A firm's distance to default is a Brownian motion from 0.  There is no
barrier before ``tau``; from ``tau`` on the barrier ``b(t)`` absorbs, and it
is chosen so that the default probability is ``pi(t) = 1 - exp(-eta t)``.
The density splits into the free part ``q`` (the heat kernel started from
``H(tau, .)`` truncated below ``b(tau)``) and a heat potential ``r``:

    q(t, x) = H(t, x) N((tau x / t - b(tau)) / sqrt(u)),   u = (t - tau) tau / t.

Two equivalent closures fix ``b``: the default rate equals ``eta exp(-eta t)``
(differential form) or the surviving mass equals ``exp(-eta t)``
(integrated form).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np
from scipy import optimize

from .core import (BoundaryCurve, SampledSeries, SolveReport, Tabulated, TimeGrid,
                   make_graded_grid)
from .potentials import eliminate_density, flux_above, flux_row_sum, layer_integral, layer_row
from .specfun import (SQRT_2PI, _heat, bivariate_normal_cdf, std_normal_cdf, std_normal_cdf_inv,
                      tail_inverse_asymptotic)
from .volterra import NewtonConfig, newton_scalar

DIFFERENTIAL = "differential"
INTEGRATED = "integrated"


def startup_barrier(eta: float, tau: float) -> float:
    """``b(tau) = -sqrt(tau) N^{-1}(exp(-eta tau))``: all default mass at ``tau`` lies below it."""
    return -math.sqrt(tau) * float(std_normal_cdf_inv(math.exp(-eta * tau)))


def startup_barrier_asymptotic(eta: float, tau: float, refined: bool = False) -> float:
    """Tail approximation ``-sqrt(2 tau ln(1/(2 sqrt(pi) eta tau)))``.

    With ``refined`` the full tail expansion of the inverse normal is used.
    """
    if refined:
        return -math.sqrt(tau) * tail_inverse_asymptotic(math.exp(-eta * tau))
    return -math.sqrt(2.0 * tau * math.log(1.0 / (2.0 * math.sqrt(math.pi) * eta * tau)))


@dataclass(frozen=True)
class CalibrationInput:
    eta: float
    tau: float
    T: float
    N: int = 500
    form: str = DIFFERENTIAL
    grading: Optional[float] = None
    startup_layer: float = 3.0
    exact_last: Optional[bool] = None
    newton: NewtonConfig = field(default_factory=NewtonConfig)

    def __post_init__(self):
        if not self.eta > 0:
            raise ValueError(f"intensity must be positive, got {self.eta}")
        if not 0 < self.tau < self.T:
            raise ValueError(f"need 0 < tau < T, got tau={self.tau}, T={self.T}")
        if self.form not in (DIFFERENTIAL, INTEGRATED):
            raise ValueError(f"form must be {DIFFERENTIAL!r} or {INTEGRATED!r}")
        if not self.startup_layer >= 0:
            raise ValueError("startup_layer must be nonnegative")

    @property
    def last_interval_exact(self) -> bool:
        """Resolved ``exact_last``: on for the integrated form, off for the differential form."""
        return self.form == INTEGRATED if self.exact_last is None else bool(self.exact_last)

    @property
    def grid(self) -> TimeGrid:
        """Graded grid on ``[tau, T]``; by default the first step is ``tau/10``."""
        g = self.grading
        if g is None:
            g = max(1.0, math.log((self.T - self.tau) / (0.1 * self.tau)) / math.log(self.N))
        return make_graded_grid(self.T, self.N, g, start=self.tau)


@dataclass(frozen=True)
class CalibratedBoundary:
    """Calibrated barrier; values after a failed step are NaN."""

    b: SampledSeries
    nu: SampledSeries
    report: SolveReport
    tau: float
    eta: float
    slope: SampledSeries
    exact_last: bool = True

    @property
    def valid(self) -> int:
        fs = self.report.failed_step
        return len(self.b) if fs is None else fs

    @property
    def boundary(self) -> Tabulated:
        """Converged part as a curve carrying the slopes used by the solver."""
        n = self.valid
        return Tabulated(self.b.t[:n], self.b.values[:n], self.slope.values[:n])


# ---------------------------------------------------------------------------
# the free part q


def _w(t, x, tau, b_tau):
    u = (t - tau) * tau / t
    return (tau * x / t - b_tau) / np.sqrt(u), u


def q_value(t, x, tau, b_tau):
    """``q(t, x)`` for ``t > tau``."""
    w, _ = _w(t, x, tau, b_tau)
    return _heat(t, x) * std_normal_cdf(w)


def q_flux(t, b, tau, b_tau):
    """Outflow ``1/2 dq/dx`` at ``x = b`` with the above orientation sign convention.

    ``-H(t, b)/(2t) (b N(w) - tau H(u, tau b/t - b(tau)))``.
    """
    w, u = _w(t, b, tau, b_tau)
    return -_heat(t, b) / (2.0 * t) * (b * std_normal_cdf(w) - tau * _heat(u, tau * b / t - b_tau))


def q_mass(t, b, tau, b_tau):
    """``int_b^inf q(t, x) dx = P(W_t > b, W_tau > b(tau))``."""
    c = b_tau / math.sqrt(tau)
    y = b / math.sqrt(t)
    return (1.0 - std_normal_cdf(y) - std_normal_cdf(c)
            + bivariate_normal_cdf(c, y, math.sqrt(tau / t)))


# ---------------------------------------------------------------------------
# calibration


def _bracket_fallback(k, fun, x0):
    """Scan outward from ``x0`` for a sign change and polish with Brent's method."""
    def r(x):
        v = fun(x)[0]
        return v if np.isfinite(v) else np.nan

    r0 = r(x0)
    if not np.isfinite(r0):
        return None
    for step in 0.01 * 2.0 ** np.arange(12):
        for sgn in (-1.0, 1.0):
            x1 = x0 + sgn * step
            r1 = r(x1)
            if np.isfinite(r1) and np.sign(r1) != np.sign(r0):
                lo, hi = sorted((x0, x1))
                return optimize.brentq(r, lo, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps)
    return None


def calibrate(inp: CalibrationInput, grid: Optional[TimeGrid] = None) -> CalibratedBoundary:
    """Solve for the barrier on ``[tau, T]`` step by step, ``nu(tau) = 0``.

    Step ``k`` takes ``b_k`` as unknown and the slope ``(b_k - b_{k-1})/Delta``.
    The integrated form eliminates ``nu_k`` from the Dirichlet condition
    ``r = -q`` and matches the surviving mass at ``t_k``.  The differential
    form uses that slope on ``[t_{k-1}, t_k]`` and matches the default rate
    at ``t_{k-1}``; collocating at ``t_k`` instead makes the step map unstable.
    Within the startup layer ``t - tau <= startup_layer * tau`` the discrete
    rate is not resolved (the barrier leaves ``b(tau)`` like ``sqrt(t - tau)``),
    so there the differential form also matches the surviving mass; the
    report lists this as a warning.
    Each step runs Newton's method with a bracketed Brent fallback; a failing
    step ends the run and the partial boundary is returned.

    ``exact_last`` (see :func:`heatpot.potentials.eliminate_density`) keeps
    the elimination well defined for the steep start of the barrier and is
    always used in the startup layer.  Past it the differential form needs
    the plain trapezoid: with exact attenuation the rate at ``t_{k-1}``
    barely depends on the slope on ``[t_{k-1}, t_k]`` and the step equation
    loses its root.
    """
    grid = inp.grid if grid is None else grid
    t = grid.nodes
    tau, eta = float(t[0]), inp.eta
    b_tau = startup_barrier(eta, tau)
    n = t.size
    b = np.full(n, np.nan)
    bp = np.zeros(n)
    nu = np.full(n, np.nan)
    b[0], nu[0] = b_tau, 0.0
    iters = np.zeros(n, dtype=int)
    resid = np.zeros(n)
    report = SolveReport(iterations=iters, residuals=resid)
    differential = inp.form == DIFFERENTIAL
    exact = inp.last_interval_exact

    def density(j, slope, ex=exact):
        bp[j] = slope
        nu[j] = eliminate_density(t, b, slope, nu, j, -float(q_value(t[j], b[j], tau, b_tau)),
                                  exact_last=ex)[0]

    def rate(j):
        return (-(1.0 / math.sqrt(2.0 * math.pi * (t[j] - tau)) + bp[j]) * nu[j]
                - 0.5 * flux_row_sum(t, b, bp, nu, j, exact_last=exact) / SQRT_2PI
                + float(q_flux(t[j], b[j], tau, b_tau)))

    n_start = int(np.sum(t[1:] - tau <= inp.startup_layer * tau)) if differential else 0
    if n_start:
        report.warnings.append(f"first {n_start} steps matched on surviving mass (startup layer)")

    def step(k, bk):
        b[k] = bk
        slope = (bk - b[k - 1]) / (t[k] - t[k - 1])
        if differential and k > n_start:
            j = 1 if k == 1 else k - 1
            density(j, slope)
            return eta * math.exp(-eta * t[j]) - rate(j), None
        # the startup layer always uses the exact last interval
        ex = exact or k <= n_start
        density(k, slope, ex)
        L = layer_row(t, b, slope, nu, k, exact_last=ex)
        return -math.expm1(-eta * t[k]) - (1.0 - q_mass(t[k], bk, tau, b_tau) - L), None

    valid = n
    for k in range(1, n):
        x0 = b[k - 1] if k < 3 else b[k - 1] + (b[k - 1] - b[k - 2]) * (t[k] - t[k - 1]) / (t[k - 1] - t[k - 2])
        fun = lambda x, k=k: step(k, x)  # noqa: E731
        x, r, _, it, ok = newton_scalar(fun, x0, inp.newton)
        if not ok:
            root = _bracket_fallback(k, fun, x0)
            if root is not None:
                x, r, _, it2, ok = newton_scalar(fun, root, inp.newton)
                it += it2
        iters[k], resid[k] = it, r
        if not ok:
            # the differential step k also leaves nu_{k-1} unresolved
            valid = k - 1 if differential and k > 1 else k
            resid[k:] = np.nan
            report.failed_step = valid
            report.failure_time = float(t[k])
            report.message = f"calibration failed at step {k} (t={t[k]:.6g})"
            break
        step(k, x)
    else:
        if differential:
            density(n - 1, (b[-1] - b[-2]) / (t[-1] - t[-2]))
    b[valid:] = np.nan
    nu[valid:] = np.nan
    bp[valid:] = np.nan
    return CalibratedBoundary(SampledSeries(grid, b), SampledSeries(grid, nu), report, tau, eta,
                              SampledSeries(grid, bp), exact)


# ---------------------------------------------------------------------------
# forward problem


def forward_default_probability(boundary: BoundaryCurve, grid: TimeGrid, exact_last: bool = True):
    """Default probability and rate for a barrier that starts at ``grid.start``.

    Induction on the Dirichlet condition ``r = -q`` (same discretisation as
    :func:`calibrate`), rate from the flux formula plus the ``q`` flux and
    probability from the mass balance
    ``pi = 1 - int_b^inf q - int Xi nu / sqrt(2 pi (t - t'))``.
    Returns ``(pi, g)``; ``g(tau)`` is NaN (the rate is singular at the
    barrier's first instant).
    """
    t = grid.nodes
    tau = float(t[0])
    b = np.asarray(boundary.value(t), dtype=float) * np.ones_like(t)
    bp = np.asarray(boundary.derivative(t), dtype=float) * np.ones_like(t)
    b_tau = b[0]
    nu = np.zeros_like(t)
    for k in range(1, t.size):
        nu[k] = eliminate_density(t, b, bp[k], nu, k, -float(q_value(t[k], b[k], tau, b_tau)),
                                  exact_last=exact_last)[0]
    g = flux_above(t, b, bp, nu, exact_last=exact_last)
    g[1:] += q_flux(t[1:], b[1:], tau, b_tau)
    g[0] = np.nan
    L = layer_integral(t, b, nu, bp, exact_last=exact_last)
    pi = np.empty_like(t)
    pi[0] = std_normal_cdf(b_tau / math.sqrt(tau))
    for k in range(1, t.size):
        pi[k] = 1.0 - q_mass(t[k], b[k], tau, b_tau) - L[k]
    return SampledSeries(grid, pi), SampledSeries(grid, g)


# ---------------------------------------------------------------------------
# small-tau continuation


@dataclass(frozen=True)
class ContinuationResult:
    eta: float
    taus: tuple
    boundaries: Dict[float, CalibratedBoundary]
    distances: Dict[tuple, float]
    failures: List[float]


def continuation_limit(eta: float, taus: Sequence[float], T: float, N: int = 500,
                       t_min: float = 0.1, form: str = INTEGRATED,
                       grading: Optional[float] = None) -> ContinuationResult:
    """Calibrate for each start time and tabulate pairwise sup-distances on ``[t_min, T]``.

    Boundaries are compared on a common uniform grid by linear interpolation.
    Failed calibrations are listed and left out of the table.
    """
    taus = tuple(float(v) for v in taus)
    res = {}
    failures = []
    for tau in taus:
        cb = calibrate(CalibrationInput(eta, tau, T, N, form, grading))
        res[tau] = cb
        if not cb.report.converged:
            failures.append(tau)
    common = np.linspace(t_min, T, 1001)
    ok = [v for v in taus if v not in failures]
    dist = {}
    for i, a in enumerate(ok):
        for c in ok[i + 1:]:
            ba = np.interp(common, res[a].b.t, res[a].b.values)
            bc = np.interp(common, res[c].b.t, res[c].b.values)
            dist[(a, c)] = float(np.max(np.abs(ba - bc)))
    return ContinuationResult(eta, taus, res, dist, failures)
