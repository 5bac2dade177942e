"""Supercooled Stefan problem as a pair of coupled Volterra equations.

The free boundary ``b(t)`` and the layer density ``nu`` solve

    nu(t) + int_0^t Theta Xi nu / sqrt(2 pi (t - t')) dt' + H(t, b(t) - z) = 0,
    b(t) + (alpha/2) int_0^t Xi nu / sqrt(2 pi (t - t')) dt' = 0,

with ``b(0) = 0``.  Each induction step eliminates ``nu_k`` from the first
equation and solves the second for ``b_k`` by Newton's method.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import integrate

from .core import SampledSeries, SolveReport, Tabulated, TimeGrid, make_uniform_grid
from .potentials import eliminate_density, flux_above, layer_integral
from .specfun import SQRT_2PI, _heat, std_normal_cdf
from .volterra import (NewtonConfig, StepFailure, product_trapezoid, quadrature_weights,
                       solve_stepwise_nonlinear)


@dataclass(frozen=True)
class StefanParams:
    alpha: float
    z: float
    T: float = 1.0
    N: int = 400
    newton: NewtonConfig = field(default_factory=NewtonConfig)
    slope_max: float = 1e3

    def __post_init__(self):
        if not self.alpha >= 0:
            raise ValueError(f"alpha must be nonnegative, got {self.alpha}")
        if not self.z > 0:
            raise ValueError(f"source location must be positive, got {self.z}")
        if not self.T > 0:
            raise ValueError("horizon must be positive")

    @property
    def grid(self) -> TimeGrid:
        return make_uniform_grid(self.T, self.N)


@dataclass(frozen=True)
class StefanSolution:
    """Boundary and density; entries after a failed step are NaN."""

    b: SampledSeries
    nu: SampledSeries
    report: SolveReport

    @property
    def boundary(self) -> Tabulated:
        """Converged part of ``b`` as a curve with backward-difference slopes."""
        n = self.valid
        t, b = self.b.t[:n], self.b.values[:n]
        return Tabulated(t, b, _backward_slopes(t, b))

    @property
    def valid(self) -> int:
        fs = self.report.failed_step
        return len(self.b) if fs is None else fs


def _backward_slopes(t, b):
    bp = np.zeros_like(b)
    bp[1:] = np.diff(b) / np.diff(t)
    return bp


def solve(params: StefanParams, grid: Optional[TimeGrid] = None) -> StefanSolution:
    """Induction with per-step Newton on ``b_k``.

    A step whose Newton iteration fails, or whose boundary slope exceeds
    ``slope_max``, ends the run; the report records the time.
    """
    grid = params.grid if grid is None else grid
    t = grid.nodes
    a, z = params.alpha, params.z

    def step(k, bk, nu, bb):
        bb[k] = bk
        nuk, xi = eliminate_density(t, bb, (bk - bb[k - 1]) / (t[k] - t[k - 1]), nu, k,
                                    -float(_heat(t[k] - t[0], bk - z)))
        w = xi * np.append(nu[:k], nuk)
        L = product_trapezoid(w, quadrature_weights(t, k)) / SQRT_2PI
        return bk + 0.5 * a * L, nuk

    def guess(k, nu, bb):
        if k < 2:
            return bb[k - 1]
        return 2 * bb[k - 1] - bb[k - 2]

    try:
        nu, bs, report = solve_stepwise_nonlinear(step, grid, params.newton, init=(0.0, 0.0),
                                                  guess=guess)
        nu, bv = nu.values.copy(), bs.values.copy()
    except StepFailure as exc:
        report = exc.report
        report.blowup_time = exc.t
        nu, bv = exc.nu.copy(), exc.mu.copy()
        nu[exc.k:] = np.nan
        bv[exc.k:] = np.nan
    # slope cap: treat runaway fronts like a failed step
    slopes = np.abs(np.diff(bv)) / np.diff(t)
    over = np.nonzero(slopes > params.slope_max)[0]
    if over.size and report.failed_step is None:
        k = int(over[0]) + 1
        report.failed_step = k
        report.failure_time = report.blowup_time = float(t[k])
        report.message = f"boundary slope above {params.slope_max} at step {k}"
        nu[k:] = np.nan
        bv[k:] = np.nan
    if np.any(bv[np.isfinite(bv)] < -1e-14):
        report.warnings.append("boundary moved away from the source (b < 0)")
    return StefanSolution(SampledSeries(grid, bv), SampledSeries(grid, nu), report)


def small_alpha_reference(alpha: float, z: float, grid: TimeGrid) -> SampledSeries:
    """First-order expansion in ``alpha``: ``b(t) ~ (alpha/2) N(-z/sqrt(t))``."""
    t = grid.nodes
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = 0.5 * alpha * std_normal_cdf(-z / np.sqrt(t[pos]))
    return SampledSeries(grid, out)


def convolution_oracle(z: float, t: float) -> float:
    """``int_0^t H(s, z) / sqrt(2 pi (t - s)) ds`` by adaptive quadrature."""
    val, _ = integrate.quad(lambda s: float(_heat(s, z)), 0.0, t, weight="alg",
                            wvar=(0.0, -0.5), epsabs=1e-14, epsrel=1e-12, limit=200)
    return val / SQRT_2PI


def layer_route(sol: StefanSolution, alpha: float) -> np.ndarray:
    """``-(alpha/2) int Xi nu / sqrt(2 pi (t - t'))`` recomputed from the returned density."""
    n = sol.valid
    t, b, nu = sol.b.t[:n], sol.b.values[:n], sol.nu.values[:n]
    return -0.5 * alpha * layer_integral(t, b, nu)


def flux_route(sol: StefanSolution, alpha: float, z: float) -> np.ndarray:
    """``(alpha/2) int_0^t (g + b' f) dt'`` with ``g`` the potential's pointwise flux.

    ``f = -H(t, b - z)`` is the boundary value of the potential and
    ``-(g + b' f)`` the rate of change of its mass, so this route must agree
    with :func:`layer_route` up to discretisation error.
    """
    n = sol.valid
    t, b, nu = sol.b.t[:n], sol.b.values[:n], sol.nu.values[:n]
    bp = _backward_slopes(t, b)
    g = flux_above(t, b, bp, nu)
    f = np.zeros_like(t)
    f[1:] = -_heat(t[1:], b[1:] - z)
    return 0.5 * alpha * integrate.cumulative_trapezoid(g + bp * f, t, initial=0.0)

