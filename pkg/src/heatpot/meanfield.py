"""Mean-field interbank loss cascade.

In the frame moving with the common drift the default boundary sits at
``b(t) = alpha L(t)`` where ``L`` is the cumulative loss and ``mu = dL/dt``
is the loss rate, i.e. the first-passage density through ``b``.  The layer
density ``nu`` and ``mu`` solve

    nu + int Theta Xi nu / sqrt(2 pi (t - t')) + H(t, b - z) = 0,
    mu + (1/sqrt(2 pi t) + alpha mu) nu
       + 1/2 int (Phi + Theta^2 Xi nu) / sqrt(2 pi (t - t')) + (b - z) H(t, b - z)/(2t) = 0,

with ``Theta(t, t') = alpha (L(t) - L(t'))/(t - t')`` and ``Theta(t, t) = alpha mu(t)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import integrate

from .core import DomainError, SampledSeries, SolveReport, Tabulated, TimeGrid, make_uniform_grid
from .potentials import eliminate_density, flux_row_sum, reconstruct_interior
from .specfun import SQRT_2PI, _heat, std_normal_cdf
from .volterra import NewtonConfig, StepFailure, solve_stepwise_nonlinear


@dataclass(frozen=True)
class MeanFieldParams:
    alpha: float
    z: float
    T: float = 5.0
    N: int = 500
    newton: NewtonConfig = field(default_factory=NewtonConfig)
    blowup_threshold: float = 1e3

    def __post_init__(self):
        if not self.alpha >= 0:
            raise ValueError(f"alpha must be nonnegative, got {self.alpha}")
        if not self.z > 0:
            raise ValueError(f"initial distance to default must be positive, got {self.z}")
        if not self.T > 0:
            raise ValueError("horizon must be positive")

    @property
    def grid(self) -> TimeGrid:
        return make_uniform_grid(self.T, self.N)


@dataclass(frozen=True)
class LossSolution:
    """Loss rate, layer density and cumulative loss; NaN after a failed step."""

    mu: SampledSeries
    nu: SampledSeries
    L: SampledSeries
    report: SolveReport
    alpha: float

    @property
    def valid(self) -> int:
        fs = self.report.failed_step
        return len(self.mu) if fs is None else fs

    @property
    def blowup_time(self) -> Optional[float]:
        return self.report.blowup_time

    def boundary(self) -> Tabulated:
        """Moving-frame boundary ``alpha L`` on the converged nodes."""
        n = self.valid
        return Tabulated(self.L.t[:n], self.alpha * self.L.values[:n], self.alpha * self.mu.values[:n])


def _truncate(arrs, k):
    for a in arrs:
        a[k:] = np.nan


def solve(params: MeanFieldParams, grid: Optional[TimeGrid] = None) -> LossSolution:
    """Induction from ``(nu_0, mu_0) = (0, 0)`` with a per-step Newton solve for ``mu_k``.

    Newton failure or ``mu`` above ``blowup_threshold`` ends the run and is
    recorded as the blow-up time.
    """
    grid = params.grid if grid is None else grid
    t = grid.nodes
    a, z = params.alpha, params.z
    n = t.size
    L = np.zeros(n)
    b = np.zeros(n)
    bp = np.zeros(n)

    filled = [0]

    def sync(k, mu):
        # fold accepted loss rates into the running sum (trapezoid) once
        for i in range(filled[0] + 1, k):
            L[i] = L[i - 1] + 0.5 * (mu[i] + mu[i - 1]) * (t[i] - t[i - 1])
            b[i], bp[i] = a * L[i], a * mu[i]
        filled[0] = max(filled[0], k - 1)

    def step(k, m, nu, mu):
        sync(k, mu)
        Lk = L[k - 1] + 0.5 * (m + mu[k - 1]) * (t[k] - t[k - 1])
        bk = a * Lk
        b[k], bp[k] = bk, a * m
        s = t[k] - t[0]
        theta = float(_heat(s, bk - z))
        nuk, _ = eliminate_density(t, b, a * m, nu, k, -theta)
        nu[k] = nuk
        g = (-(1.0 / np.sqrt(2.0 * np.pi * s) + a * m) * nuk
             - 0.5 * flux_row_sum(t, b, bp, nu, k) / SQRT_2PI
             - (bk - z) * theta / (2.0 * s))
        nu[k] = np.nan
        return m - g, nuk

    def guess(k, nu, mu):
        if k < 3:
            return mu[k - 1]
        return max(2 * mu[k - 1] - mu[k - 2], 0.0)

    try:
        nu_s, mu_s, report = solve_stepwise_nonlinear(step, grid, params.newton, init=(0.0, 0.0),
                                                      guess=guess)
        nu, mu = nu_s.values.copy(), mu_s.values.copy()
    except StepFailure as exc:
        report = exc.report
        report.blowup_time = exc.t
        nu, mu = exc.nu.copy(), exc.mu.copy()
        _truncate((nu, mu), exc.k)
    Lv = np.full(n, np.nan)
    ok = np.isfinite(mu)
    Lv[ok] = integrate.cumulative_trapezoid(mu[ok], t[ok], initial=0.0)
    over = np.nonzero(mu > params.blowup_threshold)[0]
    if over.size and report.failed_step is None:
        k = int(over[0])
        report.failed_step = k
        report.failure_time = report.blowup_time = float(t[k])
        report.message = f"loss rate above {params.blowup_threshold} at step {k}"
        _truncate((nu, mu, Lv), k)
    return LossSolution(SampledSeries(grid, mu), SampledSeries(grid, nu), SampledSeries(grid, Lv),
                        report, a)


def analytic_alpha_zero(z: float, grid: TimeGrid):
    """``mu = z H(t, z)/t``, ``nu = -H(t, z)``, ``L = 2 N(-z/sqrt(t))`` (no interaction)."""
    if not z > 0:
        raise DomainError("z must be positive")
    t = grid.nodes
    mu = np.zeros_like(t)
    nu = np.zeros_like(t)
    L = np.zeros_like(t)
    pos = t > 0
    h = _heat(t[pos], z)
    mu[pos] = z * h / t[pos]
    nu[pos] = -h
    L[pos] = 2.0 * std_normal_cdf(-z / np.sqrt(t[pos]))
    return SampledSeries(grid, mu), SampledSeries(grid, nu), SampledSeries(grid, L)


def density_surface(sol: LossSolution, z: float, times, x) -> np.ndarray:
    """Density ``p(t, x)`` of the distance to default ``x >= 0``.

    Evaluated in the moving frame ``y = x + alpha L(t)`` as the free kernel
    ``H(t, y - z)`` plus the layer potential.  Queries with ``x < 0`` or
    beyond the converged part of the solution are NaN.
    """
    times = np.atleast_1d(np.asarray(times, dtype=float))
    x = np.atleast_1d(np.asarray(x, dtype=float))
    n = sol.valid
    curve = sol.boundary()
    nu = SampledSeries(TimeGrid(sol.nu.t[:n]), sol.nu.values[:n])
    tmax = sol.nu.t[n - 1]
    out = np.full((times.size, x.size), np.nan)
    for i, ti in enumerate(times):
        if ti <= 0 or ti > tmax:
            continue
        bt = float(curve.value(ti))
        inside = x > 0
        y = x[inside] + bt
        F = reconstruct_interior(nu, curve, np.full(y.shape, ti), y)
        out[i, inside] = _heat(ti, y - z) + F
        out[i, x == 0] = 0.0
    return out


def detect_blowup(sol: LossSolution, threshold: float = 1e3) -> Optional[float]:
    """Earliest time where ``mu`` exceeds ``threshold`` or the solve stopped."""
    mu = sol.mu.values
    over = np.nonzero(np.isfinite(mu) & (mu > threshold))[0]
    cands = []
    if over.size:
        cands.append(float(sol.mu.t[over[0]]))
    if sol.report.failure_time is not None:
        cands.append(sol.report.failure_time)
    return min(cands) if cands else None
