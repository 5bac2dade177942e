"""Hitting times of the standard Ornstein-Uhlenbeck process ``dx = -x dt + dW``.

The map ``tau = (exp(2t) - 1)/2``, ``xi = exp(t) x`` turns the OU density
into a heat-equation density, and a boundary ``b~(t)`` into
``beta(tau) = sqrt(1 + 2 tau) b~(ln sqrt(1 + 2 tau))``.  Hitting densities
in the two clocks are related by ``g(t) = (1 + 2 tau) g_heat(tau)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import interpolate

from .core import (BoundaryCurve, DomainError, Flat, SampledSeries, Tabulated, TimeGrid,
                   make_uniform_grid)
from .potentials import (assemble_dirichlet_above, backward_derivative, cumulative_flux,
                         flux_pointwise, layer_integral)
from .specfun import _heat, ou_time, ou_variance, std_normal_cdf
from .volterra import (WeaklySingularSystem, abel_flat_ou_nu, product_trapezoid,
                       quadrature_weights, solve_linear)


@dataclass(frozen=True)
class HittingDistribution:
    """Hitting-time pdf ``g`` and cdf ``G`` in original OU time.

    ``tau`` holds the heat-frame nodes the solve used; ``nu`` is the layer
    density on the solver's own grid (heat time, or ``theta`` for the flat
    solver) when a solve was involved.
    """

    pdf: SampledSeries
    cdf: SampledSeries
    tau: np.ndarray
    nu: Optional[SampledSeries] = None

    @property
    def t(self) -> np.ndarray:
        return self.pdf.t

    def resample(self, t):
        """Values on other times: linear for the pdf, monotone cubic for the cdf."""
        t = np.asarray(t, dtype=float)
        g = np.interp(t, self.pdf.t, self.pdf.values)
        G = interpolate.PchipInterpolator(self.cdf.t, self.cdf.values)(t)
        return g, G


@dataclass(frozen=True)
class OUHittingInput:
    z: float
    boundary: BoundaryCurve
    T: float

    def __post_init__(self):
        b0 = float(self.boundary.value(0.0))
        if not self.z > b0:
            raise ValueError(f"start z={self.z} must lie above the boundary b(0)={b0}")
        if not self.T > 0:
            raise ValueError("horizon must be positive")


def heat_frame_boundary(boundary: BoundaryCurve, tau: np.ndarray) -> Tabulated:
    """``beta(tau)`` with its analytic derivative ``(b~ + b~')/sqrt(1 + 2 tau)``."""
    s = np.sqrt(1.0 + 2.0 * tau)
    t = ou_time(tau)
    bv = np.asarray(boundary.value(t), dtype=float) * np.ones_like(tau)
    bd = np.asarray(boundary.derivative(t), dtype=float) * np.ones_like(tau)
    return Tabulated(tau, s * bv, (bv + bd) / s)


def solve_general(inp: OUHittingInput, N: int) -> HittingDistribution:
    """Linear heat-frame solve on a uniform ``tau`` grid with ``N`` steps."""
    tau_grid = make_uniform_grid(float(ou_variance(inp.T)), N)
    tau = tau_grid.nodes
    beta = heat_frame_boundary(inp.boundary, tau)
    z = inp.z

    def rhs(s):
        s = np.asarray(s, dtype=float)
        out = np.zeros_like(s)
        pos = s > 0
        out[pos] = -_heat(s[pos], np.asarray(beta.value(s[pos])) - z)
        return out

    nu = solve_linear(assemble_dirichlet_above(beta, rhs), tau_grid)
    g_heat = flux_pointwise(nu, beta, source=z).values
    G = cumulative_flux(nu, beta, source=z).values
    t_grid = TimeGrid(ou_time(tau))
    return HittingDistribution(SampledSeries(t_grid, (1.0 + 2.0 * tau) * g_heat),
                               SampledSeries(t_grid, G), tau, nu)


# ---------------------------------------------------------------------------
# flat boundary in theta = sqrt(1 + 2 tau) - 1


def flat_kernel(b: float):
    """Regular part of the flat-boundary kernel in ``theta``."""
    def kernel(th, thp):
        thp = np.asarray(thp, dtype=float)
        s = 2.0 + th + thp
        return 2.0 * b / math.sqrt(math.pi) * np.exp(-b * b * (th - thp) / s) * (1.0 + thp) / s ** 1.5
    return kernel


def flat_source(b: float, z: float):
    """``H(tau, beta - z)`` written in ``theta``."""
    def f(th):
        th = np.asarray(th, dtype=float)
        out = np.zeros_like(th)
        pos = th > 0
        w = (1.0 + th[pos]) ** 2 - 1.0
        out[pos] = np.exp(-((1.0 + th[pos]) * b - z) ** 2 / w) / np.sqrt(math.pi * w)
        return out
    return f


def flat_pdf(theta: np.ndarray, nu: np.ndarray, b: float, z: float) -> np.ndarray:
    """Hitting pdf in original time from the layer density on a ``theta`` grid.

    The finite-part integrand takes ``nu'`` on the diagonal from a
    three-point backward difference.
    """
    g = np.zeros_like(theta)
    for k in range(1, theta.size):
        th = theta[k]
        t = math.log1p(th)
        e2 = (1.0 + th) ** 2
        w = e2 - 1.0
        eb = (1.0 + th) * b - z
        src = -eb * math.exp(-eb * eb / w + 2.0 * t) / math.sqrt(math.pi * w ** 3)
        local = -((1.0 + th) * b + e2 / math.sqrt(math.pi * w)) * nu[k]
        thp = theta[:k]
        s = 2.0 + th + thp
        d = th - thp
        r = b * b * d / s
        h = np.empty(k + 1)
        h[:k] = ((1.0 - 2.0 * r) * np.exp(-r) * nu[:k] - nu[k]) * (1.0 + thp) / (d * s ** 1.5)
        dnu = backward_derivative(theta, nu, k)
        h[k] = -(dnu + 1.5 * b * b * nu[k] / (1.0 + th)) * (1.0 + th) / (2.0 * (1.0 + th)) ** 1.5
        g[k] = src + local + e2 / math.sqrt(math.pi) * product_trapezoid(h, quadrature_weights(theta, k))
    return g


def solve_flat(b: float, z: float, N: int, T: float) -> HittingDistribution:
    """Flat boundary ``b`` via the ``theta``-form of the heat-frame equation."""
    if not z > b:
        raise ValueError(f"start z={z} must lie above the boundary {b}")
    th_grid = make_uniform_grid(math.expm1(T), N)
    theta = th_grid.nodes
    nu = solve_linear(WeaklySingularSystem(flat_kernel(b), lambda th: -flat_source(b, z)(th)), th_grid)
    g = flat_pdf(theta, nu.values, b, z)
    tau = 0.5 * ((1.0 + theta) ** 2 - 1.0)
    beta = (1.0 + theta) * b
    G = -layer_integral(tau, beta, nu.values)
    G[1:] += std_normal_cdf((beta[1:] - z) / np.sqrt(tau[1:]))
    t_grid = TimeGrid(np.log1p(theta))
    return HittingDistribution(SampledSeries(t_grid, g), SampledSeries(t_grid, G), tau, nu)


# ---------------------------------------------------------------------------
# closed forms


def images_zero_boundary(z: float, grid: TimeGrid) -> HittingDistribution:
    """Zero boundary: ``g = z exp(2t) H(eta, z)/eta``, ``G = 2 N(-z/sqrt(eta))``."""
    if not z > 0:
        raise DomainError("start must be above the zero boundary")
    t = grid.nodes
    tau = ou_variance(t)
    g = np.zeros_like(t)
    G = np.zeros_like(t)
    pos = tau > 0
    g[pos] = z * np.exp(2 * t[pos]) * _heat(tau[pos], z) / tau[pos]
    G[pos] = 2.0 * std_normal_cdf(-z / np.sqrt(tau[pos]))
    return HittingDistribution(SampledSeries(grid, g), SampledSeries(grid, G), tau)


def images_exponential_boundary(A: float, B: float, z: float, grid: TimeGrid) -> HittingDistribution:
    """Boundary ``A exp(-t) + B exp(t)``, a straight line ``a + c tau`` in the heat frame."""
    a, c = A + B, 2.0 * B
    x0 = z - a
    if not x0 > 0:
        raise DomainError(f"start z={z} must exceed A + B = {a}")
    t = grid.nodes
    tau = ou_variance(t)
    g = np.zeros_like(t)
    G = np.zeros_like(t)
    pos = tau > 0
    tp = tau[pos]
    dens = x0 * np.exp(-(x0 - c * tp) ** 2 / (2 * tp)) / np.sqrt(2 * np.pi * tp ** 3)
    g[pos] = (1.0 + 2.0 * tp) * dens
    sq = np.sqrt(tp)
    # first passage of Brownian motion with drift -c to level -x0
    G[pos] = std_normal_cdf((-x0 + c * tp) / sq) + np.exp(2 * c * x0) * std_normal_cdf((-x0 - c * tp) / sq)
    return HittingDistribution(SampledSeries(grid, g), SampledSeries(grid, G), tau)


def zero_boundary_input(z: float, T: float) -> OUHittingInput:
    return OUHittingInput(z, Flat(0.0), T)


def abel_relative_gap(b: float, z: float, N: int, theta_max: float):
    """Largest relative gap between the flat-boundary ``nu`` and the Abel closed form.

    The ``theta``-form equation is solved on ``[0, theta_max]`` with ``N``
    steps and compared with :func:`~heatpot.volterra.abel_flat_ou_nu` at all
    nodes ``theta > 0`` where the closed form has not underflowed to zero.
    Returns ``(gap, theta, nu, nu_abel)``.
    """
    sol = solve_flat(b, z, N, math.log1p(theta_max))
    theta = sol.nu.t[1:]
    nu = sol.nu.values[1:]
    ref = abel_flat_ou_nu(b, z, theta)
    keep = ref != 0.0
    theta, nu, ref = theta[keep], nu[keep], ref[keep]
    rel = np.abs(nu - ref) / np.abs(ref)
    return float(rel.max()), theta, nu, ref
