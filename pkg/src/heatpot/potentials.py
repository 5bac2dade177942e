"""Heat potentials on a moving boundary.

Orientation "above" means the domain ``x >= b(t)``; "below" means ``x <= b(t)``.
The absorbed part ``F`` of a density is written as a double-layer potential

    F(t, x) = int_{t0}^t (x - b(t')) / (t - t') H(t - t', x - b(t')) nu(t') dt',

whose boundary limit gives ``+-nu + int Theta Xi nu / sqrt(2 pi (t - t'))``.
Fluxes are outflow rates of probability through the boundary.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import integrate, special

from .core import BoundaryCurve, DomainError, SampledSeries, TimeGrid
from .specfun import SQRT_2PI, _heat, std_normal_cdf
from .volterra import (WeaklySingularSystem, product_trapezoid, quadrature_weights,
                       solve_linear)

ABOVE = "above"
BELOW = "below"


def _check_orientation(orientation):
    if orientation not in (ABOVE, BELOW):
        raise ValueError(f"orientation must be 'above' or 'below', got {orientation!r}")


# ---------------------------------------------------------------------------
# chord kernels


def theta_chord(b_t, b_tp, t, tp, bp_t):
    """Chord slope ``(b(t) - b(t'))/(t - t')`` with ``b'(t)`` on the diagonal."""
    dt = t - tp
    diag = dt <= 0
    with np.errstate(divide="ignore", invalid="ignore"):
        th = np.where(diag, bp_t, (b_t - b_tp) / np.where(diag, 1.0, dt))
    return th


def xi_chord(theta, dt):
    """Gaussian attenuation ``exp(-(t - t') Theta^2 / 2)``."""
    xi = np.exp(-0.5 * dt * theta * theta)
    # underflow to 0 is allowed for very steep chords
    assert np.all((xi >= 0.0) & (xi <= 1.0)), "chord attenuation outside [0, 1]"
    return xi


def phi_chord(nu_t, nu_tp, xi, dt, dnu_t=None, bp_t=None):
    """Regularised difference quotient ``(nu(t) - Xi nu(t'))/(t - t')``.

    On the diagonal (``dt == 0``) returns ``nu'(t) + b'(t)^2 nu(t) / 2``.
    """
    diag = dt <= 0
    with np.errstate(divide="ignore", invalid="ignore"):
        off = (nu_t - xi * nu_tp) / np.where(diag, 1.0, dt)
    if np.any(diag):
        off = np.where(diag, dnu_t + 0.5 * bp_t * bp_t * nu_t, off)
    return off


@dataclass(frozen=True)
class ChordKernels:
    """Chord kernels of a boundary curve evaluated at arbitrary ``t' <= t``."""

    boundary: BoundaryCurve

    def theta(self, t, tp):
        t = float(t)
        tp = np.asarray(tp, dtype=float)
        return theta_chord(self.boundary.value(t), self.boundary.value(tp), t, tp,
                           self.boundary.derivative(t))

    def xi(self, t, tp):
        tp = np.asarray(tp, dtype=float)
        return xi_chord(self.theta(t, tp), float(t) - tp)


@dataclass(frozen=True)
class FluxSeries:
    """Outflow rate ``g`` and cumulative outflow ``G`` on a common grid."""

    g: SampledSeries
    G: SampledSeries


@dataclass(frozen=True)
class TwoSidedDensities:
    """Layer densities on the upper (domain below it) and lower boundary."""

    nu_upper: SampledSeries
    nu_lower: SampledSeries


# ---------------------------------------------------------------------------
# Dirichlet systems


def _above_kernel(boundary: BoundaryCurve):
    ck = ChordKernels(boundary)

    def kernel(t, tp):
        th = ck.theta(t, tp)
        return th * xi_chord(th, t - np.asarray(tp)) / SQRT_2PI

    return kernel


def assemble_dirichlet_above(boundary: BoundaryCurve, f: Callable) -> WeaklySingularSystem:
    """System ``nu + int Theta Xi nu / sqrt(2 pi (t - t')) = f`` for ``x >= b(t)``."""
    return WeaklySingularSystem(kernel=_above_kernel(boundary), rhs=f)


def assemble_dirichlet_below(boundary: BoundaryCurve, f: Callable) -> WeaklySingularSystem:
    """System ``-nu + int Theta Xi nu / sqrt(2 pi (t - t')) = f`` for ``x <= b(t)``.

    Stored in the solver's normal form by negating both sides.
    """
    k_above = _above_kernel(boundary)
    return WeaklySingularSystem(kernel=lambda t, tp: -k_above(t, tp),
                                rhs=lambda t: -np.asarray(f(t), dtype=float))


# ---------------------------------------------------------------------------
# fluxes on grid arrays (shared with the application modules)


def attenuated_moments(s: float, dt: float):
    """Exact last-interval integrals of the attenuation ``exp(-s^2 u / 2)``.

    Returns ``(I0, I1, J1)`` with ``I0 = int_0^dt e^{-a u} u^{-1/2} du``,
    ``I1 = int_0^dt e^{-a u} u^{1/2} du`` and
    ``J1 = int_0^dt (1 - e^{-a u}) u^{-3/2} du``, ``a = s^2/2``.
    """
    a = 0.5 * s * s
    x = a * dt
    r = math.sqrt(dt)
    if x < 1e-12:
        return 2.0 * r * (1.0 - x / 3.0), 2.0 / 3.0 * dt * r * (1.0 - 0.6 * x), 2.0 * a * r * (1.0 - x / 6.0)
    I0 = math.sqrt(math.pi / a) * float(special.gammainc(0.5, x))
    I1 = 0.5 * math.sqrt(math.pi) * float(special.gammainc(1.5, x)) / (a * math.sqrt(a))
    J1 = 2.0 * a * I0 + 2.0 * math.expm1(-x) / r
    return I0, I1, J1


def _chords(t, b, bp_k, k):
    dt = t[k] - t[: k + 1]
    th = np.empty(k + 1)
    th[:k] = (b[k] - b[:k]) / dt[:k]
    th[k] = bp_k
    return dt, th, xi_chord(th, dt)


def layer_row(t, b, bp_k, nu, k, exact_last: bool = False) -> float:
    """``int_{t0}^{t_k} Xi nu / sqrt(2 pi (t_k - t')) dt'`` at node ``k``.

    With ``exact_last`` the attenuation on ``[t_{k-1}, t_k]`` is integrated
    exactly with slope ``bp_k`` and the mean of ``nu``.
    """
    if k == 0:
        return 0.0
    _, _, xi = _chords(t, b, bp_k, k)
    pi = quadrature_weights(t, k)
    w = xi * nu[: k + 1]
    if not exact_last:
        return product_trapezoid(w, pi) / SQRT_2PI
    I0 = attenuated_moments(bp_k, t[k] - t[k - 1])[0]
    head = float(np.dot(w[1:k] + w[: k - 1], pi[: k - 1]))
    return (head + 0.5 * (nu[k - 1] + nu[k]) * I0) / SQRT_2PI


def layer_integral(t: np.ndarray, b: np.ndarray, nu: np.ndarray, bp: Optional[np.ndarray] = None,
                   exact_last: bool = False) -> np.ndarray:
    """:func:`layer_row` at every node (``bp`` is needed only with ``exact_last``)."""
    out = np.zeros_like(t)
    for k in range(1, t.size):
        out[k] = layer_row(t, b, 0.0 if bp is None else bp[k], nu, k, exact_last)
    return out


def eliminate_density(t, b, bp_k, nu, k, f_k, exact_last: bool = False):
    """Solve the ``k``-th discrete Dirichlet equation (above) for ``nu_k``.

    ``b[:k+1]`` holds the (trial) boundary including ``b_k``, ``nu[:k]`` the
    accepted densities and ``bp_k`` the diagonal slope.  Returns ``nu_k``
    and the attenuation row ``Xi_{k,l}``, ``l = 0..k``.

    The plain product trapezoid has the divisor ``1 + bp_k sqrt(Delta/(2 pi))``,
    which vanishes for steep descending boundaries.  ``exact_last``
    integrates the attenuation on the last interval exactly (see
    :func:`attenuated_moments`); the divisor then stays above ``1/2``.
    """
    dt, th, xi = _chords(t, b, bp_k, k)
    K = th * xi / SQRT_2PI
    pi = quadrature_weights(t, k)
    w = K[:k] * nu[:k]
    if not exact_last:
        known = np.dot(w[1:] + w[:-1], pi[:-1]) + w[k - 1] * pi[-1]
        return (f_k - known) / (1.0 + K[k] * pi[-1]), xi
    c = 0.5 * bp_k * attenuated_moments(bp_k, dt[k - 1])[0] / SQRT_2PI
    known = np.dot(w[1:] + w[:-1], pi[:-1]) + c * nu[k - 1]
    return (f_k - known) / (1.0 + c), xi


def backward_derivative(t, v, k) -> float:
    """``v'(t_k)`` from nodes ``k-2, k-1, k`` (two-point difference at ``k = 1``)."""
    h1 = t[k] - t[k - 1]
    if k < 2:
        return (v[k] - v[k - 1]) / h1
    h2 = t[k - 1] - t[k - 2]
    return (v[k] * (2 * h1 + h2) / (h1 * (h1 + h2)) - v[k - 1] * (h1 + h2) / (h1 * h2)
            + v[k - 2] * h1 / (h2 * (h1 + h2)))


def flux_row_sum(t, b, bp, nu, k, exact_last: bool = False) -> float:
    """``int (Phi + Theta^2 Xi nu) / sqrt(t_k - t') dt'`` by product trapezoid.

    With ``exact_last`` the last interval uses ``nu`` linear with slope
    ``nu'(t_k)``, constant chord ``bp[k]`` and exact attenuation integrals.
    """
    dt, th, xi = _chords(t, b, bp[k], k)
    h = np.empty(k + 1)
    h[:k] = (nu[k] - xi[:k] * nu[:k]) / dt[:k] + th[:k] ** 2 * xi[:k] * nu[:k]
    dnu = backward_derivative(t, nu, k)
    h[k] = dnu + 1.5 * bp[k] ** 2 * nu[k]
    pi = quadrature_weights(t, k)
    if not exact_last:
        return product_trapezoid(h, pi)
    a = 0.5 * bp[k] ** 2
    I0, I1, J1 = attenuated_moments(bp[k], dt[k - 1])
    head = float(np.dot(h[1:k] + h[: k - 1], pi[: k - 1]))
    return head + nu[k] * (J1 + 2.0 * a * I0) + dnu * (I0 - 2.0 * a * I1)


def flux_above(t, b, bp, nu, exact_last: bool = False) -> np.ndarray:
    """Pointwise outflow ``1/2 dF/dx`` at ``x = b(t)`` for the above orientation.

    ``g_0`` is 0 when ``nu_0 = 0`` and NaN (singular limit) otherwise.
    """
    g = np.empty_like(t)
    g[0] = 0.0 if nu[0] == 0.0 else np.nan
    for k in range(1, t.size):
        s = t[k] - t[0]
        g[k] = (-(1.0 / math.sqrt(2.0 * math.pi * s) + bp[k]) * nu[k]
                - 0.5 * flux_row_sum(t, b, bp, nu, k, exact_last) / SQRT_2PI)
    return g


def source_flux_above(t, b, z) -> np.ndarray:
    """Outflow of the free kernel ``H(t - t0, x - z)`` through ``b`` (above)."""
    s = t - t[0]
    g = np.zeros_like(t)
    pos = s > 0
    g[pos] = -(b[pos] - z) * _heat(s[pos], b[pos] - z) / (2.0 * s[pos])
    return g


def _grid_data(nu, boundary, orientation):
    _check_orientation(orientation)
    t = nu.grid.nodes
    b = np.asarray(boundary.value(t), dtype=float) * np.ones_like(t)
    bp = np.asarray(boundary.derivative(t), dtype=float) * np.ones_like(t)
    v = np.asarray(nu.values, dtype=float)
    if orientation == BELOW:
        # reflection x -> -x maps the below problem to the above one
        b, bp, v = -b, -bp, -v
    return t, b, bp, v


def flux_pointwise(nu: SampledSeries, boundary: BoundaryCurve, orientation: str = ABOVE,
                   source: Optional[float] = None) -> SampledSeries:
    """Outflow rate ``g`` through the boundary.

    Without ``source`` this is the flux of the potential alone; with a point
    source at ``source`` released at the grid start, the flux of the free
    heat kernel is added, giving the total first-passage density.
    """
    t, b, bp, v = _grid_data(nu, boundary, orientation)
    g = flux_above(t, b, bp, v)
    if source is not None:
        z = -source if orientation == BELOW else source
        g = g + source_flux_above(t, b, z)
    return SampledSeries(nu.grid, g)


def cumulative_flux(nu: SampledSeries, boundary: BoundaryCurve, orientation: str = ABOVE,
                    source: Optional[float] = None) -> SampledSeries:
    """Cumulative outflow ``G`` from the mass balance of the domain.

    ``G = -int Xi nu / sqrt(2 pi (t - t'))`` for the potential alone, plus
    ``N((b - z)/sqrt(t - t0))`` when a point source is included.
    """
    t, b, bp, v = _grid_data(nu, boundary, orientation)
    G = -layer_integral(t, b, v)
    if source is not None:
        z = -source if orientation == BELOW else source
        s = t - t[0]
        extra = np.zeros_like(t)
        extra[1:] = std_normal_cdf((b[1:] - z) / np.sqrt(s[1:]))
        G = G + extra
    return SampledSeries(nu.grid, G)


def flux_series(nu, boundary, orientation=ABOVE, source=None) -> FluxSeries:
    return FluxSeries(flux_pointwise(nu, boundary, orientation, source),
                      cumulative_flux(nu, boundary, orientation, source))


# ---------------------------------------------------------------------------
# interior reconstruction


def reconstruct_interior(nu: SampledSeries, boundary: BoundaryCurve, t, x,
                         orientation: str = ABOVE) -> np.ndarray:
    """Evaluate the double-layer potential ``F(t, x)`` at query points.

    ``nu`` is linearly interpolated between nodes and the integral over
    ``t'`` is done adaptively, so queries close to the boundary stay accurate.
    """
    _check_orientation(orientation)
    t, x = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(x, dtype=float))
    out = np.zeros(t.shape)
    t0 = nu.grid.start
    nodes = nu.grid.nodes
    for idx in np.ndindex(t.shape):
        ti, xi_ = float(t[idx]), float(x[idx])
        if ti <= t0:
            continue
        side = xi_ - float(boundary.value(ti))
        if (orientation == ABOVE and side <= 0) or (orientation == BELOW and side >= 0):
            raise DomainError(f"query ({ti}, {xi_}) is not inside the domain")

        def integrand(tp):
            s = ti - tp
            d = xi_ - float(boundary.value(tp))
            return d / s * math.exp(-d * d / (2.0 * s)) / math.sqrt(2.0 * math.pi * s) * nu(tp)

        brk = nodes[(nodes > t0) & (nodes < ti)]
        # the kernel is concentrated within ~side^2 of t' = t
        extra = [max(t0, ti - c * side * side) for c in (1.0, 10.0, 100.0)]
        pts = np.unique(np.concatenate([brk[-50:], extra]))
        pts = pts[(pts > t0) & (pts < ti)]
        with warnings.catch_warnings():
            # roundoff warnings here only signal that 1e-12 is out of reach
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            val, _ = integrate.quad(integrand, t0, ti, points=pts if pts.size else None,
                                    limit=400, epsabs=1e-12, epsrel=1e-10)
        out[idx] = val
    return out[()] if out.ndim else float(out)


# ---------------------------------------------------------------------------
# two-sided problem


def _cross_kernel(d, s):
    # (d/s) H(s, d): kernel of a layer seen from the opposite boundary
    return d / s * np.exp(-d * d / (2.0 * s)) / np.sqrt(2.0 * np.pi * s)


def _cross_flux_kernel(d, s):
    # d/dx of the cross kernel: (1 - d^2/s) exp(-d^2/2s) / sqrt(2 pi s^3)
    return (1.0 - d * d / s) * np.exp(-d * d / (2.0 * s)) / np.sqrt(2.0 * np.pi * s ** 3)


def solve_two_sided(b_upper: BoundaryCurve, b_lower: BoundaryCurve, f_upper: Callable,
                    f_lower: Callable, grid: TimeGrid) -> TwoSidedDensities:
    """Layer densities for the channel ``b_lower(t) < x < b_upper(t)``.

    Each step solves the coupled pair

        nu_L + int Theta_LL Xi_LL nu_L / sqrt(2 pi s) + int C_LU nu_U = f_L,
       -nu_U + int Theta_UU Xi_UU nu_U / sqrt(2 pi s) + int C_UL nu_L = f_U,

    where the cross kernels ``C`` are regular and vanish at ``s = 0``.
    """
    t = grid.nodes
    bu = np.asarray(b_upper.value(t), dtype=float) * np.ones_like(t)
    bl = np.asarray(b_lower.value(t), dtype=float) * np.ones_like(t)
    if np.any(bu <= bl):
        raise ValueError("boundaries cross: need b_lower(t) < b_upper(t) on the grid")
    bup = np.asarray(b_upper.derivative(t), dtype=float) * np.ones_like(t)
    blp = np.asarray(b_lower.derivative(t), dtype=float) * np.ones_like(t)
    fu = np.asarray(f_upper(t), dtype=float) * np.ones_like(t)
    fl = np.asarray(f_lower(t), dtype=float) * np.ones_like(t)

    nu_l = np.zeros_like(t)
    nu_u = np.zeros_like(t)
    nu_l[0] = fl[0]
    nu_u[0] = -fu[0]
    for k in range(1, t.size):
        s = t[k] - t[:k]
        pi = quadrature_weights(t, k)
        sq = np.sqrt(np.append(s, 0.0))

        def self_row(b, bp):
            th = np.append((b[k] - b[:k]) / s, bp[k])
            return th * xi_chord(th, np.append(s, 0.0)) / SQRT_2PI

        # cross kernels carry the sqrt(s) factor so they fit the product rule
        c_lu = np.append(_cross_kernel(bl[k] - bu[:k], s), 0.0) * sq
        c_ul = np.append(_cross_kernel(bu[k] - bl[:k], s), 0.0) * sq
        k_ll = self_row(bl, blp)
        k_uu = self_row(bu, bup)

        def known(row, v):
            w = row[:k] * v[:k]
            return np.dot(w[1:] + w[:-1], pi[:-1]) + w[k - 1] * pi[-1]

        a11 = 1.0 + k_ll[k] * pi[-1]
        a12 = c_lu[k] * pi[-1]
        a21 = c_ul[k] * pi[-1]
        a22 = -1.0 + k_uu[k] * pi[-1]
        r1 = fl[k] - known(k_ll, nu_l) - known(c_lu, nu_u)
        r2 = fu[k] - known(k_uu, nu_u) - known(c_ul, nu_l)
        sol = np.linalg.solve(np.array([[a11, a12], [a21, a22]]), np.array([r1, r2]))
        nu_l[k], nu_u[k] = sol
    return TwoSidedDensities(SampledSeries(grid, nu_u), SampledSeries(grid, nu_l))


def two_sided_fluxes(dens: TwoSidedDensities, b_upper: BoundaryCurve, b_lower: BoundaryCurve,
                     source: Optional[float] = None):
    """Outflow rates ``(g_upper, g_lower)`` through each boundary of a channel.

    Each is the one-sided pointwise flux of its own layer plus the regular
    contribution of the opposite layer (and of the source, if given).
    """
    grid = dens.nu_upper.grid
    t = grid.nodes
    bu = np.asarray(b_upper.value(t), dtype=float) * np.ones_like(t)
    bl = np.asarray(b_lower.value(t), dtype=float) * np.ones_like(t)
    g_u = flux_pointwise(dens.nu_upper, b_upper, BELOW, source).values.copy()
    g_l = flux_pointwise(dens.nu_lower, b_lower, ABOVE, source).values.copy()
    nu_u = dens.nu_upper.values
    nu_l = dens.nu_lower.values
    for k in range(1, t.size):
        s = t[k] - t[:k]
        tk = t[: k + 1]
        w_l = np.append(_cross_flux_kernel(bl[k] - bu[:k], s) * nu_u[:k], 0.0)
        w_u = np.append(_cross_flux_kernel(bu[k] - bl[:k], s) * nu_l[:k], 0.0)
        g_l[k] += 0.5 * np.trapezoid(w_l, tk)
        g_u[k] -= 0.5 * np.trapezoid(w_u, tk)
    return SampledSeries(grid, g_u), SampledSeries(grid, g_l)


# ---------------------------------------------------------------------------
# the differentiation lemma


def _d4(fun, x, h):
    """Fourth-order central difference."""
    return (fun(x - 2 * h) - 8 * fun(x - h) + 8 * fun(x + h) - fun(x + 2 * h)) / (12 * h)


def _alg_quad(fun, a, b):
    """``int_a^b fun(t') (b - t')^(-1/2) dt'`` with an endpoint-weighted rule."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, _ = integrate.quad(fun, a, b, weight="alg", wvar=(0.0, -0.5),
                                epsabs=1e-13, epsrel=1e-12, limit=200)
    return val


def verify_lemma(psi: Callable, nu: Callable, grid: TimeGrid, psi_t: Optional[Callable] = None,
                 return_forms: bool = False):
    """Differentiate ``I(t) = int_0^t Psi(t,t') nu(t') / sqrt(2 pi (t-t')) dt'`` three ways.

    1. a fourth-order finite difference of ``I`` itself;
    2. ``nu(t)/sqrt(2 pi t) + 1/2 int (nu(t) - (Psi - 2 s Psi_t) nu(t')) / sqrt(2 pi s^3)``;
    3. ``int d/dt' [(Psi - 2 s Psi_t) nu](t') / sqrt(2 pi s)`` plus the endpoint term
       ``(Psi(t,0) - 2 t Psi_t(t,0)) nu(0) / sqrt(2 pi t)``,

    with ``s = t - t'`` and ``Psi(t, t) = 1``. Evaluated at every node after
    the first; returns the largest pairwise discrepancy. ``psi`` and ``nu``
    must be evaluable slightly outside ``[t0, T]`` for the difference stencils.
    """
    t0 = grid.start
    if psi_t is None:
        def psi_t(t, tp):
            return _d4(lambda u: psi(u, tp), t, 1e-3 * max(abs(t), 1e-3))

    def integral(t):
        return _alg_quad(lambda tp: psi(t, tp) * nu(tp), t0, t) / SQRT_2PI

    def chi(t, tp):
        return (psi(t, tp) - 2.0 * (t - tp) * psi_t(t, tp)) * nu(tp)

    worst = 0.0
    forms = []
    for t in grid.nodes[1:]:
        t = float(t)
        direct = _d4(integral, t, 1e-3 * (t - t0))
        nut = nu(t)

        def first_integrand(tp):
            # the quotient is smooth but cancels badly right at the endpoint
            s = max(t - tp, 1e-7 * (t - t0))
            return (nut - chi(t, t - s)) / s

        first = nut / math.sqrt(2 * math.pi * (t - t0)) + 0.5 * _alg_quad(first_integrand, t0, t) / SQRT_2PI
        h = 1e-4 * max(t - t0, 1e-3)
        alt = _alg_quad(lambda tp: _d4(lambda u: chi(t, u), tp, h), t0, t) / SQRT_2PI
        alt += chi(t, t0) / math.sqrt(2 * math.pi * (t - t0))
        vals = (direct, first, alt)
        forms.append(vals)
        worst = max(worst, abs(direct - first), abs(direct - alt), abs(first - alt))
    if return_forms:
        return worst, np.array(forms)
    return worst


def solve_above(boundary: BoundaryCurve, f: Callable, grid: TimeGrid) -> SampledSeries:
    """Convenience: assemble and solve the above-orientation system."""
    return solve_linear(assemble_dirichlet_above(boundary, f), grid)


def solve_below(boundary: BoundaryCurve, f: Callable, grid: TimeGrid) -> SampledSeries:
    return solve_linear(assemble_dirichlet_below(boundary, f), grid)
