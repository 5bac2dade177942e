"""Acceptance suite: thirteen numbered checks with fixed tolerances.

Each check returns a :class:`Check`; :func:`run_all` runs them in order and
``heatpot verify`` prints the table.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
from scipy import special

from .cherkasov import ou_spec, to_wiener, transform_boundary
from .core import ExponentialPair, Flat, Sinusoid, make_graded_grid, make_uniform_grid
from .default_boundary import (DIFFERENTIAL, INTEGRATED, CalibrationInput, calibrate,
                               continuation_limit, forward_default_probability)
from .mc_oracle import OU, McConfig, first_passage, meanfield_particles
from .meanfield import MeanFieldParams, analytic_alpha_zero
from .meanfield import solve as solve_meanfield
from .neuron import NeuronParams, check_normalization, derivative_jump, solve_stationary
from .ou_hitting import OUHittingInput, abel_relative_gap, images_zero_boundary, solve_general
from .potentials import verify_lemma
from .specfun import std_normal_cdf
from .stefan import StefanParams, convolution_oracle, small_alpha_reference
from .stefan import solve as solve_stefan
from .volterra import WeaklySingularSystem, discrete_residual, solve_linear

MC_SEED = 20240601


@dataclass
class Check:
    number: int
    title: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.number:2d}. {self.title}: {self.detail} ({self.seconds:.1f} s)"


def neuron_rate() -> Check:
    prof = solve_stationary(NeuronParams(X0=-1.0, m0=0.5, m1=0.1))
    norm = check_normalization(prof)
    jump = derivative_jump(prof) + 2 * prof.lam
    ok = abs(prof.lam - 1.4002) <= 1e-3 and norm <= 1e-8 and abs(jump) <= 1e-6
    return Check(1, "neuron firing rate", ok,
                 f"lambda={prof.lam:.6f} (target 1.4002 +- 1e-3), normalization {norm:.1e}, "
                 f"jump + 2 lambda = {jump:.1e}")


def ou_images() -> Check:
    d = solve_general(OUHittingInput(2.0, Flat(0.0), 2.0), 500)
    ref = images_zero_boundary(2.0, d.cdf.grid)
    err = float(np.max(np.abs(d.cdf.values - ref.cdf.values)))
    return Check(2, "OU hitting cdf vs images", err <= 1e-3, f"max cdf error {err:.2e} (<= 1e-3)")


def meanfield_alpha_zero() -> Check:
    s = solve_meanfield(MeanFieldParams(0.0, 0.5, 5.0, 500))
    mu, nu, _ = analytic_alpha_zero(0.5, s.mu.grid)
    m = s.mu.t >= 0.1
    e_mu = float(np.max(np.abs(s.mu.values[m] / mu.values[m] - 1)))
    e_nu = float(np.max(np.abs(s.nu.values[m] / nu.values[m] - 1)))
    ok = e_mu <= 1e-3 and e_nu <= 1e-3
    return Check(3, "mean field alpha=0 closed form", ok,
                 f"relative error mu {e_mu:.2e}, nu {e_nu:.2e} on [0.1, 5] (<= 1e-3)")


def newton_quality() -> Check:
    s = solve_meanfield(MeanFieldParams(0.6, 0.5, 5.0, 500))
    r = s.report.max_residual
    ok = s.report.converged and r <= 1e-10
    return Check(4, "Newton residuals alpha=0.6", ok,
                 f"max step residual {r:.1e} (<= 1e-10), converged={s.report.converged}")


def default_round_trip() -> Check:
    runs = {form: calibrate(CalibrationInput(0.09, 0.01, 5.0, 500, form))
            for form in (DIFFERENTIAL, INTEGRATED)}
    errs = {}
    for form, cb in runs.items():
        pi, _ = forward_default_probability(cb.boundary, cb.b.grid)
        target = -np.expm1(-0.09 * cb.b.t)
        errs[form] = float(np.max(np.abs(pi.values - target))) if cb.report.converged else math.inf
    gap = float(np.max(np.abs(runs[DIFFERENTIAL].b.values - runs[INTEGRATED].b.values)))
    ok = max(errs.values()) <= 5e-3 and gap <= 1e-2
    return Check(5, "default boundary round trip", ok,
                 f"round trip differential {errs[DIFFERENTIAL]:.1e}, integrated "
                 f"{errs[INTEGRATED]:.1e} (<= 5e-3); form gap {gap:.1e} (<= 1e-2)")


def continuation() -> Check:
    res = continuation_limit(0.05, (0.01, 0.001, 0.0005), 5.0, 500, t_min=0.1)
    worst = max(res.distances.values()) if res.distances else math.inf
    ok = not res.failures and len(res.distances) == 3 and worst <= 1e-2
    return Check(6, "small-tau continuation", ok,
                 f"max pairwise distance on t >= 0.1: {worst:.1e} (<= 1e-2), failures {res.failures}")


def phase_transition() -> Check:
    times = [solve_meanfield(MeanFieldParams(1.2, 0.5, 5.0, N)).blowup_time for N in (1000, 2000)]
    finite = all(t is not None and math.isfinite(t) for t in times)
    stable = finite and abs(times[1] - times[0]) <= 0.1 * times[0]
    sub = solve_meanfield(MeanFieldParams(0.2, 0.5, 5.0, 500))
    LT = float(sub.L.values[-1])
    ok = stable and sub.report.converged and sub.blowup_time is None and LT < 1 - 1e-3
    return Check(7, "phase transition", ok,
                 f"alpha=1.2 blow-up at {times} (dt halving, within 10%); alpha=0.2 L(5)={LT:.4f}")


def mc_cross_checks() -> Check:
    parts = []
    ok = True
    cfg = McConfig(100_000, 1e-3, MC_SEED)
    for a in (0.2, 0.6):
        s = solve_meanfield(MeanFieldParams(a, 0.5, 2.0, 1000))
        e = meanfield_particles(a, 0.5, [2.0], cfg)
        zs = (s.L.values[-1] - e.values[0]) / e.se[0]
        ok &= bool(abs(zs) <= 3)
        parts.append(f"L(2) alpha={a}: {s.L.values[-1]:.4f} vs {e.values[0]:.4f} ({zs:+.1f} SE)")
    b = Sinusoid(0.0, 0.2, 10.0)
    d = solve_general(OUHittingInput(2.0, b, 2.0), 2000)
    G = float(d.resample([2.0])[1][0])
    e = first_passage(OU, b, 2.0, [2.0], cfg)
    zs = (G - e.values[0]) / e.se[0]
    ok &= bool(abs(zs) <= 3)
    parts.append(f"OU sinusoid cdf(2): {G:.4f} vs {e.values[0]:.4f} ({zs:+.1f} SE)")
    return Check(8, "Monte Carlo cross-checks", ok, "; ".join(parts))


def abel_closed_form() -> Check:
    gap, theta, nu, ref = abel_relative_gap(1.0, 2.0, 2000, 0.1)
    return Check(9, "flat OU density vs Abel closed form", gap <= 1e-2,
                 f"max relative error {gap:.2e} for theta <= 0.1 (<= 1e-2)")


def lemma() -> Check:
    g = make_uniform_grid(1.0, 800)
    d1 = verify_lemma(lambda t, tp: 1.0, lambda t: 1.0, g)
    d2 = verify_lemma(lambda t, tp: math.exp(-(t - tp)), lambda t: t, g,
                      psi_t=lambda t, tp: -math.exp(-(t - tp)))
    ok = max(d1, d2) <= 1e-6
    return Check(10, "layer-integral derivative identity", ok,
                 f"max discrepancy {d1:.1e} (Psi=1, nu=1), {d2:.1e} (Psi=exp, nu=t) (<= 1e-6)")


def stefan() -> Check:
    s0 = solve_stefan(StefanParams(0.0, 1.0, T=1.0, N=400))
    zero = bool(np.all(s0.b.values == 0.0))
    # the small-alpha reference rests on int_0^t H(s, z)/sqrt(2 pi (t - s)) ds = N(-z/sqrt(t))
    conv = max(abs(convolution_oracle(z, t) - float(std_normal_cdf(-z / math.sqrt(t))))
               for z, t in ((1.0, 1.0), (0.5, 2.0), (2.0, 0.3)))
    s = solve_stefan(StefanParams(0.01, 1.0, T=1.0, N=400))
    ref = small_alpha_reference(0.01, 1.0, s.b.grid).values[-1]
    rel = abs(s.b.values[-1] / ref - 1)
    fam = [solve_stefan(StefanParams(a, 1.0, T=1.0, N=400)).b.values for a in (0.1, 0.2, 0.5, 1.0)]
    order = all(np.all(np.abs(hi) >= np.abs(lo) - 1e-12) for lo, hi in zip(fam, fam[1:]))
    ok = zero and conv <= 1e-10 and rel <= 0.05 and order
    return Check(11, "Stefan problem", ok,
                 f"alpha=0 b=0: {zero}; linearisation oracle gap {conv:.1e}; alpha=0.01 relative "
                 f"gap at t=1 {rel:.2%} (<= 5%); alpha ordering {order}")


def cherkasov() -> Check:
    worst = 0.0
    for t in (0.1, 0.7, 1.5):
        for x in (-1.0, 0.3, 2.0):
            img = to_wiener(ou_spec(), t, x)
            worst = max(worst, abs(img.t - math.expm1(2 * t) / 2), abs(img.x - math.exp(t) * x))
    A, B = 1.0, 1.0
    img = transform_boundary(ou_spec(), ExponentialPair(A, B), make_uniform_grid(1.0, 50))
    bgap = float(np.max(np.abs(img.values - (2 * B * img.nodes + A + B))))
    ok = worst <= 1e-8 and bgap <= 1e-8
    return Check(12, "Cherkasov reduction of OU", ok,
                 f"map error {worst:.1e}; exponential-pair boundary error {bgap:.1e} (<= 1e-8)")


def _constant_kernel(xi, f=lambda t: np.ones_like(t)):
    return WeaklySingularSystem(kernel=lambda t, tp: np.full(np.shape(tp), xi), rhs=f)


def generic_solver() -> Check:
    runs = [(_constant_kernel(1.0), make_uniform_grid(1.0, 200)),
            (_constant_kernel(-2.0), make_uniform_grid(1.0, 400)),
            (_constant_kernel(0.7, lambda t: np.cos(2 * t)), make_graded_grid(1.0, 300, 2.0)),
            (WeaklySingularSystem(kernel=lambda t, tp: np.cos(t - tp) + 0.3 * tp,
                                  rhs=lambda t: np.exp(-t) + t), make_graded_grid(2.0, 250, 1.5))]
    worst = 0.0
    for sys_, g in runs:
        nu = solve_linear(sys_, g)
        scale = max(1.0, float(np.abs(nu.values).max()))
        worst = max(worst, float(np.abs(discrete_residual(sys_, g, nu)).max()) / scale)
    def exact(t):
        return special.erfcx(np.sqrt(math.pi * t))

    common, nodewise = [], []
    for n in (50, 100, 200, 400, 800):
        g = make_uniform_grid(1.0, n)
        v = solve_linear(_constant_kernel(1.0), g).values
        common.append(np.abs(v[:: n // 50] - exact(g.nodes[:: n // 50])).max())
        nodewise.append(np.abs(v - exact(g.nodes)).max())
    rc = np.array(common[:-1]) / np.array(common[1:])
    rn = np.array(nodewise[:-1]) / np.array(nodewise[1:])
    ok = worst <= 1e-13 and bool(np.all(rc >= 2.0))
    return Check(13, "generic Volterra solver", ok,
                 f"max scaled discrete residual {worst:.1e} (<= 1e-13); doubling ratios at common "
                 f"times {np.round(rc, 2).tolist()} (>= 2), nodewise {np.round(rn, 2).tolist()}")


CHECKS: Dict[int, Callable[[], Check]] = {
    1: neuron_rate, 2: ou_images, 3: meanfield_alpha_zero, 4: newton_quality,
    5: default_round_trip, 6: continuation, 7: phase_transition, 8: mc_cross_checks,
    9: abel_closed_form, 10: lemma, 11: stefan, 12: cherkasov, 13: generic_solver,
}


def run_check(number: int) -> Check:
    t0 = time.perf_counter()
    try:
        c = CHECKS[number]()
    except Exception as exc:  # a crash is a failed check, not a crashed suite
        c = Check(number, CHECKS[number].__name__, False, f"raised {type(exc).__name__}: {exc}")
    c.seconds = time.perf_counter() - t0
    return c


def run_all(numbers: Optional[Sequence[int]] = None, echo: Optional[Callable[[str], None]] = None) -> List[Check]:
    out = []
    for k in (sorted(CHECKS) if numbers is None else numbers):
        c = run_check(k)
        if echo is not None:
            echo(c.line())
        out.append(c)
    return out
