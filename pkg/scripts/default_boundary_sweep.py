"""Calibrated default barriers for several intensities, both closures, and the small-tau limit."""
import numpy as np

from _common import save
from heatpot.default_boundary import (DIFFERENTIAL, INTEGRATED, CalibrationInput, calibrate,
                                      continuation_limit, forward_default_probability)

TAU, T, N = 0.01, 10.0, 1000

for eta in (0.01, 0.05, 0.09, 0.2):
    cb = calibrate(CalibrationInput(eta, TAU, T, N, INTEGRATED))
    pi, g = forward_default_probability(cb.boundary, cb.b.grid)
    save(f"default_boundary_eta{eta:g}.csv", dict(eta=eta, tau=TAU, T=T, N=N),
         ["t", "b", "pi", "g"], [cb.b.t, cb.b.values, pi.values, g.values])

runs = {f: calibrate(CalibrationInput(0.09, TAU, 5.0, 500, f)) for f in (DIFFERENTIAL, INTEGRATED)}
gap = np.max(np.abs(runs[DIFFERENTIAL].b.values - runs[INTEGRATED].b.values))
save("default_boundary_forms.csv", dict(eta=0.09, tau=TAU, T=5.0, N=500), ["t", "b_rate", "b_mass"],
     [runs[INTEGRATED].b.t, runs[DIFFERENTIAL].b.values, runs[INTEGRATED].b.values],
     {"sup_gap": f"{gap:.3e}"})

res = continuation_limit(0.05, (0.01, 0.001, 0.0005), 5.0, 500)
common = np.linspace(0.1, 5.0, 491)
cols = [common] + [np.interp(common, cb.b.t, cb.b.values) for cb in res.boundaries.values()]
save("default_boundary_small_tau.csv", dict(eta=0.05, taus="0.01,0.001,0.0005", T=5.0, N=500),
     ["t"] + [f"b_tau{v:g}" for v in res.taus], cols,
     {f"dist_{a:g}_{b:g}": f"{d:.3e}" for (a, b), d in res.distances.items()})
