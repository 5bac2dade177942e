"""Stationary integrate-and-fire profiles and firing rates."""
import numpy as np

from _common import save
from heatpot.neuron import NeuronParams, evaluate_profile, solve_stationary

x = np.linspace(-4.0, 0.0, 801)
cols, names, rates = [x], ["x"], {}
for m1 in (0.0, 0.1, 0.3):
    prof = solve_stationary(NeuronParams(-1.0, 0.5, m1))
    cols.append(evaluate_profile(prof, x)[0])
    names.append(f"p_m1_{m1:g}")
    rates[f"lambda_m1_{m1:g}"] = f"{prof.lam:.10g}"
save("neuron_profiles.csv", dict(X0=-1.0, m0=0.5), names, cols, rates)
