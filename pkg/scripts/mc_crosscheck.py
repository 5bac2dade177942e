"""Monte Carlo against the integral-equation solvers (particle system and OU first passage)."""
import numpy as np

from _common import save
from heatpot.core import Sinusoid
from heatpot.mc_oracle import OU, McConfig, first_passage, meanfield_particles
from heatpot.meanfield import MeanFieldParams, solve
from heatpot.ou_hitting import OUHittingInput, solve_general

cfg = McConfig(100_000, 1e-3, seed=7)
t = np.linspace(0.0, 2.0, 21)
cols, names = [t], ["t"]
for a in (0.2, 0.4, 0.6):
    s = solve(MeanFieldParams(a, 0.5, 2.0, 1000))
    e = meanfield_particles(a, 0.5, t, cfg)
    cols += [np.interp(t, s.L.t, s.L.values), e.values, e.se]
    names += [f"L_alpha{a:g}", f"L_mc_alpha{a:g}", f"se_alpha{a:g}"]
save("mc_meanfield.csv", dict(z=0.5, paths=cfg.paths, dt=cfg.dt), names, cols)

b = Sinusoid(0.0, 0.2, 10.0)
G = solve_general(OUHittingInput(2.0, b, 2.0), 2000).resample(t)[1]
e = first_passage(OU, b, 2.0, t, cfg)
save("mc_ou_sinusoid.csv", dict(z=2.0, boundary="sin:0,0.2,10", paths=cfg.paths, dt=cfg.dt),
     ["t", "cdf", "cdf_mc", "se"], [t, G, e.values, e.se])
